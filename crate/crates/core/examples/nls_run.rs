//! One LOD simulation of the first example with energy tracking.
//!
//! cargo run --example nls_run -- [coarse] [fine] [tau] [layers]

use lod_nls::experiments::{run_single, ExperimentConfig};
use lod_nls::lod::Layers;

fn main() -> lod_nls::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let coarse: usize = arg(0, "4").parse().expect("coarse cells per side");
    let mut cfg = ExperimentConfig::for_example(1);
    cfg.discretization.fine = arg(1, "64").parse().expect("fine cells per side");
    cfg.discretization.tau = arg(2, "1e-2").parse().expect("time step");
    cfg.output.use_cache = false;
    let layers: Layers = arg(3, "sat").parse()?;

    let out = run_single(&cfg, coarse, layers, None)?;
    let last = out.summary.energy.last().expect("energy is recorded");
    println!("H = 1/{coarse}, h = 1/{}, tau = {}, layers = {layers}", cfg.discretization.fine, cfg.discretization.tau);
    println!("steps: {}, Picard iterations max {} mean {:.2}", out.summary.levels - 1, out.summary.iterations.max(), out.summary.iterations.mean());
    println!("E^0 = {:.12e}, E^N = {:.12e}, relative drift {:.3e}", out.summary.energy[0].energy, last.energy, out.drift);
    if let Some(e) = out.final_errors {
        println!("errors at T: L2 {:.4e}  L4 {:.4e}  H1 {:.4e}", e.l2, e.l4, e.h1);
    }
    println!("max |u| {:.6} (initial {:.6}), {:.2} s", out.summary.max_modulus, out.summary.initial_max_modulus, out.runtime_s);
    Ok(())
}
