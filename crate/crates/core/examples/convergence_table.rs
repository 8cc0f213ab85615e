//! A small convergence table for the first example against its exact
//! solution, printed as CSV.

use lod_nls::experiments::{convergence_study, ExperimentConfig, LayerSpec};
use lod_nls::lod::Layers;

fn main() -> lod_nls::Result<()> {
    let mut cfg = ExperimentConfig::for_example(1);
    cfg.discretization.coarse = vec![2, 4, 8];
    cfg.discretization.fine = 64;
    cfg.discretization.tau = 1e-2;
    cfg.discretization.layers = vec![LayerSpec::Given(Layers::Saturated)];
    cfg.output.use_cache = false;
    let report = convergence_study(&cfg)?;
    print!("{}", report.to_csv_string());
    Ok(())
}
