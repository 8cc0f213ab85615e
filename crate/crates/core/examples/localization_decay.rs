//! Exponential decay of the localization error with the number of patch
//! layers, for the rough coefficients of the fifth example.

use lod_nls::experiments::{decay_study, ExperimentConfig};

fn main() -> lod_nls::Result<()> {
    let mut cfg = ExperimentConfig::for_example(5);
    cfg.discretization.fine = 128;
    let rows = decay_study(&cfg, 8, &[1, 2, 3, 4, 5, 6], None)?;
    println!("layers   L2 distance   energy distance");
    for r in &rows {
        println!("{:>6}   {:.4e}    {:.4e}", r.layers, r.error_l2, r.error_energy);
    }
    Ok(())
}
