//! Convergence tables over coarse mesh sizes.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::experiments::config::{ErrorMeasure, ExperimentConfig, LayerSpec, TauRule};
use crate::experiments::reference::{cached_reference, reference_key, sample_steps};
use crate::experiments::runs::{build_space, ErrorNorms, ErrorTarget};
use crate::lod::BasisCache;
use crate::problem::ProblemSpec;
use crate::time::{run, steps_for, RunOptions, StepView};

/// Observed orders between a row and the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Rates {
    pub l2: Option<f64>,
    pub l4: Option<f64>,
    pub h1: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    /// Coarse cells per side, `1/H`.
    pub coarse: usize,
    pub tau: f64,
    /// The layer setting as configured, which groups rows for rates.
    pub layer_spec: String,
    /// The layer count used.
    pub layers: String,
    /// Largest error over the sampled time levels.
    pub errors: Option<ErrorNorms>,
    /// Error at the final time.
    pub final_errors: Option<ErrorNorms>,
    pub rates: Rates,
    pub iterations_max: usize,
    pub iterations_mean: f64,
    pub cache_hit: bool,
    /// `ok` or the error that stopped the row.
    pub status: String,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub example: u32,
    pub measure: ErrorMeasure,
    pub tau_rule: TauRule,
    /// `exact` or `reference`.
    pub target: String,
    pub reference_key: Option<String>,
    pub reference_cache_hit: Option<bool>,
    pub rows: Vec<ConvergenceRow>,
}

pub const CSV_HEADER: &str = "n_coarse,H,tau,ell,err_L2,rate_L2,err_L4,rate_L4,err_H1,rate_H1,\
final_L2,final_L4,final_H1,iters_max,iters_mean,status,runtime_s";

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

impl ConvergenceReport {
    /// Fills in rates between consecutive rows of the same layer setting
    /// whose coarse sizes differ by a factor of two. Rates are orders in `H`
    /// for a fixed `τ` and orders in `τ` when `τ = H²`.
    pub fn compute_rates(&mut self) {
        for i in 0..self.rows.len() {
            self.rows[i].rates = Rates::default();
            if i == 0 {
                continue;
            }
            let (a, b) = (&self.rows[i - 1], &self.rows[i]);
            if a.layer_spec != b.layer_spec || b.coarse != 2 * a.coarse {
                continue;
            }
            let (Some(ea), Some(eb)) = (a.errors, b.errors) else { continue };
            let scale = match self.tau_rule {
                TauRule::Fixed => 2f64.ln(),
                TauRule::CoarseSquared => (a.tau / b.tau).ln(),
            };
            let rate = |x: f64, y: f64| {
                let r = (x / y).ln() / scale;
                r.is_finite().then_some(r)
            };
            self.rows[i].rates = Rates {
                l2: rate(ea.l2, eb.l2),
                l4: rate(ea.l4, eb.l4),
                h1: rate(ea.h1, eb.h1),
            };
        }
    }

    /// Writes the table; every float has six significant digits and the
    /// runtime is the last column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            let e = r.errors;
            let f = r.final_errors;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
                r.coarse,
                sci(1.0 / r.coarse as f64),
                sci(r.tau),
                r.layers,
                opt(e.map(|e| e.l2)),
                opt(r.rates.l2),
                opt(e.map(|e| e.l4)),
                opt(r.rates.l4),
                opt(e.map(|e| e.h1)),
                opt(r.rates.h1),
                opt(f.map(|e| e.l2)),
                opt(f.map(|e| e.l4)),
                opt(f.map(|e| e.h1)),
                r.iterations_max,
                sci(r.iterations_mean),
                csv_field(&r.status),
                r.runtime_s,
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }

    /// Gnuplot script drawing the error columns of `report.csv` against `H`
    /// on log-log axes.
    pub fn plot_script(&self) -> String {
        let what = match self.measure {
            ErrorMeasure::Absolute => "error",
            ErrorMeasure::Relative => "relative error",
        };
        format!(
            "set datafile separator ','\n\
             set terminal pngcairo size 900,600\n\
             set output 'report.png'\n\
             set logscale xy\n\
             set key left top\n\
             set xlabel 'H'\n\
             set ylabel '{what}'\n\
             set title 'Example {}'\n\
             plot 'report.csv' every ::1 using 2:5 with linespoints title 'L2', \\\n\
             \x20    '' every ::1 using 2:7 with linespoints title 'L4', \\\n\
             \x20    '' every ::1 using 2:9 with linespoints title 'H1'\n",
            self.example
        )
    }
}

impl ConvergenceReport {
    /// Writes `report.csv`, `plot.gp` and `manifest.json` into `dir`.
    pub fn write_outputs(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join("report.csv"))?))?;
        std::fs::write(dir.join("plot.gp"), self.plot_script())?;
        let runtimes: Vec<_> = self
            .rows
            .iter()
            .map(|r| serde_json::json!({"n_coarse": r.coarse, "ell": r.layers, "runtime_s": r.runtime_s, "status": r.status}))
            .collect();
        let details = serde_json::json!({
            "target": self.target,
            "measure": self.measure,
            "reference_key": self.reference_key,
            "reference_cache_hit": self.reference_cache_hit,
            "rows": runtimes,
        });
        write_manifest(dir, cfg, "converge", details, &["report.csv", "plot.gp"])
    }
}

/// Writes `manifest.json`: config hash, versions, seed and command details.
pub fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    command: &str,
    details: serde_json::Value,
    outputs: &[&str],
) -> Result<()> {
    let m = serde_json::json!({
        "tool": "lodnls",
        "crate_version": env!("CARGO_PKG_VERSION"),
        "config_version": cfg.version,
        "config_hash": cfg.hash(),
        "command": command,
        "example": cfg.problem.example,
        "seed": cfg.problem.seed,
        "threads": cfg.solver.threads,
        "outputs": outputs,
        "details": details,
    });
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Runs every `(ℓ, H)` row of `cfg`. A failed row records its error and
/// the study continues.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let cache_dir = cfg.output.use_cache.then(|| cfg.cache_dir());
    let use_reference = problem.exact.is_none() || cfg.reference.force;
    let reference = if use_reference {
        Some(cached_reference(cfg, cache_dir.as_deref())?)
    } else {
        None
    };
    let target = match (&reference, &problem.exact) {
        (Some((r, _)), _) => ErrorTarget::Reference(r),
        (None, Some(ex)) => ErrorTarget::Exact(ex),
        (None, None) => unreachable!("a reference is computed when no exact solution exists"),
    };
    let measure = cfg.error_measure(problem.exact.is_some() && !cfg.reference.force);
    let cache = cache_dir.map(BasisCache::new);
    let mut rows = Vec::new();
    for spec in &cfg.discretization.layers {
        for &coarse in &cfg.discretization.coarse {
            rows.push(run_row(cfg, &problem, coarse, *spec, target, measure, cache.as_ref()));
        }
    }
    let mut report = ConvergenceReport {
        example: cfg.problem.example,
        measure,
        tau_rule: cfg.discretization.tau_rule,
        target: if use_reference { "reference" } else { "exact" }.into(),
        reference_key: use_reference.then(|| reference_key(cfg)),
        reference_cache_hit: reference.as_ref().map(|r| r.1),
        rows,
    };
    report.compute_rates();
    Ok(report)
}

fn run_row(
    cfg: &ExperimentConfig,
    problem: &ProblemSpec,
    coarse: usize,
    spec: LayerSpec,
    target: ErrorTarget<'_>,
    measure: ErrorMeasure,
    cache: Option<&BasisCache>,
) -> ConvergenceRow {
    let start = Instant::now();
    let tau = cfg.tau_for(coarse);
    let layers = spec.resolve(coarse);
    let mut row = ConvergenceRow {
        coarse,
        tau,
        layer_spec: spec.to_string(),
        layers: layers.to_string(),
        errors: None,
        final_errors: None,
        rates: Rates::default(),
        iterations_max: 0,
        iterations_mean: 0.0,
        cache_hit: false,
        status: "ok".into(),
        runtime_s: 0.0,
    };
    let outcome = (|| -> Result<()> {
        let built = build_space(problem, coarse, cfg.discretization.fine, cfg.discretization.space, layers, cache)?;
        row.cache_hit = built.cache_hit;
        let n_steps = steps_for(problem.final_time, tau)?;
        let sampled = sample_steps(n_steps, cfg.discretization.samples);
        let relative = measure == ErrorMeasure::Relative;
        let mut worst: Option<ErrorNorms> = None;
        let mut last: Option<ErrorNorms> = None;
        let mut hook = |view: &StepView<'_>| -> Result<()> {
            let wanted = match target {
                ErrorTarget::Exact(_) => sampled.binary_search(&view.n).is_ok(),
                ErrorTarget::Reference(r) => r.find(view.t).is_some(),
            };
            if !wanted {
                return Ok(());
            }
            let u = built.fine_values(view.next)?;
            if let Some(e) = target.errors(built.fine_mesh(), &u, view.t, relative)? {
                worst = Some(worst.map_or(e, |w| w.max(e)));
                if view.n == n_steps {
                    last = Some(e);
                }
            }
            Ok(())
        };
        let opts = RunOptions {
            tau,
            final_time: problem.final_time,
            solver: cfg.solver.options(),
            energy: None,
        };
        let summary = run(problem, &built.space, &opts, &mut [&mut hook])?;
        row.errors = worst;
        row.final_errors = last;
        let it = &summary.iterations;
        row.iterations_max = it.max();
        row.iterations_mean = it.mean();
        Ok(())
    })();
    if let Err(e) = outcome {
        row.status = format!("{}: {e}", e.kind());
        row.errors = None;
        row.final_errors = None;
    }
    row.runtime_s = start.elapsed().as_secs_f64();
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::runs::ErrorNorms;

    fn row(coarse: usize, tau: f64, l2: f64) -> ConvergenceRow {
        ConvergenceRow {
            coarse,
            tau,
            layer_spec: "auto".into(),
            layers: "4".into(),
            errors: Some(ErrorNorms { l2, l4: l2, h1: l2 }),
            final_errors: None,
            rates: Rates::default(),
            iterations_max: 3,
            iterations_mean: 2.5,
            cache_hit: false,
            status: "ok".into(),
            runtime_s: 0.5,
        }
    }

    fn report(rows: Vec<ConvergenceRow>, rule: TauRule) -> ConvergenceReport {
        let mut r = ConvergenceReport {
            example: 1,
            measure: ErrorMeasure::Absolute,
            tau_rule: rule,
            target: "exact".into(),
            reference_key: None,
            reference_cache_hit: None,
            rows,
        };
        r.compute_rates();
        r
    }

    #[test]
    fn rates_in_h_and_tau() {
        let r = report(vec![row(2, 0.01, 1.6e-3), row(4, 0.01, 1e-4), row(16, 0.01, 1e-5)], TauRule::Fixed);
        assert_eq!(r.rows[0].rates.l2, None);
        assert!((r.rows[1].rates.l2.unwrap() - 4.0).abs() < 1e-12);
        // 4 → 16 is not a halving
        assert_eq!(r.rows[2].rates.l2, None);

        let r = report(vec![row(2, 0.25, 1.6e-3), row(4, 0.0625, 1e-4)], TauRule::CoarseSquared);
        assert!((r.rows[1].rates.l2.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_row_has_no_rates() {
        let r = report(vec![row(4, 0.01, 1e-3)], TauRule::Fixed);
        assert_eq!(r.rows[0].rates, Rates::default());
        let csv = r.to_csv_string();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.starts_with("4,2.50000e-1,1.00000e-2,4,1.00000e-3,,"));
        assert!(line.ends_with(",ok,0.500"));
    }

    #[test]
    fn failed_rows_break_rate_chains() {
        let mut failed = row(4, 0.01, 0.0);
        failed.errors = None;
        failed.status = "step_failure: no convergence, x".into();
        let r = report(vec![row(2, 0.01, 1e-3), failed, row(8, 0.01, 1e-5)], TauRule::Fixed);
        assert!(r.rows.iter().all(|x| x.rates == Rates::default()));
        assert!(r.to_csv_string().contains("\"step_failure: no convergence, x\""));
    }
}
