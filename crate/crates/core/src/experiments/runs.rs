//! Building spaces from a config and running single simulations, energy
//! studies and localization studies.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::conservation::{relative_drift, write_energy_csv, EnergyRecord};
use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, SpaceChoice};
use crate::experiments::reference::ReferenceTrajectory;
use crate::fem::{norm_integrals, prolong, NormKind};
use crate::lod::{build_lod_basis, localization_decay_study, BasisCache, BilinearFormSpec, DecayRow, Layers, Shift};
use crate::mesh::{build_structured_mesh, refine, Mesh, RefinementMap};
use crate::problem::{ExactSolution, ProblemSpec};
use crate::time::{run, DiscreteSpace, RunOptions, RunSummary, SnapshotWriter, StepHook};

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// A discrete space together with the coarse/fine pair it lives on.
pub struct BuiltSpace {
    pub space: DiscreteSpace,
    pub refmap: RefinementMap,
    /// Whether the LOD basis came from the cache.
    pub cache_hit: bool,
}

impl BuiltSpace {
    pub fn fine_mesh(&self) -> &Mesh {
        self.refmap.fine()
    }

    /// Nodal values of `x` on the fine mesh.
    pub fn fine_values(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let full = self.space.to_fine(x)?;
        match self.space.kind() {
            crate::time::SpaceKind::Lod => Ok(full),
            crate::time::SpaceKind::FineFem => prolong(&full, &self.refmap),
        }
    }
}

pub fn build_space(
    problem: &ProblemSpec,
    coarse: usize,
    fine: usize,
    choice: SpaceChoice,
    layers: Layers,
    cache: Option<&BasisCache>,
) -> Result<BuiltSpace> {
    if coarse == 0 || fine % coarse != 0 {
        return Err(Error::InvalidArgument(format!(
            "fine size 1/{fine} is not a refinement of 1/{coarse}"
        )));
    }
    let coarse_mesh = build_structured_mesh(coarse)?;
    let refmap = refine(&coarse_mesh, fine / coarse)?;
    let form = BilinearFormSpec::new(problem.b.clone(), problem.v.clone(), Shift::Auto);
    match choice {
        SpaceChoice::Lod => {
            let (basis, cache_hit) = match cache {
                Some(c) => c.get_or_build(&refmap, &form, layers)?,
                None => (build_lod_basis(&refmap, &form, layers)?, false),
            };
            let assembled = form.assemble(refmap.fine())?;
            let space = DiscreteSpace::lod(basis, refmap.fine().clone(), assembled)?;
            Ok(BuiltSpace {
                space,
                refmap,
                cache_hit,
            })
        }
        SpaceChoice::CoarseFem => {
            let assembled = form.assemble(&coarse_mesh)?;
            let space = DiscreteSpace::fine_fem(coarse_mesh, assembled)?;
            Ok(BuiltSpace {
                space,
                refmap,
                cache_hit: false,
            })
        }
    }
}

/// Error norms of one approximation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub l4: f64,
    /// Full `H¹` norm.
    pub h1: f64,
}

impl ErrorNorms {
    fn from_integrals(i: [f64; 3]) -> Self {
        ErrorNorms {
            l2: NormKind::L2.from_integrals(i),
            l4: NormKind::L4.from_integrals(i),
            h1: NormKind::H1.from_integrals(i),
        }
    }

    fn divide(self, d: ErrorNorms) -> Self {
        ErrorNorms {
            l2: self.l2 / d.l2,
            l4: self.l4 / d.l4,
            h1: self.h1 / d.h1,
        }
    }

    pub fn max(self, o: ErrorNorms) -> Self {
        ErrorNorms {
            l2: self.l2.max(o.l2),
            l4: self.l4.max(o.l4),
            h1: self.h1.max(o.h1),
        }
    }
}

/// What errors are measured against.
#[derive(Clone, Copy)]
pub enum ErrorTarget<'a> {
    Exact(&'a ExactSolution),
    Reference(&'a ReferenceTrajectory),
}

impl ErrorTarget<'_> {
    /// Errors of the fine nodal values `u` at time `t`; `None` if the
    /// reference has no sample there.
    pub fn errors(&self, mesh: &Mesh, u: &[Complex64], t: f64, relative: bool) -> Result<Option<ErrorNorms>> {
        match self {
            ErrorTarget::Exact(ex) => {
                let at = ex.at(t);
                let e = ErrorNorms::from_integrals(norm_integrals(mesh, u, Some(&at), true)?);
                if !relative {
                    return Ok(Some(e));
                }
                let zero = vec![Complex64::new(0.0, 0.0); u.len()];
                let d = ErrorNorms::from_integrals(norm_integrals(mesh, &zero, Some(&at), true)?);
                Ok(Some(e.divide(d)))
            }
            ErrorTarget::Reference(r) => {
                let Some(k) = r.find(t) else { return Ok(None) };
                let refv = &r.values[k];
                if refv.len() != u.len() {
                    return Err(Error::DimensionMismatch {
                        expected: refv.len(),
                        got: u.len(),
                    });
                }
                let diff: Vec<Complex64> = u.iter().zip(refv).map(|(a, b)| a - b).collect();
                let e = ErrorNorms::from_integrals(norm_integrals(mesh, &diff, None, false)?);
                if !relative {
                    return Ok(Some(e));
                }
                let d = ErrorNorms::from_integrals(norm_integrals(mesh, refv, None, false)?);
                Ok(Some(e.divide(d)))
            }
        }
    }
}

/// Outcome of [`run_single`].
pub struct SingleRun {
    pub summary: RunSummary,
    /// `max_n |Eⁿ − E⁰| / |E⁰|`.
    pub drift: f64,
    /// Errors at the final time against the exact solution, if known.
    pub final_errors: Option<ErrorNorms>,
    pub runtime_s: f64,
    pub cache_hit: bool,
}

/// One run with energy tracking. Writes `energy.csv` and, if enabled,
/// snapshots into `out_dir`.
pub fn run_single(cfg: &ExperimentConfig, coarse: usize, layers: Layers, out_dir: Option<&Path>) -> Result<SingleRun> {
    let problem = cfg.problem()?;
    let start = Instant::now();
    let cache = cfg.output.use_cache.then(|| BasisCache::new(cfg.cache_dir()));
    let built = build_space(
        &problem,
        coarse,
        cfg.discretization.fine,
        cfg.discretization.space,
        layers,
        cache.as_ref(),
    )?;
    let opts = RunOptions {
        tau: cfg.tau_for(coarse),
        final_time: problem.final_time,
        solver: cfg.solver.options(),
        energy: Some(cfg.output.energy_convention),
    };
    let mut writer = match (out_dir, cfg.output.snapshot_every) {
        (Some(dir), every) if every > 0 => Some(SnapshotWriter::new(dir.join("snapshots"), every, opts.tau)?),
        _ => None,
    };
    let summary = {
        let mut hooks: Vec<&mut dyn StepHook> = Vec::new();
        if let Some(w) = writer.as_mut() {
            hooks.push(w);
        }
        run(&problem, &built.space, &opts, &mut hooks)?
    };
    if let Some(w) = writer {
        w.finish()?;
    }
    let final_errors = match &problem.exact {
        Some(ex) => {
            let u = built.fine_values(&summary.state.u_curr)?;
            ErrorTarget::Exact(ex).errors(built.fine_mesh(), &u, summary.state.time(), false)?
        }
        None => None,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let f = std::fs::File::create(dir.join("energy.csv"))?;
        write_energy_csv(std::io::BufWriter::new(f), &summary.energy)?;
    }
    Ok(SingleRun {
        drift: relative_drift(&summary.energy),
        final_errors,
        summary,
        runtime_s: start.elapsed().as_secs_f64(),
        cache_hit: built.cache_hit,
    })
}

/// Energy drift for one layer count.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyStudyRow {
    pub layers: String,
    pub max_drift: f64,
    pub initial_energy: f64,
    #[serde(skip)]
    pub records: Vec<EnergyRecord>,
}

/// Runs the same problem for every layer count and records the energy.
/// Writes `energy_study.csv` and one `energy_ell<ℓ>.csv` per row.
pub fn energy_study(
    cfg: &ExperimentConfig,
    coarse: usize,
    layers: &[Layers],
    out_dir: Option<&Path>,
) -> Result<Vec<EnergyStudyRow>> {
    let mut rows = Vec::with_capacity(layers.len());
    for &l in layers {
        let run = run_single(cfg, coarse, l, None)?;
        let records = run.summary.energy;
        if let Some(dir) = out_dir {
            std::fs::create_dir_all(dir)?;
            let f = std::fs::File::create(dir.join(format!("energy_ell{l}.csv")))?;
            write_energy_csv(std::io::BufWriter::new(f), &records)?;
        }
        rows.push(EnergyStudyRow {
            layers: l.to_string(),
            max_drift: run.drift,
            initial_energy: records.first().map_or(f64::NAN, |r| r.energy),
            records,
        });
    }
    if let Some(dir) = out_dir {
        let mut text = String::from("ell,max_drift,E0\n");
        for r in &rows {
            text.push_str(&format!("{},{:.5e},{:.5e}\n", r.layers, r.max_drift, r.initial_energy));
        }
        std::fs::write(dir.join("energy_study.csv"), text)?;
    }
    Ok(rows)
}

/// Distance of localized Ritz projections of the initial value from the
/// ideal one. Writes `decay.csv`.
pub fn decay_study(cfg: &ExperimentConfig, coarse: usize, layers: &[usize], out_dir: Option<&Path>) -> Result<Vec<DecayRow>> {
    let problem = cfg.problem()?;
    let fine = cfg.discretization.fine;
    if coarse == 0 || fine % coarse != 0 {
        return Err(Error::InvalidArgument(format!(
            "fine size 1/{fine} is not a refinement of 1/{coarse}"
        )));
    }
    let refmap = refine(&build_structured_mesh(coarse)?, fine / coarse)?;
    let form = BilinearFormSpec::new(problem.b.clone(), problem.v.clone(), Shift::Auto);
    let u: Vec<Complex64> = refmap.fine().nodes().iter().map(|p| problem.u0.value(p[0], p[1])).collect();
    let rows = localization_decay_study(&refmap, &form, layers.iter().copied(), &u)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut text = String::from("ell,error_L2,error_energy\n");
        for r in &rows {
            text.push_str(&format!("{},{:.5e},{:.5e}\n", r.layers, r.error_l2, r.error_energy));
        }
        std::fs::write(dir.join("decay.csv"), text)?;
    }
    Ok(rows)
}
