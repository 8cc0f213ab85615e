//! Fine-mesh reference trajectories for examples without a closed form.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::config::{hex, ExperimentConfig};
use crate::lod::{BilinearFormSpec, Shift};
use crate::mesh::build_structured_mesh;
use crate::problem::ProblemSpec;
use crate::time::{read_snapshots, run, steps_for, DiscreteSpace, RunOptions, SolverOptions, StepView};

/// Fine nodal values of a fine P1 run at the sampled levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub fine_side: usize,
    pub tau: f64,
    pub steps: Vec<usize>,
    pub values: Vec<Vec<Complex64>>,
}

impl ReferenceTrajectory {
    pub fn time(&self, k: usize) -> f64 {
        self.steps[k] as f64 * self.tau
    }

    /// Index of the sample at time `t`, if any.
    pub fn find(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.tau.abs().max(1.0);
        (0..self.steps.len()).find(|&k| (self.time(k) - t).abs() <= tol)
    }

    pub fn last(&self) -> &[Complex64] {
        self.values.last().expect("a trajectory holds at least the initial level")
    }
}

/// Levels kept out of `n_steps`: every `⌈n_steps / samples⌉`-th one, the
/// initial level and the final one.
pub fn sample_steps(n_steps: usize, samples: usize) -> Vec<usize> {
    let stride = n_steps.div_ceil(samples.max(1)).max(1);
    let mut s: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if s.last() != Some(&n_steps) {
        s.push(n_steps);
    }
    s
}

/// Fine P1 run of `problem` on `1/fine_side` with step `tau`.
pub fn reference_solution(
    problem: &ProblemSpec,
    fine_side: usize,
    tau: f64,
    solver: SolverOptions,
    samples: usize,
) -> Result<ReferenceTrajectory> {
    let n_steps = steps_for(problem.final_time, tau)?;
    let keep = sample_steps(n_steps, samples);
    let mesh = build_structured_mesh(fine_side)?;
    let form = BilinearFormSpec::new(problem.b.clone(), problem.v.clone(), Shift::Auto);
    let assembled = form.assemble(&mesh)?;
    let space = DiscreteSpace::fine_fem(mesh, assembled)?;
    let mut traj = ReferenceTrajectory {
        fine_side,
        tau,
        steps: vec![0],
        values: vec![space.to_fine(&space.initial_value(&problem.u0)?)?],
    };
    let mut hook = |view: &StepView<'_>| -> Result<()> {
        if keep.binary_search(&view.n).is_ok() {
            traj.steps.push(view.n);
            traj.values.push(view.space.to_fine(view.next)?);
        }
        Ok(())
    };
    let opts = RunOptions {
        tau,
        final_time: problem.final_time,
        solver,
        energy: None,
    };
    run(problem, &space, &opts, &mut [&mut hook])?;
    Ok(traj)
}

#[derive(Serialize, Deserialize)]
struct ReferenceMeta {
    key: String,
    fine_side: usize,
    tau: f64,
    steps: Vec<usize>,
}

/// Cache key of the reference for `cfg`: everything that changes the
/// fine trajectory.
pub fn reference_key(cfg: &ExperimentConfig) -> String {
    let p = &cfg.problem;
    let desc = serde_json::json!({
        "version": 1,
        "example": p.example,
        "seed": p.seed,
        "center_domain": p.center_domain,
        "final_time": p.final_time,
        "nonlinearity": p.nonlinearity,
        "fine": cfg.discretization.fine,
        "tau": cfg.reference_tau(),
        "tol": cfg.solver.tol,
        "max_iters": cfg.solver.max_iters,
        "samples": cfg.discretization.samples,
    });
    hex(&Sha256::digest(desc.to_string().as_bytes()))
}

fn reference_dir(cache_dir: &Path, key: &str) -> PathBuf {
    cache_dir.join(format!("reference-{key}"))
}

/// Loads the cached reference for `cfg` or computes and stores it. The
/// flag reports a cache hit.
pub fn cached_reference(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<(ReferenceTrajectory, bool)> {
    let key = reference_key(cfg);
    if let Some(dir) = cache_dir {
        if let Ok(traj) = load_reference(&reference_dir(dir, &key), &key) {
            return Ok((traj, true));
        }
    }
    let traj = reference_solution(
        &cfg.problem()?,
        cfg.discretization.fine,
        cfg.reference_tau(),
        cfg.solver.options(),
        cfg.discretization.samples,
    )?;
    if let Some(dir) = cache_dir {
        store_reference(&reference_dir(dir, &key), &key, &traj)?;
    }
    Ok((traj, false))
}

fn store_reference(dir: &Path, key: &str, traj: &ReferenceTrajectory) -> Result<()> {
    let parent = dir.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(parent)?;
    let tmp = parent.join(format!(".tmp-{key}-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    let mut out = BufWriter::new(fs::File::create(tmp.join("snapshots.bin"))?);
    for (step, values) in traj.steps.iter().zip(&traj.values) {
        out.write_all(&(*step as u64).to_le_bytes())?;
        out.write_all(&(*step as f64 * traj.tau).to_le_bytes())?;
        out.write_all(&(values.len() as u64).to_le_bytes())?;
        for z in values {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    out.flush()?;
    drop(out);
    let meta = ReferenceMeta {
        key: key.to_string(),
        fine_side: traj.fine_side,
        tau: traj.tau,
        steps: traj.steps.clone(),
    };
    fs::write(tmp.join("reference.json"), serde_json::to_string_pretty(&meta)?)?;
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(())
}

fn load_reference(dir: &Path, key: &str) -> Result<ReferenceTrajectory> {
    let meta: ReferenceMeta = serde_json::from_str(&fs::read_to_string(dir.join("reference.json"))?)?;
    let records = read_snapshots(dir.join("snapshots.bin"))?;
    let n_nodes = (meta.fine_side + 1) * (meta.fine_side + 1);
    let consistent = meta.key == key
        && records.len() == meta.steps.len()
        && records.iter().zip(&meta.steps).all(|(r, &s)| r.0 == s && r.2.len() == n_nodes);
    if !consistent {
        return Err(Error::Cache {
            path: dir.to_path_buf(),
            detail: "reference does not match its metadata".into(),
        });
    }
    Ok(ReferenceTrajectory {
        fine_side: meta.fine_side,
        tau: meta.tau,
        steps: meta.steps,
        values: records.into_iter().map(|r| r.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_keeps_endpoints() {
        assert_eq!(sample_steps(10, 100), (0..=10).collect::<Vec<_>>());
        assert_eq!(sample_steps(1000, 100).len(), 101);
        assert_eq!(sample_steps(7, 3), vec![0, 3, 6, 7]);
    }

    #[test]
    fn cache_hit_is_bitwise_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::for_example(2);
        cfg.discretization.fine = 4;
        cfg.discretization.coarse = vec![2];
        cfg.problem.final_time = Some(0.1);
        let (a, hit_a) = cached_reference(&cfg, Some(dir.path())).unwrap();
        let (b, hit_b) = cached_reference(&cfg, Some(dir.path())).unwrap();
        assert!(!hit_a && hit_b);
        assert_eq!(a, b);
        assert_eq!(a.steps, (0..=10).collect::<Vec<_>>());
        assert!(a.find(0.1).is_some() && a.find(0.105).is_none());
    }
}
