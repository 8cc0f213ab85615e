//! Driving a full trajectory: starting step, repeated steps, hooks.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::space::DiscreteSpace;
use super::step::{SimulationState, SolverOptions, StepStats, Stepper};
use crate::conservation::{discrete_energy, EnergyConvention, EnergyRecord};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

/// Number of steps `N = T/τ`; non-integral ratios are rejected.
pub fn steps_for(final_time: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !(final_time > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need τ > 0 and T > 0, got τ = {tau}, T = {final_time}"
        )));
    }
    let n = (final_time / tau).round();
    if n < 1.0 || (n * tau - final_time).abs() > 1e-12 * final_time.max(1.0) {
        return Err(Error::InvalidArgument(format!("T = {final_time} is not an integer multiple of τ = {tau}")));
    }
    Ok(n as usize)
}

/// Three consecutive levels just after `u^{n}` (`next`) was computed.
pub struct StepView<'a> {
    /// Index of `next`.
    pub n: usize,
    pub t: f64,
    pub prev: &'a [Complex64],
    pub curr: &'a [Complex64],
    pub next: &'a [Complex64],
    pub stats: &'a StepStats,
    pub space: &'a DiscreteSpace,
}

/// Observer of a running trajectory. The first call has `n = 1`, with
/// `prev` holding the auxiliary level `u⁻¹ = u¹ − 2τ u_{1,H}`.
pub trait StepHook {
    fn start(&mut self, _u0: &[Complex64], _space: &DiscreteSpace) -> Result<()> {
        Ok(())
    }

    fn observe(&mut self, view: &StepView<'_>) -> Result<()>;
}

impl<F: FnMut(&StepView<'_>) -> Result<()>> StepHook for F {
    fn observe(&mut self, view: &StepView<'_>) -> Result<()> {
        self(view)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub tau: f64,
    pub final_time: f64,
    pub solver: SolverOptions,
    /// Record `E^n` with this convention; `None` skips energy evaluation.
    pub energy: Option<EnergyConvention>,
}

/// Fixed-point iteration counts over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub starting: usize,
    pub per_step: Vec<usize>,
}

impl IterationStats {
    pub fn max(&self) -> usize {
        self.per_step.iter().copied().chain([self.starting]).max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        let total: usize = self.per_step.iter().sum::<usize>() + self.starting;
        total as f64 / (self.per_step.len() + 1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub state: SimulationState,
    pub energy: Vec<EnergyRecord>,
    pub iterations: IterationStats,
    /// Number of levels `u⁰ … u^N`.
    pub levels: usize,
    pub initial_max_modulus: f64,
    /// Largest nodal modulus over all levels.
    pub max_modulus: f64,
}

/// Runs `problem` in `space` up to `opts.final_time`.
pub fn run(
    problem: &ProblemSpec,
    space: &DiscreteSpace,
    opts: &RunOptions,
    hooks: &mut [&mut dyn StepHook],
) -> Result<RunSummary> {
    let n_steps = steps_for(opts.final_time, opts.tau)?;
    let nl = problem.nonlinearity;
    let tau = opts.tau;
    let stepper = Stepper::new(space, nl, tau, opts.solver)?;

    let u0 = space.initial_value(&problem.u0)?;
    let v = space.l2_projection(&problem.u1)?;
    for h in hooks.iter_mut() {
        h.start(&u0, space)?;
    }
    let (u1, start_stats) = stepper.starting_step(&u0, &v)?;
    let u_aux: Vec<Complex64> = u1.iter().zip(&v).map(|(a, b)| a - b * (2.0 * tau)).collect();

    let initial_max_modulus = space.max_modulus(&u0)?;
    let mut max_modulus = initial_max_modulus.max(space.max_modulus(&u1)?);
    let mut energy = Vec::new();
    if let Some(conv) = opts.energy {
        energy.push(discrete_energy(0, &u_aux, &u0, &u1, space, &nl, tau, conv)?);
    }
    let view = StepView {
        n: 1,
        t: tau,
        prev: &u_aux,
        curr: &u0,
        next: &u1,
        stats: &start_stats,
        space,
    };
    for h in hooks.iter_mut() {
        h.observe(&view)?;
    }

    let mut iterations = IterationStats {
        starting: start_stats.iterations,
        per_step: Vec::with_capacity(n_steps.saturating_sub(1)),
    };
    let mut state = SimulationState {
        u_prev: u0,
        u_curr: u1,
        n: 1,
        tau,
        energy_trace: energy.iter().map(|r| r.energy).collect(),
    };
    for _ in 1..n_steps {
        let (next, stats) = stepper.step(&state.u_prev, &state.u_curr, state.n)?;
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite { step: state.n + 1 });
        }
        if let Some(conv) = opts.energy {
            let rec = discrete_energy(state.n, &state.u_prev, &state.u_curr, &next, space, &nl, tau, conv)?;
            state.energy_trace.push(rec.energy);
            energy.push(rec);
        }
        max_modulus = max_modulus.max(space.max_modulus(&next)?);
        let view = StepView {
            n: state.n + 1,
            t: (state.n + 1) as f64 * tau,
            prev: &state.u_prev,
            curr: &state.u_curr,
            next: &next,
            stats: &stats,
            space,
        };
        for h in hooks.iter_mut() {
            h.observe(&view)?;
        }
        iterations.per_step.push(stats.iterations);
        state.u_prev = std::mem::replace(&mut state.u_curr, next);
        state.n += 1;
    }
    Ok(RunSummary {
        state,
        energy,
        iterations,
        levels: n_steps + 1,
        initial_max_modulus,
        max_modulus,
    })
}

/// Manifest accompanying a snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub format: String,
    pub version: u32,
    pub data_file: String,
    /// Length of each stored vector (all fine nodes).
    pub len: usize,
    pub fine_n_side: usize,
    pub every: usize,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
}

/// Writes every `every`-th level as full fine nodal values.
///
/// Record layout (little endian): step `u64`, time `f64`, length `u64`, then
/// `length` pairs of `f64` (real, imaginary).
pub struct SnapshotWriter {
    dir: PathBuf,
    every: usize,
    tau: f64,
    out: Option<BufWriter<fs::File>>,
    manifest: SnapshotManifest,
}

impl SnapshotWriter {
    pub const DATA_FILE: &'static str = "snapshots.bin";
    pub const MANIFEST_FILE: &'static str = "snapshots.json";

    pub fn new(dir: impl AsRef<Path>, every: usize, tau: f64) -> Result<Self> {
        if every == 0 {
            return Err(Error::InvalidArgument("snapshot interval must be positive".into()));
        }
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(SnapshotWriter {
            out: Some(BufWriter::new(fs::File::create(dir.join(Self::DATA_FILE))?)),
            dir,
            every,
            tau,
            manifest: SnapshotManifest {
                format: "lod-nls-snapshots".into(),
                version: 1,
                data_file: Self::DATA_FILE.into(),
                len: 0,
                fine_n_side: 0,
                every,
                steps: Vec::new(),
                times: Vec::new(),
            },
        })
    }

    fn record(&mut self, step: usize, values: &[Complex64]) -> Result<()> {
        let out = self.out.as_mut().ok_or_else(|| Error::InvalidArgument("snapshot writer closed".into()))?;
        let t = step as f64 * self.tau;
        out.write_all(&(step as u64).to_le_bytes())?;
        out.write_all(&t.to_le_bytes())?;
        out.write_all(&(values.len() as u64).to_le_bytes())?;
        for z in values {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        self.manifest.len = values.len();
        self.manifest.steps.push(step);
        self.manifest.times.push(t);
        Ok(())
    }

    /// Flushes the data and writes the JSON manifest.
    pub fn finish(mut self) -> Result<SnapshotManifest> {
        if let Some(mut out) = self.out.take() {
            out.flush()?;
        }
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(self.dir.join(Self::MANIFEST_FILE), json)?;
        Ok(self.manifest)
    }
}

impl StepHook for SnapshotWriter {
    fn start(&mut self, u0: &[Complex64], space: &DiscreteSpace) -> Result<()> {
        self.manifest.fine_n_side = space.mesh().n_side();
        self.record(0, &space.to_fine(u0)?)
    }

    fn observe(&mut self, view: &StepView<'_>) -> Result<()> {
        if view.n % self.every == 0 {
            self.record(view.n, &view.space.to_fine(view.next)?)?;
        }
        Ok(())
    }
}

/// Reads back a snapshot file as `(step, time, values)` records.
pub fn read_snapshots(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, Vec<Complex64>)>> {
    let bytes = fs::read(path.as_ref())?;
    let bad = || Error::Cache {
        path: path.as_ref().to_path_buf(),
        detail: "truncated snapshot record".into(),
    };
    let mut pos = 0;
    let take8 = |pos: &mut usize| -> Result<[u8; 8]> {
        let s = bytes.get(*pos..*pos + 8).ok_or_else(bad)?;
        *pos += 8;
        Ok(s.try_into().expect("slice of length 8"))
    };
    let mut out = Vec::new();
    while pos < bytes.len() {
        let step = u64::from_le_bytes(take8(&mut pos)?) as usize;
        let t = f64::from_le_bytes(take8(&mut pos)?);
        let len = u64::from_le_bytes(take8(&mut pos)?) as usize;
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            let re = f64::from_le_bytes(take8(&mut pos)?);
            let im = f64::from_le_bytes(take8(&mut pos)?);
            v.push(Complex64::new(re, im));
        }
        out.push((step, t, v));
    }
    Ok(out)
}
