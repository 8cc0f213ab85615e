//! The conservative Crank–Nicolson step and its starting step.
//!
//! With `K = A_b + M_V`, one step solves for `u⁺ = u^{n+1}`
//!
//! ```text
//! M(u⁺ − 2u + u⁻)/τ² + iM(u⁺ − u⁻)/(2τ) + K(u⁺ + u⁻)/2 + g(u⁺, u⁻) = 0,
//! g_i(w, v) = ∫ f̃(|w|², |v|²) (w + v)/2 · φ_i.
//! ```
//!
//! The nonlinear term is lagged in a fixed-point loop so the linear matrix
//! `M/τ² + iM/(2τ) + K/2` is factored once per time-step size.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::nonlinearity::Nonlinearity;
use super::space::{DiscreteSpace, SpaceSolver};
use crate::error::{check_len, Error, Result};
use crate::fem::Analytic;

/// Fixed-point controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once `‖u^{k+1} − u^k‖_M ≤ tol · ‖u^{k+1}‖_M`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-11,
            max_iters: 100,
        }
    }
}

/// Iteration record of one nonlinear solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    /// Relative increments, one per iteration.
    pub history: Vec<f64>,
}

/// Two consecutive levels `(u^{n−1}, u^n)` of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub u_prev: Vec<Complex64>,
    pub u_curr: Vec<Complex64>,
    /// Index of `u_curr`.
    pub n: usize,
    pub tau: f64,
    pub energy_trace: Vec<f64>,
}

impl SimulationState {
    pub fn time(&self) -> f64 {
        self.n as f64 * self.tau
    }
}

/// Factored step operators for one space, nonlinearity and `τ`.
///
/// `τ` may be negative, which runs the scheme backwards in time.
pub struct Stepper<'a> {
    space: &'a DiscreteSpace,
    nl: Nonlinearity,
    tau: f64,
    opts: SolverOptions,
    solver: SpaceSolver,
}

impl<'a> Stepper<'a> {
    pub fn new(space: &'a DiscreteSpace, nl: Nonlinearity, tau: f64, opts: SolverOptions) -> Result<Self> {
        if tau == 0.0 || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be finite and nonzero, got {tau}")));
        }
        let alpha = Complex64::new(1.0 / (tau * tau), 1.0 / (2.0 * tau));
        let solver = space.factor(alpha, Complex64::new(0.5, 0.0))?;
        Ok(Stepper {
            space,
            nl,
            tau,
            opts,
            solver,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn space(&self) -> &DiscreteSpace {
        self.space
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// `u^{n+1}` from `(u^{n−1}, u^n)`. `step` only labels errors.
    pub fn step(&self, u_prev: &[Complex64], u_curr: &[Complex64], step: usize) -> Result<(Vec<Complex64>, StepStats)> {
        let n = self.space.dim();
        check_len(n, u_prev.len())?;
        check_len(n, u_curr.len())?;
        let tau = self.tau;
        let combo: Vec<Complex64> = u_curr
            .iter()
            .zip(u_prev)
            .map(|(c, p)| (c * 2.0 - p) / (tau * tau))
            .collect();
        let m_combo = self.space.apply_mass(&combo)?;
        let m_prev = self.space.apply_mass(u_prev)?;
        let k_prev = self.space.apply_operator(u_prev)?;
        let i_over = Complex64::new(0.0, 1.0 / (2.0 * tau));
        let fixed: Vec<Complex64> = (0..n).map(|i| m_combo[i] + i_over * m_prev[i] - k_prev[i] * 0.5).collect();
        let guess: Vec<Complex64> = u_curr.iter().zip(u_prev).map(|(c, p)| c * 2.0 - p).collect();
        self.fixed_point(&self.solver, &fixed, guess, u_prev, |history| Error::StepFailure { step, history })
    }

    /// `u¹` from `u⁰` and the initial velocity `v`, with `u⁻¹ = u¹ − 2τv`
    /// substituted into the `n = 0` step.
    pub fn starting_step(&self, u0: &[Complex64], v: &[Complex64]) -> Result<(Vec<Complex64>, StepStats)> {
        let n = self.space.dim();
        check_len(n, u0.len())?;
        check_len(n, v.len())?;
        let tau = self.tau;
        let solver = self
            .space
            .factor(Complex64::new(2.0 / (tau * tau), 0.0), Complex64::new(1.0, 0.0))?;
        let combo: Vec<Complex64> = u0.iter().zip(v).map(|(a, b)| (a * 2.0 + b * (2.0 * tau)) / (tau * tau)).collect();
        let m_combo = self.space.apply_mass(&combo)?;
        let m_v = self.space.apply_mass(v)?;
        let k_v = self.space.apply_operator(v)?;
        let fixed: Vec<Complex64> = (0..n)
            .map(|i| m_combo[i] - Complex64::new(0.0, 1.0) * m_v[i] + k_v[i] * tau)
            .collect();
        let guess: Vec<Complex64> = u0.iter().zip(v).map(|(a, b)| a + b * tau).collect();
        // The lagged partner of w is u⁻¹ = w − 2τv, which moves with w.
        let shift: Vec<Complex64> = v.iter().map(|b| b * (2.0 * tau)).collect();
        self.fixed_point_with(&solver, &fixed, guess, |w| w.iter().zip(&shift).map(|(a, b)| a - b).collect(), |history| {
            Error::StartingStepFailure { history }
        })
    }

    fn fixed_point(
        &self,
        solver: &SpaceSolver,
        fixed: &[Complex64],
        guess: Vec<Complex64>,
        partner: &[Complex64],
        fail: impl Fn(Vec<f64>) -> Error,
    ) -> Result<(Vec<Complex64>, StepStats)> {
        self.fixed_point_with(solver, fixed, guess, |_| partner.to_vec(), fail)
    }

    fn fixed_point_with(
        &self,
        solver: &SpaceSolver,
        fixed: &[Complex64],
        mut w: Vec<Complex64>,
        partner: impl Fn(&[Complex64]) -> Vec<Complex64>,
        fail: impl Fn(Vec<f64>) -> Error,
    ) -> Result<(Vec<Complex64>, StepStats)> {
        let mut stats = StepStats::default();
        if self.nl.is_linear() {
            let next = solver.solve(fixed)?;
            if next.iter().any(|z| !z.is_finite()) {
                return Err(fail(vec![f64::NAN]));
            }
            stats.iterations = 1;
            stats.history.push(0.0);
            return Ok((next, stats));
        }
        for _ in 0..self.opts.max_iters {
            let g = self.space.nonlinear_load(&w, &partner(&w), &self.nl)?;
            let rhs: Vec<Complex64> = fixed.iter().zip(&g).map(|(a, b)| a - b).collect();
            let next = solver.solve(&rhs)?;
            let diff: Vec<Complex64> = next.iter().zip(&w).map(|(a, b)| a - b).collect();
            let dn = self.space.mass_norm_sq(&diff)?.max(0.0).sqrt();
            let un = self.space.mass_norm_sq(&next)?.max(0.0).sqrt();
            let rel = if un > 0.0 { dn / un } else { dn };
            stats.iterations += 1;
            stats.history.push(rel);
            if !rel.is_finite() {
                return Err(fail(stats.history));
            }
            w = next;
            if rel <= self.opts.tol {
                return Ok((w, stats));
            }
        }
        Err(fail(stats.history))
    }
}

/// `(u⁰, u¹)` from initial data: `u⁰` per [`DiscreteSpace::initial_value`],
/// the velocity as the L² projection of `u₁`, then one starting step.
pub fn starting_step(
    space: &DiscreteSpace,
    u0: &Analytic,
    u1: &Analytic,
    tau: f64,
    nl: Nonlinearity,
    opts: SolverOptions,
) -> Result<(Vec<Complex64>, Vec<Complex64>, StepStats)> {
    let stepper = Stepper::new(space, nl, tau, opts)?;
    let a = space.initial_value(u0)?;
    let v = space.l2_projection(u1)?;
    let (b, stats) = stepper.starting_step(&a, &v)?;
    Ok((a, b, stats))
}

/// Advances `state` by one step.
pub fn cn_step(state: &mut SimulationState, stepper: &Stepper<'_>) -> Result<StepStats> {
    if state.tau != stepper.tau() {
        return Err(Error::InvalidArgument(format!(
            "state has τ = {} but the stepper was factored for τ = {}",
            state.tau,
            stepper.tau()
        )));
    }
    let (next, stats) = stepper.step(&state.u_prev, &state.u_curr, state.n)?;
    state.u_prev = std::mem::replace(&mut state.u_curr, next);
    state.n += 1;
    Ok(stats)
}
