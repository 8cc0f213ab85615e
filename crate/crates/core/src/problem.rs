//! Problem data for the Schrödinger equation with a wave operator,
//! `u_tt + i u_t − ∇·(b∇u) + V u + f(|u|²) u = 0` on the unit square with
//! homogeneous Dirichlet conditions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::coefficient::CoefficientField;
use crate::fem::Analytic;
use crate::time::Nonlinearity;

type ExactFn = Arc<dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync>;
type ExactGradFn = Arc<dyn Fn(f64, f64, f64) -> [Complex64; 2] + Send + Sync>;

/// A closed-form solution `u(x, y, t)` with its gradient and time derivative.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: ExactFn,
    pub gradient: ExactGradFn,
    pub time_derivative: ExactFn,
}

impl ExactSolution {
    /// Snapshot at time `t` as an analytic function of space.
    pub fn at(&self, t: f64) -> Analytic {
        let v = self.value.clone();
        let g = self.gradient.clone();
        Analytic::new(move |x, y| v(x, y, t)).with_gradient(move |x, y| g(x, y, t))
    }

    /// `∂_t u` at time `t`.
    pub fn time_derivative_at(&self, t: f64) -> Analytic {
        let d = self.time_derivative.clone();
        Analytic::new(move |x, y| d(x, y, t))
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub b: CoefficientField,
    pub v: CoefficientField,
    pub nonlinearity: Nonlinearity,
    /// `u(·, 0)`.
    pub u0: Analytic,
    /// `∂_t u(·, 0)`.
    pub u1: Analytic,
    pub final_time: f64,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("b", &self.b)
            .field("v", &self.v)
            .field("nonlinearity", &self.nonlinearity)
            .field("final_time", &self.final_time)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Whether `b ≡ 1`, the setting in which the discrete energy is exactly
    /// conserved as a kinetic + Dirichlet-energy functional.
    pub fn has_unit_b(&self) -> bool {
        self.b.constant_value() == Some(1.0)
    }
}
