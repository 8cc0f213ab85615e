//! The five benchmark configurations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::fem::Analytic;
use crate::problem::{ExactSolution, ProblemSpec};
use crate::time::Nonlinearity;

/// Knobs that change an example's data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleOptions {
    /// Seed of the Example 5 checkerboard.
    pub seed: u64,
    /// Evaluate the Example 4 potential at `(x − ½, y − ½)`.
    pub center_domain: bool,
}

impl Default for ExampleOptions {
    fn default() -> Self {
        ExampleOptions {
            seed: 1,
            center_domain: false,
        }
    }
}

/// Example `id` with default options.
pub fn configure_example(id: u32) -> Result<ProblemSpec> {
    configure_example_with(id, &ExampleOptions::default())
}

pub fn configure_example_with(id: u32, opts: &ExampleOptions) -> Result<ProblemSpec> {
    let problem = match id {
        1 => ProblemSpec {
            name: "example-1".into(),
            b: CoefficientField::constant("b", 1.0),
            v: smooth_potential(),
            nonlinearity: Nonlinearity::cubic(),
            u0: sine_mode(0.1),
            u1: sine_mode_times(Complex64::new(0.0, -0.1)),
            final_time: 1.0,
            exact: Some(example1_exact()),
        },
        2 => ProblemSpec {
            name: "example-2".into(),
            b: quartic_b(),
            v: smooth_potential(),
            nonlinearity: Nonlinearity::cubic(),
            u0: sine_mode(0.1),
            u1: sine_mode_times(Complex64::new(0.0, -0.1)),
            final_time: 1.0,
            exact: None,
        },
        3 => ProblemSpec {
            name: "example-3".into(),
            b: CoefficientField::constant("b", 1.0),
            v: two_scale_potential(),
            nonlinearity: Nonlinearity::cubic(),
            u0: sine_mode(0.4),
            u1: sine_mode_times(Complex64::new(0.0, -0.8 * PI)),
            final_time: 1.0,
            exact: None,
        },
        4 => ProblemSpec {
            name: "example-4".into(),
            b: quartic_b(),
            v: shifted_harmonic(opts.center_domain),
            nonlinearity: Nonlinearity::cubic(),
            u0: sine_mode(0.1),
            u1: sine_mode_times(Complex64::new(0.0, -0.1)),
            final_time: 1.0,
            exact: None,
        },
        5 => ProblemSpec {
            name: "example-5".into(),
            b: multiscale_b(),
            v: CoefficientField::checkerboard("V", opts.seed, 128, 0.05, 20.0),
            nonlinearity: Nonlinearity::cubic(),
            u0: sine_mode(0.1),
            u1: sine_mode_times(Complex64::new(0.0, -0.1)),
            final_time: 1.0,
            exact: None,
        },
        other => return Err(Error::UnknownExample(other)),
    };
    Ok(problem)
}

fn sin_sin(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

fn sine_mode(a: f64) -> Analytic {
    sine_mode_times(Complex64::new(a, 0.0))
}

/// `c · sin(πx) sin(πy)` with its gradient.
fn sine_mode_times(c: Complex64) -> Analytic {
    Analytic::new(move |x, y| c * sin_sin(x, y)).with_gradient(move |x, y| {
        [
            c * (PI * (PI * x).cos() * (PI * y).sin()),
            c * (PI * (PI * x).sin() * (PI * y).cos()),
        ]
    })
}

/// `V = −2π² − sin²(πx) sin²(πy) / 100`.
fn smooth_potential() -> CoefficientField {
    CoefficientField::smooth("V", |x, y| -2.0 * PI * PI - 0.01 * sin_sin(x, y).powi(2))
        .with_bounds(-2.0 * PI * PI - 0.01, -2.0 * PI * PI)
}

/// `u = sin(πx) sin(πy) e^{−it} / 10`.
fn example1_exact() -> ExactSolution {
    let phase = |t: f64| Complex64::new(0.0, -t).exp();
    ExactSolution {
        value: std::sync::Arc::new(move |x, y, t| phase(t) * (0.1 * sin_sin(x, y))),
        gradient: std::sync::Arc::new(move |x, y, t| {
            let p = phase(t) * (0.1 * PI);
            [p * ((PI * x).cos() * (PI * y).sin()), p * ((PI * x).sin() * (PI * y).cos())]
        }),
        time_derivative: std::sync::Arc::new(move |x, y, t| phase(t) * Complex64::new(0.0, -0.1 * sin_sin(x, y))),
    }
}

/// `b = [(2.8 + x²)(2.8 + y²)]²`.
fn quartic_b() -> CoefficientField {
    CoefficientField::smooth("b", |x, y| ((2.8 + x * x) * (2.8 + y * y)).powi(2)).with_bounds(2.8f64.powi(4), 3.8f64.powi(4))
}

/// `V₁ + V₂` with a lattice period `1/8` on the lower-left quarter
/// (`x ≤ ½` and `y ≤ ½`) and `1/16` elsewhere.
fn two_scale_potential() -> CoefficientField {
    CoefficientField::piecewise("V", 0.5, |x, y| {
        let v1 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        let e = if x <= 0.5 && y <= 0.5 { 1.0 / 8.0 } else { 1.0 / 16.0 };
        let v2 = (0.01 + (2.0 * PI * x / e).cos()) * (0.01 + (2.0 * PI * y / e).cos());
        v1 + v2
    })
}

/// `(x² + y²)/10 + 1.8·[x ≥ 0]`, optionally in coordinates centered at
/// `(½, ½)`. On the unit square the shift is active everywhere.
fn shifted_harmonic(center: bool) -> CoefficientField {
    let f = |x: f64, y: f64| 0.1 * (x * x + y * y) + if x >= 0.0 { 1.8 } else { 0.0 };
    if center {
        CoefficientField::piecewise("V", 0.5, move |x, y| f(x - 0.5, y - 0.5))
    } else {
        CoefficientField::smooth("V", f)
    }
}

/// Average of five oscillating ratios plus a smooth term.
fn multiscale_b() -> CoefficientField {
    let e = [1.0 / 5.0, 1.0 / 13.0, 1.0 / 17.0, 1.0 / 31.0, 1.0 / 65.0];
    CoefficientField::smooth("b", move |x, y| {
        let s = |t: f64, k: usize| (2.0 * PI * t / e[k]).sin();
        let c = |t: f64, k: usize| (2.0 * PI * t / e[k]).cos();
        let terms = (3.0 + s(x, 0)) / (3.0 + s(y, 0))
            + (3.0 + s(y, 1)) / (3.0 + c(x, 1))
            + (3.0 + c(x, 2)) / (3.0 + s(y, 2))
            + (3.0 + s(x, 3)) / (3.0 + c(y, 3))
            + (3.0 + c(x, 4)) / (3.0 + s(y, 4));
        (terms + (4.0 * x * x * y * y).sin() + 1.0) / 6.0
    })
    .with_bounds(0.4, 2.0)
}
