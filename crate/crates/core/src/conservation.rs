//! Discrete and continuous energies and drift diagnostics.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::error::{check_len, Result};
use crate::fem::p1_gradients;
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::time::{DiscreteSpace, Nonlinearity};

/// Which time levels enter the `F` term of `E^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyConvention {
    /// `½(F(|u^{n+1}|²) + F(|u^n|²))`, the same levels as the other terms.
    /// This is the quantity the scheme conserves exactly.
    #[default]
    Telescoping,
    /// `½(F(|u^n|²) + F(|u^{n−1}|²))`.
    AsPrinted,
}

/// `E^n` and its four parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub n: usize,
    pub t: f64,
    pub energy: f64,
    /// `‖(u^{n+1} − u^n)/τ‖²`.
    pub kinetic: f64,
    /// `½(|u^{n+1}|²_b + |u^n|²_b)` with `|u|²_b = (b∇u, ∇u)`.
    pub gradient: f64,
    /// `½ ∫ V (|u^{n+1}|² + |u^n|²)`.
    pub potential: f64,
    /// `½ ∫ (F(·) + F(·))` at the levels chosen by the convention.
    pub nonlinear: f64,
}

/// Energy of the level pair `(u^n, u^{n+1})`; `u_nm1` is only read by
/// [`EnergyConvention::AsPrinted`].
#[allow(clippy::too_many_arguments)]
pub fn discrete_energy(
    n: usize,
    u_nm1: &[Complex64],
    u_n: &[Complex64],
    u_np1: &[Complex64],
    space: &DiscreteSpace,
    nl: &Nonlinearity,
    tau: f64,
    convention: EnergyConvention,
) -> Result<EnergyRecord> {
    let dim = space.dim();
    check_len(dim, u_nm1.len())?;
    check_len(dim, u_n.len())?;
    check_len(dim, u_np1.len())?;
    let d: Vec<Complex64> = u_np1.iter().zip(u_n).map(|(a, b)| (a - b) / tau).collect();
    let kinetic = space.mass_norm_sq(&d)?;
    let gradient = 0.5 * (space.stiffness_norm_sq(u_np1)? + space.stiffness_norm_sq(u_n)?);
    let potential = 0.5 * (space.potential_norm_sq(u_np1)? + space.potential_norm_sq(u_n)?);
    let (a, b) = match convention {
        EnergyConvention::Telescoping => (u_np1, u_n),
        EnergyConvention::AsPrinted => (u_n, u_nm1),
    };
    let nonlinear = 0.5 * (space.nonlinear_energy(a, nl)? + space.nonlinear_energy(b, nl)?);
    Ok(EnergyRecord {
        n,
        t: n as f64 * tau,
        energy: kinetic + gradient + potential + nonlinear,
        kinetic,
        gradient,
        potential,
        nonlinear,
    })
}

/// The per-step balance
/// `2(‖δ_t u^n‖² − ‖δ_t u^{n−1}‖²) + |u^{n+1}|²_b − |u^{n−1}|²_b
///  + ∫V(|u^{n+1}|² − |u^{n−1}|²) + ∫(F(|u^{n+1}|²) − F(|u^{n−1}|²))`,
/// which the scheme makes vanish up to the nonlinear-solver tolerance.
pub fn telescoping_residual(
    u_nm1: &[Complex64],
    u_n: &[Complex64],
    u_np1: &[Complex64],
    space: &DiscreteSpace,
    nl: &Nonlinearity,
    tau: f64,
) -> Result<f64> {
    let fwd: Vec<Complex64> = u_np1.iter().zip(u_n).map(|(a, b)| (a - b) / tau).collect();
    let bwd: Vec<Complex64> = u_n.iter().zip(u_nm1).map(|(a, b)| (a - b) / tau).collect();
    let kinetic = 2.0 * (space.mass_norm_sq(&fwd)? - space.mass_norm_sq(&bwd)?);
    let grad = space.stiffness_norm_sq(u_np1)? - space.stiffness_norm_sq(u_nm1)?;
    let pot = space.potential_norm_sq(u_np1)? - space.potential_norm_sq(u_nm1)?;
    let nonl = space.nonlinear_energy(u_np1, nl)? - space.nonlinear_energy(u_nm1, nl)?;
    Ok(kinetic + grad + pot + nonl)
}

/// `½ ∫ (|u_t|² + |∇u|² + V|u|² + F(|u|²))` for full fine nodal vectors.
pub fn continuous_energy(
    mesh: &Mesh,
    u: &[Complex64],
    u_t: &[Complex64],
    v: &CoefficientField,
    nl: &Nonlinearity,
) -> Result<f64> {
    check_len(mesh.n_nodes(), u.len())?;
    check_len(mesh.n_nodes(), u_t.len())?;
    let rule = QuadratureRule::degree4();
    let parts: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let tri = mesh.elements()[e];
            let coords = mesh.element_coords(e);
            let (g, area) = p1_gradients(&coords);
            let un = tri.map(|p| u[p]);
            let dn = tri.map(|p| u_t[p]);
            let grad = [0, 1].map(|k| un[0] * g[0][k] + un[1] * g[1][k] + un[2] * g[2][k]);
            let grad_sq = grad[0].norm_sqr() + grad[1].norm_sqr();
            let pts = rule.map(&coords);
            let mut acc = 0.0;
            for (q, l) in rule.points.iter().enumerate() {
                let uq = un[0] * l[0] + un[1] * l[1] + un[2] * l[2];
                let dq = dn[0] * l[0] + dn[1] * l[1] + dn[2] * l[2];
                let s = uq.norm_sqr();
                acc += rule.weights[q] * (dq.norm_sqr() + grad_sq + v.eval(pts[q][0], pts[q][1]) * s + nl.F(s));
            }
            acc * area
        })
        .collect();
    Ok(0.5 * parts.iter().sum::<f64>())
}

/// `max_n |E^n − E⁰| / |E⁰|` (absolute drift when `E⁰ = 0`).
pub fn relative_drift(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let scale = if first.energy != 0.0 { first.energy.abs() } else { 1.0 };
    records
        .iter()
        .map(|r| (r.energy - first.energy).abs() / scale)
        .fold(0.0, f64::max)
}

/// Writes `n,t,E,kinetic,gradient,potential,nonlinear,drift` with six
/// significant digits; drift is `E^n − E⁰`.
pub fn write_energy_csv<W: Write>(mut w: W, records: &[EnergyRecord]) -> Result<()> {
    writeln!(w, "n,t,E,kinetic,gradient,potential,nonlinear,drift")?;
    let e0 = records.first().map_or(0.0, |r| r.energy);
    for r in records {
        writeln!(
            w,
            "{},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e},{:.5e}",
            r.n,
            r.t,
            r.energy,
            r.kinetic,
            r.gradient,
            r.potential,
            r.nonlinear,
            r.energy - e0
        )?;
    }
    Ok(())
}
