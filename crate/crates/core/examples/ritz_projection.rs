//! Ritz projection onto LOD spaces compared with plain coarse P1.
//!
//! The projected function is `sin(πx) sin(πy)` under the second example's
//! coefficient. Errors are energy-norm distances to the fine-scale Ritz
//! projection.

use std::f64::consts::PI;

use num_complex::Complex64;

use lod_nls::experiments::configure_example;
use lod_nls::fem::{prolongation_matrix, sparse_product, Dofs};
use lod_nls::linalg::SpdSolver;
use lod_nls::lod::{build_lod_basis, BilinearFormSpec, Layers, Shift};
use lod_nls::mesh::{build_structured_mesh, refine};
use lod_nls::sparse::CsrMatrix;

fn energy_error(a: &CsrMatrix<f64>, x: &[Complex64], y: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
    a.quadratic_form(&d).max(0.0).sqrt()
}

/// Galerkin projection of `u` onto the span of the columns of `p`
/// (interior columns only).
fn galerkin(a: &CsrMatrix<f64>, p: &CsrMatrix<f64>, cols: &Dofs, u: &[Complex64]) -> lod_nls::Result<Vec<Complex64>> {
    let pt = p.transpose();
    let k = cols.restrict_matrix(&sparse_product(&pt, &sparse_product(a, p)));
    let rhs = cols.restrict(&pt.apply(&a.apply(u)?)?)?;
    let x = cols.extend(&SpdSolver::new(&k)?.solve_complex(&rhs)?)?;
    p.apply(&x)
}

fn main() -> lod_nls::Result<()> {
    let problem = configure_example(2)?;
    let fine_side = 64;
    let form = BilinearFormSpec::new(problem.b.clone(), problem.v.clone(), Shift::Auto);
    let fine = build_structured_mesh(fine_side)?;
    let assembled = form.assemble(&fine)?;
    let u: Vec<Complex64> = fine
        .nodes()
        .iter()
        .map(|p| Complex64::new((PI * p[0]).sin() * (PI * p[1]).sin(), 0.0))
        .collect();
    let identity = prolongation_matrix(&refine(&fine, 1)?);
    let r_fine = galerkin(&assembled.a, &identity, &Dofs::interior(&fine), &u)?;

    println!("   H     P1 energy err   LOD(sat) energy err   LOD(l=2) energy err");
    for n in [2, 4, 8, 16] {
        let refmap = refine(&build_structured_mesh(n)?, fine_side / n)?;
        let mut errors = Vec::new();
        for layers in [Layers::Saturated, Layers::Fixed(2)] {
            let basis = build_lod_basis(&refmap, &form, layers)?;
            let r = basis.to_fine(&basis.ritz_project(&u, &assembled)?)?;
            errors.push(energy_error(&assembled.a, &r, &r_fine));
        }
        let p1 = galerkin(&assembled.a, &prolongation_matrix(&refmap), &Dofs::interior(refmap.coarse()), &u)?;
        let p1_err = energy_error(&assembled.a, &p1, &r_fine);
        println!("1/{n:<3} {p1_err:>15.4e} {:>21.4e} {:>21.4e}", errors[0], errors[1]);
    }
    Ok(())
}
