//! P1 assembly and a Poisson solve with a variable coefficient.
//!
//! Solves `−∇·(b∇u) = f` for `u = sin(πx) sin(πy)` and `b = 1 + xy` and
//! reports the L² and H¹ errors over successive refinements.

use std::f64::consts::PI;

use num_complex::Complex64;

use lod_nls::coefficient::CoefficientField;
use lod_nls::fem::{assemble_stiffness, load_vector, norm, Analytic, Dofs, NormKind};
use lod_nls::linalg::SpdSolver;
use lod_nls::mesh::build_structured_mesh;

fn main() -> lod_nls::Result<()> {
    let b = CoefficientField::smooth("b", |x, y| 1.0 + x * y);
    // −∇·(b∇u) with u = sin(πx) sin(πy)
    let f = |x: f64, y: f64| {
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let lap = -2.0 * PI * PI * sx * sy;
        let grad_b_dot_grad_u = y * PI * cx * sy + x * PI * sx * cy;
        Complex64::new(-((1.0 + x * y) * lap + grad_b_dot_grad_u), 0.0)
    };
    let exact = Analytic::new(|x, y| Complex64::new((PI * x).sin() * (PI * y).sin(), 0.0)).with_gradient(|x, y| {
        [
            Complex64::new(PI * (PI * x).cos() * (PI * y).sin(), 0.0),
            Complex64::new(PI * (PI * x).sin() * (PI * y).cos(), 0.0),
        ]
    });

    println!("   n      nnz     L2 error   rate     H1 error   rate");
    let mut prev: Option<(f64, f64)> = None;
    for n in [8, 16, 32, 64] {
        let mesh = build_structured_mesh(n)?;
        let dofs = Dofs::interior(&mesh);
        let a = dofs.restrict_matrix(&assemble_stiffness(&mesh, &b)?);
        let rhs: Vec<f64> = dofs.restrict(&load_vector(&mesh, &f))?.iter().map(|z| z.re).collect();
        let u = SpdSolver::new(&a)?.solve(&rhs)?;
        let full = dofs.extend(&u.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())?;
        let l2 = norm(&mesh, &full, NormKind::L2, Some(&exact))?;
        let h1 = norm(&mesh, &full, NormKind::H1, Some(&exact))?;
        let rates = prev.map(|(p2, p1)| ((p2 / l2).log2(), (p1 / h1).log2()));
        let show = |r: Option<f64>| r.map_or("     ".to_string(), |r| format!("{r:5.2}"));
        println!(
            "{n:>4} {:>8}  {l2:.4e}  {}  {h1:.4e}  {}",
            a.nnz(),
            show(rates.map(|r| r.0)),
            show(rates.map(|r| r.1))
        );
        prev = Some((l2, h1));
    }
    Ok(())
}
