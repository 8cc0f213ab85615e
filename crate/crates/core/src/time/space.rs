//! Trial spaces for the time stepper: the LOD space or the fine P1 space.

use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;

use super::nonlinearity::Nonlinearity;
use crate::error::{check_len, Result};
use crate::fem::{interpolate, Analytic, Dofs};
use crate::linalg::{ComplexSparseSolver, DenseComplexSolver, DenseSpdSolver, SpdSolver};
use crate::lod::{AssembledForm, LodBasis};
use crate::mesh::Mesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Lod,
    FineFem,
}

enum Repr {
    Lod {
        basis: Box<LodBasis>,
        /// Dense `B`, fine interior × LOD dimension.
        b: Mat<f64>,
        mass: Mat<f64>,
        stiffness: Mat<f64>,
        mass_v: Mat<f64>,
    },
    Fine {
        mass: CsrMatrix<f64>,
        stiffness: CsrMatrix<f64>,
        mass_v: CsrMatrix<f64>,
    },
}

/// A factored linear combination `α M + β (A_b + M_V)` of the space's
/// matrices.
pub enum SpaceSolver {
    Dense(DenseComplexSolver),
    Sparse(ComplexSparseSolver),
}

impl SpaceSolver {
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            SpaceSolver::Dense(s) => s.solve(rhs),
            SpaceSolver::Sparse(s) => s.solve(rhs),
        }
    }
}

/// Coordinates, matrices, and the nonlinear-evaluation apparatus of one
/// trial space on a fine mesh. LOD matrices are the corrected Galerkin
/// matrices `Bᵀ X B`, so every quadratic form equals the corresponding
/// fine-mesh integral of the represented function.
pub struct DiscreteSpace {
    kind: SpaceKind,
    mesh: Mesh,
    dofs: Dofs,
    form: AssembledForm,
    repr: Repr,
    rule: QuadratureRule,
}

impl DiscreteSpace {
    /// LOD space spanned by the columns of `basis`; `form` must be assembled
    /// on the basis's fine mesh.
    pub fn lod(basis: LodBasis, fine_mesh: Mesh, form: AssembledForm) -> Result<Self> {
        let dofs = Dofs::interior(&fine_mesh);
        check_len(basis.fine_dim(), dofs.len())?;
        let b = basis.basis_matrix();
        let repr = Repr::Lod {
            mass: basis.mass().clone(),
            stiffness: basis.stiffness().clone(),
            mass_v: basis.mass_v().clone(),
            b,
            basis: Box::new(basis),
        };
        Ok(DiscreteSpace {
            kind: SpaceKind::Lod,
            mesh: fine_mesh,
            dofs,
            form,
            repr,
            rule: QuadratureRule::degree4(),
        })
    }

    /// The P1 space on the interior nodes of `mesh`.
    pub fn fine_fem(mesh: Mesh, form: AssembledForm) -> Result<Self> {
        let dofs = Dofs::interior(&mesh);
        check_len(mesh.n_nodes(), form.mass.n_rows())?;
        let repr = Repr::Fine {
            mass: dofs.restrict_matrix(&form.mass),
            stiffness: dofs.restrict_matrix(&form.stiffness),
            mass_v: dofs.restrict_matrix(&form.mass_v),
        };
        Ok(DiscreteSpace {
            kind: SpaceKind::FineFem,
            mesh,
            dofs,
            form,
            repr,
            rule: QuadratureRule::degree4(),
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Lod { mass, .. } => mass.nrows(),
            Repr::Fine { mass, .. } => mass.n_rows(),
        }
    }

    /// The fine mesh on which functions are represented.
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn form(&self) -> &AssembledForm {
        &self.form
    }

    pub fn basis(&self) -> Option<&LodBasis> {
        match &self.repr {
            Repr::Lod { basis, .. } => Some(basis),
            Repr::Fine { .. } => None,
        }
    }

    fn apply_matrix(&self, which: Which, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.dim(), x.len())?;
        match &self.repr {
            Repr::Lod {
                mass, stiffness, mass_v, ..
            } => {
                let m = match which {
                    Which::Mass => mass,
                    Which::Stiffness => stiffness,
                    Which::MassV => mass_v,
                };
                Ok(dense_apply(m, x))
            }
            Repr::Fine {
                mass, stiffness, mass_v, ..
            } => {
                let m = match which {
                    Which::Mass => mass,
                    Which::Stiffness => stiffness,
                    Which::MassV => mass_v,
                };
                m.apply(x)
            }
        }
    }

    pub fn apply_mass(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_matrix(Which::Mass, x)
    }

    /// `A_b x` (the `b`-weighted stiffness, no potential).
    pub fn apply_stiffness(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_matrix(Which::Stiffness, x)
    }

    pub fn apply_mass_v(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.apply_matrix(Which::MassV, x)
    }

    /// `(A_b + M_V) x`.
    pub fn apply_operator(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut y = self.apply_stiffness(x)?;
        for (a, b) in y.iter_mut().zip(self.apply_mass_v(x)?) {
            *a += b;
        }
        Ok(y)
    }

    /// `‖x‖²_X` for one of the space's matrices.
    fn quadratic(&self, which: Which, x: &[Complex64]) -> Result<f64> {
        let y = self.apply_matrix(which, x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum())
    }

    pub fn mass_norm_sq(&self, x: &[Complex64]) -> Result<f64> {
        self.quadratic(Which::Mass, x)
    }

    pub fn stiffness_norm_sq(&self, x: &[Complex64]) -> Result<f64> {
        self.quadratic(Which::Stiffness, x)
    }

    pub fn potential_norm_sq(&self, x: &[Complex64]) -> Result<f64> {
        self.quadratic(Which::MassV, x)
    }

    /// Factors `α M + β (A_b + M_V)`.
    pub fn factor(&self, alpha: Complex64, beta: Complex64) -> Result<SpaceSolver> {
        match &self.repr {
            Repr::Lod {
                mass, stiffness, mass_v, ..
            } => {
                let l = Mat::<Complex64>::from_fn(self.dim(), self.dim(), |i, j| {
                    alpha * mass[(i, j)] + beta * (stiffness[(i, j)] + mass_v[(i, j)])
                });
                Ok(SpaceSolver::Dense(DenseComplexSolver::new(&l)?))
            }
            Repr::Fine {
                mass, stiffness, mass_v, ..
            } => {
                let l = CsrMatrix::combine(self.dim(), &[(alpha, mass), (beta, stiffness), (beta, mass_v)]);
                Ok(SpaceSolver::Sparse(ComplexSparseSolver::new(&l)?))
            }
        }
    }

    /// Interior fine nodal values of the functions with the given
    /// coefficient vectors.
    pub fn fine_values_many(&self, xs: &[&[Complex64]]) -> Result<Vec<Vec<Complex64>>> {
        for x in xs {
            check_len(self.dim(), x.len())?;
        }
        match &self.repr {
            Repr::Fine { .. } => Ok(xs.iter().map(|x| x.to_vec()).collect()),
            Repr::Lod { b, .. } => {
                let k = xs.len();
                let rhs = Mat::<f64>::from_fn(self.dim(), 2 * k, |i, j| {
                    let z = xs[j / 2][i];
                    if j % 2 == 0 {
                        z.re
                    } else {
                        z.im
                    }
                });
                let mut out = Mat::<f64>::zeros(b.nrows(), 2 * k);
                faer::linalg::matmul::matmul(&mut out, Accum::Replace, b, &rhs, 1.0, Par::Seq);
                Ok((0..k)
                    .map(|j| (0..b.nrows()).map(|i| Complex64::new(out[(i, 2 * j)], out[(i, 2 * j + 1)])).collect())
                    .collect())
            }
        }
    }

    /// All fine nodal values (zeros on the boundary).
    pub fn to_fine(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let v = self.fine_values_many(&[x])?.pop().expect("one vector in, one out");
        self.dofs.extend(&v)
    }

    /// `Xᵀ g` for a vector on the interior fine nodes (identity for the
    /// fine space).
    pub fn restrict_fine_load(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.dofs.len(), g.len())?;
        match &self.repr {
            Repr::Fine { .. } => Ok(g.to_vec()),
            Repr::Lod { b, .. } => {
                let rhs = Mat::<f64>::from_fn(g.len(), 2, |i, j| if j == 0 { g[i].re } else { g[i].im });
                let mut out = Mat::<f64>::zeros(b.ncols(), 2);
                faer::linalg::matmul::matmul(&mut out, Accum::Replace, b.transpose(), &rhs, 1.0, Par::Seq);
                Ok((0..b.ncols()).map(|i| Complex64::new(out[(i, 0)], out[(i, 1)])).collect())
            }
        }
    }

    /// `g_i = ∫ f̃(|w|², |v|²) (w + v)/2 · φ_i` by the degree-4 rule on every
    /// fine element.
    pub fn nonlinear_load(&self, w: &[Complex64], v: &[Complex64], nl: &Nonlinearity) -> Result<Vec<Complex64>> {
        if nl.is_linear() {
            check_len(self.dim(), w.len())?;
            check_len(self.dim(), v.len())?;
            return Ok(vec![Complex64::new(0.0, 0.0); self.dim()]);
        }
        let vals = self.fine_values_many(&[w, v])?;
        let wf = self.dofs.extend(&vals[0])?;
        let vf = self.dofs.extend(&vals[1])?;
        let mesh = &self.mesh;
        let rule = &self.rule;
        let locals: Vec<[Complex64; 3]> = (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let tri = mesh.elements()[e];
                let area = mesh.signed_area(e).abs();
                let wn = tri.map(|p| wf[p]);
                let vn = tri.map(|p| vf[p]);
                let mut out = [Complex64::new(0.0, 0.0); 3];
                for (q, l) in rule.points.iter().enumerate() {
                    let wq = wn[0] * l[0] + wn[1] * l[1] + wn[2] * l[2];
                    let vq = vn[0] * l[0] + vn[1] * l[1] + vn[2] * l[2];
                    let s = nl.f_tilde_unchecked(wq.norm_sqr(), vq.norm_sqr()) * rule.weights[q] * area * 0.5;
                    let z = (wq + vq) * s;
                    for a in 0..3 {
                        out[a] += z * l[a];
                    }
                }
                out
            })
            .collect();
        let mut g = vec![Complex64::new(0.0, 0.0); mesh.n_nodes()];
        for (e, l) in locals.iter().enumerate() {
            for (a, &p) in mesh.elements()[e].iter().enumerate() {
                g[p] += l[a];
            }
        }
        self.restrict_fine_load(&self.dofs.restrict(&g)?)
    }

    /// `∫ F(|u|²)` with the same rule as [`Self::nonlinear_load`].
    pub fn nonlinear_energy(&self, x: &[Complex64], nl: &Nonlinearity) -> Result<f64> {
        if nl.is_linear() {
            check_len(self.dim(), x.len())?;
            return Ok(0.0);
        }
        let u = self.to_fine(x)?;
        Ok(integrate_potential(&self.mesh, &self.rule, &u, nl))
    }

    /// `max_p |u(p)|` over fine nodes.
    pub fn max_modulus(&self, x: &[Complex64]) -> Result<f64> {
        let v = self.fine_values_many(&[x])?.pop().expect("one vector in, one out");
        Ok(v.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Coefficients of the starting value `u⁰`: Ritz projection of the fine
    /// interpolant for LOD, the interpolant itself for the fine space.
    pub fn initial_value(&self, u0: &Analytic) -> Result<Vec<Complex64>> {
        let u = interpolate(&self.mesh, |x, y| u0.value(x, y));
        match &self.repr {
            Repr::Lod { basis, .. } => basis.ritz_project(&u, &self.form),
            Repr::Fine { .. } => self.dofs.restrict(&u),
        }
    }

    /// L² projection of the fine interpolant of `f` into the space.
    pub fn l2_projection(&self, f: &Analytic) -> Result<Vec<Complex64>> {
        let u = interpolate(&self.mesh, |x, y| f.value(x, y));
        self.l2_project_fine(&u)
    }

    /// L² projection of a full fine nodal vector into the space.
    pub fn l2_project_fine(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.mesh.n_nodes(), u.len())?;
        let mu = self.dofs.restrict(&self.form.mass.apply(u)?)?;
        let rhs = self.restrict_fine_load(&mu)?;
        match &self.repr {
            Repr::Lod { mass, .. } => DenseSpdSolver::new(mass)?.solve_complex(&rhs),
            Repr::Fine { mass, .. } => SpdSolver::new(mass)?.solve_complex(&rhs),
        }
    }
}

/// `∫ F(|u|²)` for a full fine nodal vector, degree-4 rule per element.
pub fn integrate_potential(mesh: &Mesh, rule: &QuadratureRule, u: &[Complex64], nl: &Nonlinearity) -> f64 {
    let parts: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let tri = mesh.elements()[e];
            let area = mesh.signed_area(e).abs();
            let un = tri.map(|p| u[p]);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(l, w)| {
                    let uq = un[0] * l[0] + un[1] * l[1] + un[2] * l[2];
                    w * area * nl.F(uq.norm_sqr())
                })
                .sum()
        })
        .collect();
    parts.iter().sum()
}

#[derive(Clone, Copy)]
enum Which {
    Mass,
    Stiffness,
    MassV,
}

fn dense_apply(m: &Mat<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let n = m.nrows();
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (j, &xj) in x.iter().enumerate() {
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += xj * col[i];
        }
    }
    y
}
