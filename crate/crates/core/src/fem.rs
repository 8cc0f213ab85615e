//! P1 assembly, coarse/fine transfer, the L² projection and norms.

use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coefficient::CoefficientField;
use crate::error::{check_len, Error, Result};
use crate::linalg::SpdSolver;
use crate::mesh::{Mesh, RefinementMap};
use crate::quadrature::QuadratureRule;
use crate::sparse::{CsrMatrix, Scalar};

/// Weight of a mass matrix.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Unit,
    Field(&'a CoefficientField),
}

/// Gradients of the three barycentric coordinates and the (positive) area.
pub fn p1_gradients(v: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let g = [
        [(v[1][1] - v[2][1]) / det, (v[2][0] - v[1][0]) / det],
        [(v[2][1] - v[0][1]) / det, (v[0][0] - v[2][0]) / det],
        [(v[0][1] - v[1][1]) / det, (v[1][0] - v[0][0]) / det],
    ];
    (g, 0.5 * det.abs())
}

fn rule_for(field: Option<&CoefficientField>) -> QuadratureRule {
    match field.and_then(CoefficientField::constant_value) {
        Some(_) => QuadratureRule::degree2(),
        None if field.is_none() => QuadratureRule::degree2(),
        None => QuadratureRule::degree4(),
    }
}

/// Assembles element matrices in parallel; element order fixes the
/// summation order, so the result does not depend on the thread count.
fn assemble_local<F>(mesh: &Mesh, local: F) -> Result<CsrMatrix<f64>>
where
    F: Fn(usize) -> Result<[[f64; 3]; 3]> + Sync,
{
    let locals = (0..mesh.n_elements())
        .into_par_iter()
        .map(&local)
        .collect::<Result<Vec<_>>>()?;
    let mut triplets = Vec::with_capacity(9 * locals.len());
    for (e, m) in locals.iter().enumerate() {
        let tri = mesh.elements()[e];
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], m[a][b]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), triplets))
}

/// Local `∫_e w λ_a λ_b`.
pub fn local_mass(mesh: &Mesh, e: usize, weight: Weight<'_>) -> [[f64; 3]; 3] {
    let field = match weight {
        Weight::Unit => None,
        Weight::Field(f) => Some(f),
    };
    let rule = rule_for(field);
    let v = mesh.element_coords(e);
    let area = mesh.signed_area(e).abs();
    let pts = rule.map(&v);
    let mut m = [[0.0; 3]; 3];
    for (q, l) in rule.points.iter().enumerate() {
        let w = rule.weights[q] * area * field.map_or(1.0, |f| f.eval(pts[q][0], pts[q][1]));
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += w * l[a] * l[b];
            }
        }
    }
    m
}

/// Local `∫_e b ∇λ_a·∇λ_b`; fails if `b ≤ 0` at a quadrature point.
pub fn local_stiffness(mesh: &Mesh, e: usize, b: &CoefficientField) -> Result<[[f64; 3]; 3]> {
    let rule = rule_for(Some(b));
    let v = mesh.element_coords(e);
    let (g, area) = p1_gradients(&v);
    let mut integral = 0.0;
    for (q, p) in rule.map(&v).iter().enumerate() {
        let val = b.eval(p[0], p[1]);
        if !(val > 0.0) {
            return Err(Error::CoefficientViolation {
                name: b.name().to_string(),
                value: val,
                x: p[0],
                y: p[1],
            });
        }
        integral += rule.weights[q] * val;
    }
    integral *= area;
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        for c in 0..3 {
            m[a][c] = integral * (g[a][0] * g[c][0] + g[a][1] * g[c][1]);
        }
    }
    Ok(m)
}

/// `M_ij = ∫ w λ_i λ_j` over all mesh nodes (boundary included).
pub fn assemble_mass(mesh: &Mesh, weight: Weight<'_>) -> Result<CsrMatrix<f64>> {
    assemble_local(mesh, |e| Ok(local_mass(mesh, e, weight)))
}

/// `A_ij = ∫ b ∇λ_i·∇λ_j` over all mesh nodes. Fails if `b ≤ 0` at a
/// quadrature point.
pub fn assemble_stiffness(mesh: &Mesh, b: &CoefficientField) -> Result<CsrMatrix<f64>> {
    assemble_local(mesh, |e| local_stiffness(mesh, e, b))
}

/// Barycentric coordinates of `p` with respect to the triangle `v`.
pub fn barycentric(v: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let l1 = ((p[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (p[1] - v[0][1])) / det;
    let l2 = ((v[1][0] - v[0][0]) * (p[1] - v[0][1]) - (p[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Numbering of the interior (non-Dirichlet) nodes of a mesh.
#[derive(Debug, Clone)]
pub struct Dofs {
    interior: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl Dofs {
    pub fn interior(mesh: &Mesh) -> Self {
        let interior = mesh.interior_nodes();
        let mut position = vec![None; mesh.n_nodes()];
        for (k, &g) in interior.iter().enumerate() {
            position[g] = Some(k);
        }
        Dofs { interior, position }
    }

    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.position.len()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn local(&self, node: usize) -> Option<usize> {
        self.position[node]
    }

    pub fn restrict<T: Copy>(&self, full: &[T]) -> Result<Vec<T>> {
        check_len(self.n_nodes(), full.len())?;
        Ok(self.interior.iter().map(|&g| full[g]).collect())
    }

    /// Inverse of [`Self::restrict`], with zeros on the boundary.
    pub fn extend<T: Scalar>(&self, reduced: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), reduced.len())?;
        let mut full = vec![T::from_real(0.0); self.n_nodes()];
        for (k, &g) in self.interior.iter().enumerate() {
            full[g] = reduced[k];
        }
        Ok(full)
    }

    pub fn restrict_matrix<T: Scalar>(&self, a: &CsrMatrix<T>) -> CsrMatrix<T> {
        a.submatrix(&self.interior, &self.interior)
    }
}

/// Fine-nodes × coarse-nodes matrix of the P1 interpolation of coarse hat
/// functions.
pub fn prolongation_matrix(refmap: &RefinementMap) -> CsrMatrix<f64> {
    let fine = refmap.fine();
    let coarse = refmap.coarse();
    let mut triplets = Vec::with_capacity(3 * fine.n_nodes());
    for p in 0..fine.n_nodes() {
        let (k, w) = refmap.locate_fine_node(p);
        let tri = coarse.elements()[k];
        for a in 0..3 {
            if w[a] != 0.0 {
                triplets.push((p, tri[a], w[a]));
            }
        }
    }
    CsrMatrix::from_triplets(fine.n_nodes(), coarse.n_nodes(), triplets)
}

/// Fine nodal values of the coarse P1 function with nodal values `coarse`.
pub fn prolong<T: Scalar>(coarse: &[T], refmap: &RefinementMap) -> Result<Vec<T>>
where
    f64: Into<crate::sparse::ActOn<T>>,
{
    check_len(refmap.coarse().n_nodes(), coarse.len())?;
    prolongation_matrix(refmap).apply(coarse)
}

/// Which coarse space the projection targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// All coarse hat functions; reproduces constants.
    Full,
    /// Hat functions of interior coarse nodes only (the space `V_H ⊂ H¹₀`).
    Dirichlet,
}

/// Factored L² projection from fine P1 functions to a coarse P1 space.
pub struct L2Projector {
    boundary: Boundary,
    /// `(M_h P)ᵀ`, restricted to the target coarse nodes.
    rhs_operator: CsrMatrix<f64>,
    coarse_mass: CsrMatrix<f64>,
    solver: SpdSolver,
    coarse_dofs: Dofs,
}

impl L2Projector {
    pub fn new(refmap: &RefinementMap, boundary: Boundary) -> Result<Self> {
        let p = prolongation_matrix(refmap);
        let m_fine = assemble_mass(refmap.fine(), Weight::Unit)?;
        let m_coarse = assemble_mass(refmap.coarse(), Weight::Unit)?;
        let coarse_dofs = Dofs::interior(refmap.coarse());
        let mp_t = sparse_product(&p.transpose(), &m_fine);
        let (rhs_operator, coarse_mass) = match boundary {
            Boundary::Full => (mp_t, m_coarse),
            Boundary::Dirichlet => {
                let all: Vec<usize> = (0..refmap.fine().n_nodes()).collect();
                (
                    mp_t.submatrix(coarse_dofs.nodes(), &all),
                    coarse_dofs.restrict_matrix(&m_coarse),
                )
            }
        };
        let solver = SpdSolver::new(&coarse_mass)?;
        Ok(L2Projector {
            boundary,
            rhs_operator,
            coarse_mass,
            solver,
            coarse_dofs,
        })
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Rows of the constraint operator `(M_h P)ᵀ`; `P_H w = 0` iff this
    /// operator annihilates `w`.
    pub fn constraint(&self) -> &CsrMatrix<f64> {
        &self.rhs_operator
    }

    pub fn coarse_mass(&self) -> &CsrMatrix<f64> {
        &self.coarse_mass
    }

    pub fn coarse_dofs(&self) -> &Dofs {
        &self.coarse_dofs
    }

    /// Coarse coefficients of `P_H w` for a full fine nodal vector `w`: all
    /// coarse nodes for [`Boundary::Full`], interior ones for
    /// [`Boundary::Dirichlet`].
    pub fn project(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rhs_operator.n_cols(), w.len())?;
        let rhs = self.rhs_operator.apply(w)?;
        self.solver.solve(&rhs)
    }

    pub fn project_complex(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.rhs_operator.n_cols(), w.len())?;
        let rhs = self.rhs_operator.apply(w)?;
        self.solver.solve_complex(&rhs)
    }
}

/// `P_H w` onto the full coarse P1 space (boundary nodes included).
pub fn l2_project(fine_vector: &[f64], refmap: &RefinementMap) -> Result<Vec<f64>> {
    L2Projector::new(refmap, Boundary::Full)?.project(fine_vector)
}

/// Sparse product `A B`.
pub fn sparse_product(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> CsrMatrix<f64> {
    let mut triplets = Vec::new();
    let mut acc = vec![0.0; b.n_cols()];
    let mut touched = Vec::new();
    let mut seen = vec![false; b.n_cols()];
    for i in 0..a.n_rows() {
        let (ac, av) = a.row(i);
        for (&k, &x) in ac.iter().zip(av) {
            let (bc, bv) = b.row(k);
            for (&j, &y) in bc.iter().zip(bv) {
                if !seen[j] {
                    seen[j] = true;
                    touched.push(j);
                }
                acc[j] += x * y;
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            triplets.push((i, j, acc[j]));
            acc[j] = 0.0;
            seen[j] = false;
        }
        touched.clear();
    }
    CsrMatrix::from_triplets(a.n_rows(), b.n_cols(), triplets)
}

/// Nodal interpolant of `f`.
pub fn interpolate<T>(mesh: &Mesh, f: impl Fn(f64, f64) -> T) -> Vec<T> {
    mesh.nodes().iter().map(|p| f(p[0], p[1])).collect()
}

/// `∫ f λ_i` for every mesh node, by the degree-4 rule.
pub fn load_vector(mesh: &Mesh, f: &(dyn Fn(f64, f64) -> Complex64 + Sync)) -> Vec<Complex64> {
    let rule = QuadratureRule::degree4();
    let locals: Vec<[Complex64; 3]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let v = mesh.element_coords(e);
            let area = mesh.signed_area(e).abs();
            let mut out = [Complex64::new(0.0, 0.0); 3];
            for (q, p) in rule.map(&v).iter().enumerate() {
                let val = f(p[0], p[1]) * (rule.weights[q] * area);
                for a in 0..3 {
                    out[a] += val * rule.points[q][a];
                }
            }
            out
        })
        .collect();
    let mut b = vec![Complex64::new(0.0, 0.0); mesh.n_nodes()];
    for (e, l) in locals.iter().enumerate() {
        for (a, &node) in mesh.elements()[e].iter().enumerate() {
            b[node] += l[a];
        }
    }
    b
}

type ValueFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(f64, f64) -> [Complex64; 2] + Send + Sync>;

/// A closed-form complex function with an optional gradient.
#[derive(Clone)]
pub struct Analytic {
    value: ValueFn,
    gradient: Option<GradientFn>,
}

impl Analytic {
    pub fn new(value: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Analytic {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(f64, f64) -> [Complex64; 2] + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        (self.value)(x, y)
    }

    pub fn gradient(&self, x: f64, y: f64) -> Option<[Complex64; 2]> {
        self.gradient.as_ref().map(|g| g(x, y))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }
}

impl std::fmt::Debug for Analytic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analytic").field("has_gradient", &self.has_gradient()).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    L2,
    L4,
    H1Semi,
    H1,
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(NormKind::L2),
            "l4" => Ok(NormKind::L4),
            "h1-semi" | "h1semi" | "h1_semi" => Ok(NormKind::H1Semi),
            "h1" => Ok(NormKind::H1),
            other => Err(Error::InvalidArgument(format!("unknown norm kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormKind::L2 => "L2",
            NormKind::L4 => "L4",
            NormKind::H1Semi => "H1-semi",
            NormKind::H1 => "H1",
        })
    }
}

/// Norm of the P1 function `u` (full nodal vector), or of `u − exact` when
/// an analytic function is supplied. Uses the degree-4 rule per element.
pub fn norm(mesh: &Mesh, u: &[Complex64], kind: NormKind, exact: Option<&Analytic>) -> Result<f64> {
    let needs_grad = matches!(kind, NormKind::H1Semi | NormKind::H1);
    if needs_grad && exact.is_some_and(|e| !e.has_gradient()) {
        return Err(Error::InvalidArgument(format!("{kind} error norm needs the exact gradient")));
    }
    let total = norm_integrals(mesh, u, exact, needs_grad)?;
    Ok(kind.from_integrals(total))
}

/// `[∫|e|², ∫|e|⁴, ∫|∇e|²]` for `e = u_h − exact` in one quadrature pass.
/// The gradient integral is that of `u_h` alone unless `with_gradient`.
pub fn norm_integrals(mesh: &Mesh, u: &[Complex64], exact: Option<&Analytic>, with_gradient: bool) -> Result<[f64; 3]> {
    check_len(mesh.n_nodes(), u.len())?;
    let needs_grad = with_gradient;
    if needs_grad && exact.is_some_and(|e| !e.has_gradient()) {
        return Err(Error::InvalidArgument("error gradient needs the exact gradient".into()));
    }
    let rule = QuadratureRule::degree4();
    let parts: Vec<[f64; 3]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let tri = mesh.elements()[e];
            let v = mesh.element_coords(e);
            let (g, area) = p1_gradients(&v);
            let uv = [u[tri[0]], u[tri[1]], u[tri[2]]];
            let grad_h = [0, 1].map(|d| uv[0] * g[0][d] + uv[1] * g[1][d] + uv[2] * g[2][d]);
            let mut acc = [0.0; 3];
            for (q, p) in rule.map(&v).iter().enumerate() {
                let l = rule.points[q];
                let mut val = uv[0] * l[0] + uv[1] * l[1] + uv[2] * l[2];
                let mut grad = grad_h;
                if let Some(ex) = exact {
                    val -= ex.value(p[0], p[1]);
                    if needs_grad {
                        let ge = ex.gradient(p[0], p[1]).expect("checked above");
                        grad = [grad[0] - ge[0], grad[1] - ge[1]];
                    }
                }
                let w = rule.weights[q] * area;
                let m2 = val.norm_sqr();
                acc[0] += w * m2;
                acc[1] += w * m2 * m2;
                acc[2] += w * (grad[0].norm_sqr() + grad[1].norm_sqr());
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for p in &parts {
        for d in 0..3 {
            total[d] += p[d];
        }
    }
    Ok(total)
}

impl NormKind {
    /// The norm from the integrals returned by [`norm_integrals`].
    pub fn from_integrals(self, total: [f64; 3]) -> f64 {
        match self {
            NormKind::L2 => total[0].sqrt(),
            NormKind::L4 => total[1].sqrt().sqrt(),
            NormKind::H1Semi => total[2].sqrt(),
            NormKind::H1 => (total[0] + total[2]).sqrt(),
        }
    }
}

/// Real-valued convenience wrapper around [`norm`].
pub fn norm_real(mesh: &Mesh, u: &[f64], kind: NormKind, exact: Option<&Analytic>) -> Result<f64> {
    let c: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    norm(mesh, &c, kind, exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, refine};
    use std::f64::consts::PI;

    fn total(a: &CsrMatrix<f64>) -> f64 {
        a.values().iter().sum()
    }

    #[test]
    fn unit_mass_integrates_to_area() {
        for n in [1, 3, 8] {
            let mesh = build_structured_mesh(n).unwrap();
            let m = assemble_mass(&mesh, Weight::Unit).unwrap();
            assert!((total(&m) - 1.0).abs() < 1e-12);
            assert!(m.max_asymmetry() < 1e-15);
        }
    }

    #[test]
    fn single_triangle_local_matrices() {
        let mesh = build_structured_mesh(1).unwrap();
        let m = assemble_mass(&mesh, Weight::Unit).unwrap();
        // node 0 = (0,0) is a vertex of both triangles, node 1 = (1,0) only of [0, 1, 3]
        let area = 0.5;
        assert!((m.get(0, 0) - 2.0 * 2.0 * area / 12.0).abs() < 1e-15);
        assert!((m.get(1, 1) - 2.0 * area / 12.0).abs() < 1e-15);
        assert!((m.get(0, 1) - area / 12.0).abs() < 1e-15);
        assert_eq!(m.get(1, 2), 0.0);

        let one = CoefficientField::constant("b", 1.0);
        let a = assemble_stiffness(&mesh, &one).unwrap();
        // [0, 1, 3] has its right angle at node 1
        assert!((a.get(1, 1) - 1.0).abs() < 1e-15);
        assert!((a.get(0, 1) + 0.5).abs() < 1e-15);
        assert!((a.get(1, 3) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_coefficient_rows_sum_to_zero() {
        let mesh = build_structured_mesh(5).unwrap();
        let a = assemble_stiffness(&mesh, &CoefficientField::constant("b", 3.0)).unwrap();
        for i in 0..a.n_rows() {
            let s: f64 = a.row(i).1.iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_coefficient_is_rejected() {
        let mesh = build_structured_mesh(2).unwrap();
        let b = CoefficientField::smooth("b", |x, _| x - 0.5);
        assert!(matches!(assemble_stiffness(&mesh, &b), Err(Error::CoefficientViolation { .. })));
    }

    #[test]
    fn prolongation_reproduces_linears() {
        let coarse = build_structured_mesh(3).unwrap();
        let r = refine(&coarse, 4).unwrap();
        let v = interpolate(coarse_ref(&r), |x, y| x + y);
        let fine = prolong(&v, &r).unwrap();
        for (p, val) in r.fine().nodes().iter().zip(&fine) {
            assert!((p[0] + p[1] - val).abs() < 1e-14);
        }
        assert!(prolong(&[0.0; 16], &r).unwrap().iter().all(|&x| x == 0.0));
        assert!(prolong(&[0.0; 3], &r).is_err());
    }

    fn coarse_ref(r: &RefinementMap) -> &Mesh {
        r.coarse()
    }

    #[test]
    fn projection_is_identity_on_coarse_functions() {
        let coarse = build_structured_mesh(3).unwrap();
        let r = refine(&coarse, 2).unwrap();
        let v: Vec<f64> = (0..coarse.n_nodes()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let back = l2_project(&prolong(&v, &r).unwrap(), &r).unwrap();
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let ones = l2_project(&vec![1.0; r.fine().n_nodes()], &r).unwrap();
        assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn norm_of_sine_product() {
        let mesh = build_structured_mesh(64).unwrap();
        let u = interpolate(&mesh, |x, y| Complex64::new((PI * x).sin() * (PI * y).sin(), 0.0));
        let l2 = norm(&mesh, &u, NormKind::L2, None).unwrap();
        // interpolation error is O(h²)
        assert!((l2 - 0.5).abs() < 5e-4);
        let zero = vec![Complex64::new(0.0, 0.0); mesh.n_nodes()];
        for kind in [NormKind::L2, NormKind::L4, NormKind::H1Semi, NormKind::H1] {
            assert_eq!(norm(&mesh, &zero, kind, None).unwrap(), 0.0);
        }
        assert!("w3".parse::<NormKind>().is_err());
        assert_eq!("H1-semi".parse::<NormKind>().unwrap(), NormKind::H1Semi);
    }

    #[test]
    fn error_norm_against_own_interpolant_of_linear_is_zero() {
        let mesh = build_structured_mesh(4).unwrap();
        let f = |x: f64, y: f64| Complex64::new(2.0 * x - y, x);
        let exact = Analytic::new(f).with_gradient(|_, _| [Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.0)]);
        let u = interpolate(&mesh, f);
        for kind in [NormKind::L2, NormKind::L4, NormKind::H1] {
            assert!(norm(&mesh, &u, kind, Some(&exact)).unwrap() < 1e-13);
        }
        let no_grad = Analytic::new(f);
        assert!(norm(&mesh, &u, NormKind::H1, Some(&no_grad)).is_err());
    }

    #[test]
    fn load_vector_sums_to_integral() {
        let mesh = build_structured_mesh(6).unwrap();
        let b = load_vector(&mesh, &|x, y| Complex64::new(x * x * y, 1.0));
        let s: Complex64 = b.iter().sum();
        assert!((s.re - 1.0 / 6.0).abs() < 1e-13);
        assert!((s.im - 1.0).abs() < 1e-13);
    }

    #[test]
    fn dofs_restrict_extend() {
        let mesh = build_structured_mesh(3).unwrap();
        let d = Dofs::interior(&mesh);
        assert_eq!(d.len(), 4);
        let full: Vec<f64> = (0..16).map(f64::from).collect();
        let r = d.restrict(&full).unwrap();
        assert_eq!(r, vec![5.0, 6.0, 9.0, 10.0]);
        let e = d.extend(&r).unwrap();
        assert_eq!(e[5], 5.0);
        assert_eq!(e[0], 0.0);
    }
}
