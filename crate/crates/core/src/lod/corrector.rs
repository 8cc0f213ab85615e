//! Patch-local corrector problems.
//!
//! For a coarse element `K`, a patch `S = S_ℓ(K)` and a coarse hat function
//! `λ_j`, the corrector `q ∈ W(S)` solves `a_σ(q, w) = −a_K(λ_j, w)` for all
//! `w ∈ W(S)`, where `W(S)` holds the fine functions vanishing on `∂S` whose
//! L² projection onto the coarse space is zero. The constraint is imposed
//! with Lagrange multipliers and the saddle-point system is reduced to its
//! Schur complement on the coarse constraint rows.

use faer::{Accum, Mat, Par};

use super::form::{AssembledForm, BilinearFormSpec};
use crate::error::{Error, Result};
use crate::fem::{barycentric, prolongation_matrix, sparse_product};
use crate::linalg::{symmetric_pseudo_inverse, SpdSolver};
use crate::mesh::{Patch, RefinementMap};
use crate::sparse::CsrMatrix;

/// Eigenvalue cutoff (relative) for the Schur complement pseudo-inverse.
const SCHUR_CUTOFF: f64 = 1e-12;

/// Shared fine-level data for all corrector problems of one form.
pub struct CorrectorSetup<'a> {
    refmap: &'a RefinementMap,
    form: &'a BilinearFormSpec,
    assembled: AssembledForm,
    /// `(M_h P)ᵀ`: row `j` holds `(λ_j, φ_p)` for every fine node `p`.
    constraint: CsrMatrix<f64>,
}

impl<'a> CorrectorSetup<'a> {
    pub fn new(refmap: &'a RefinementMap, form: &'a BilinearFormSpec) -> Result<Self> {
        let assembled = form.assemble(refmap.fine())?;
        let constraint = sparse_product(&prolongation_matrix(refmap).transpose(), &assembled.mass);
        Ok(CorrectorSetup {
            refmap,
            form,
            assembled,
            constraint,
        })
    }

    pub fn refmap(&self) -> &RefinementMap {
        self.refmap
    }

    pub fn form(&self) -> &BilinearFormSpec {
        self.form
    }

    /// The form's matrices on all fine nodes.
    pub fn assembled(&self) -> &AssembledForm {
        &self.assembled
    }

    /// `a_K(λ_j, φ_p)` for the hat function of local vertex `vertex` of
    /// coarse element `k`, as (fine node, value) pairs. Only the fine
    /// children of `k` contribute; boundary fine nodes are kept and dropped
    /// later by the patch solver.
    pub fn element_load(&self, k: usize, vertex: usize) -> Result<Vec<(usize, f64)>> {
        if vertex >= 3 {
            return Err(Error::InvalidArgument(format!("local vertex {vertex} out of range")));
        }
        let coarse_v = self.refmap.coarse().element_coords(k);
        let fine = self.refmap.fine();
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(3 * self.refmap.children(k).len());
        for &t in self.refmap.children(k) {
            let local = self.form.local_matrix(fine, t)?;
            let tri = fine.elements()[t];
            let hat = tri.map(|p| barycentric(&coarse_v, fine.nodes()[p])[vertex]);
            for a in 0..3 {
                let v: f64 = (0..3).map(|b| local[a][b] * hat[b]).sum();
                out.push((tri[a], v));
            }
        }
        out.sort_by_key(|&(p, _)| p);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (p, v) in out {
            match merged.last_mut() {
                Some((q, w)) if *q == p => *w += v,
                _ => merged.push((p, v)),
            }
        }
        Ok(merged)
    }

    /// Factors the constrained problem on one patch.
    pub fn patch_solver(&self, patch: &Patch) -> Result<PatchSolver> {
        let degenerate = |detail: String| Error::PatchDegenerate {
            element: patch.center_element,
            detail,
        };
        let nodes = patch.interior_fine_nodes.clone();
        let coarse = self.refmap.coarse();
        let constraint_nodes: Vec<usize> = patch
            .coarse_nodes_in_patch
            .iter()
            .copied()
            .filter(|&j| !coarse.is_boundary(j))
            .collect();
        let n = nodes.len();
        let nc = constraint_nodes.len();
        if n == 0 {
            return Ok(PatchSolver {
                center: patch.center_element,
                nodes,
                factor: None,
                c: CsrMatrix::from_triplets(nc, 0, Vec::new()),
                y: Mat::zeros(0, nc),
                s_pinv: Mat::zeros(nc, nc),
                constraint_nodes,
            });
        }
        let a_patch = self.assembled.a.submatrix(&nodes, &nodes);
        let factor = SpdSolver::new(&a_patch).map_err(|e| degenerate(e.to_string()))?;
        let c = self.constraint.submatrix(&constraint_nodes, &nodes);

        let mut y = Mat::<f64>::zeros(n, nc);
        for (r, (cols, vals)) in (0..nc).map(|r| (r, c.row(r))) {
            for (&p, &v) in cols.iter().zip(vals) {
                y[(p, r)] = v;
            }
        }
        factor.solve_columns(&mut y)?;
        // S = C Y
        let mut s = Mat::<f64>::zeros(nc, nc);
        for r in 0..nc {
            let (cols, vals) = c.row(r);
            for col in 0..nc {
                s[(r, col)] = cols.iter().zip(vals).map(|(&p, &v)| v * y[(p, col)]).sum();
            }
        }
        for r in 0..nc {
            for col in 0..r {
                let avg = 0.5 * (s[(r, col)] + s[(col, r)]);
                s[(r, col)] = avg;
                s[(col, r)] = avg;
            }
        }
        let (s_pinv, _) = symmetric_pseudo_inverse(s.as_ref(), SCHUR_CUTOFF).map_err(|e| degenerate(e.to_string()))?;
        Ok(PatchSolver {
            center: patch.center_element,
            nodes,
            factor: Some(factor),
            c,
            y,
            s_pinv,
            constraint_nodes,
        })
    }
}

/// A factored patch problem, reusable for every load on the same patch.
pub struct PatchSolver {
    center: usize,
    nodes: Vec<usize>,
    factor: Option<SpdSolver>,
    c: CsrMatrix<f64>,
    y: Mat<f64>,
    s_pinv: Mat<f64>,
    constraint_nodes: Vec<usize>,
}

impl PatchSolver {
    /// Fine nodes carrying the corrector, sorted.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Coarse nodes whose L² moments are constrained to zero.
    pub fn constraint_nodes(&self) -> &[usize] {
        &self.constraint_nodes
    }

    pub fn center_element(&self) -> usize {
        self.center
    }

    /// Corrector values on [`Self::nodes`] for a load given as (fine node,
    /// value) pairs; entries outside the patch interior are ignored.
    pub fn solve(&self, load: &[(usize, f64)]) -> Result<Vec<f64>> {
        let Some(factor) = &self.factor else {
            return Ok(Vec::new());
        };
        let mut r = vec![0.0; self.nodes.len()];
        let mut any = false;
        for &(p, v) in load {
            if let Ok(i) = self.nodes.binary_search(&p) {
                r[i] += v;
                any |= v != 0.0;
            }
        }
        if !any {
            return Ok(r);
        }
        let z = factor.solve(&r)?;
        let cz = self.c.apply(&z)?;
        let nc = cz.len();
        let mut mu = Mat::<f64>::zeros(nc, 1);
        if nc > 0 {
            let cz_mat = Mat::<f64>::from_fn(nc, 1, |i, _| cz[i]);
            faer::linalg::matmul::matmul(&mut mu, Accum::Replace, &self.s_pinv, &cz_mat, 1.0, Par::Seq);
        }
        let mut q: Vec<f64> = z.iter().map(|v| -v).collect();
        if nc > 0 {
            let mut ymu = Mat::<f64>::zeros(q.len(), 1);
            faer::linalg::matmul::matmul(&mut ymu, Accum::Replace, &self.y, &mu, 1.0, Par::Seq);
            for (i, qi) in q.iter_mut().enumerate() {
                *qi += ymu[(i, 0)];
            }
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::PatchDegenerate {
                element: self.center,
                detail: "non-finite corrector".into(),
            });
        }
        Ok(q)
    }
}

/// A fine function supported on a patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchVector {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
}

impl PatchVector {
    /// Full fine nodal vector.
    pub fn to_fine(&self, n_fine_nodes: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_fine_nodes];
        for (&p, &v) in self.nodes.iter().zip(&self.values) {
            out[p] = v;
        }
        out
    }
}

/// Corrector `Q_{K,ℓ} λ_j` for the hat function of local vertex `vertex`
/// of coarse element `k`, on the given patch around `k`.
pub fn compute_corrector(setup: &CorrectorSetup<'_>, k: usize, vertex: usize, patch: &Patch) -> Result<PatchVector> {
    if patch.center_element != k {
        return Err(Error::InvalidArgument(format!(
            "patch is centered at {} but element {k} was requested",
            patch.center_element
        )));
    }
    let solver = setup.patch_solver(patch)?;
    let load = setup.element_load(k, vertex)?;
    let values = solver.solve(&load)?;
    Ok(PatchVector {
        nodes: solver.nodes().to_vec(),
        values,
    })
}
