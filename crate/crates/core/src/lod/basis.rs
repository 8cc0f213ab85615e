//! Corrected basis `R_ℓ λ_i = λ_i + Σ_K Q_{K,ℓ} λ_i` and its Galerkin matrices.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;

use super::corrector::CorrectorSetup;
use super::form::{AssembledForm, BilinearFormSpec};
use crate::error::{check_len, Error, Result};
use crate::fem::{prolongation_matrix, Dofs};
use crate::linalg::DenseSpdSolver;
use crate::mesh::{element_patch, Mesh, RefinementMap};
use crate::sparse::{CsrMatrix, Scalar};

/// Number of patch layers `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layers {
    Fixed(usize),
    /// Enough layers for every patch to cover the whole mesh.
    Saturated,
}

impl Layers {
    /// `ceil(4 log₂(1/H))` for a coarse mesh with `n_side` cells per side.
    pub fn default_for(n_side: usize) -> Self {
        Layers::Fixed((4.0 * (n_side as f64).log2()).ceil().max(0.0) as usize)
    }

    pub fn resolve(self, coarse: &Mesh) -> usize {
        match self {
            Layers::Fixed(l) => l,
            Layers::Saturated => 2 * coarse.n_side(),
        }
    }
}

impl FromStr for Layers {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sat" | "saturated" => Ok(Layers::Saturated),
            other => other
                .parse::<usize>()
                .map(Layers::Fixed)
                .map_err(|_| Error::InvalidArgument(format!("layers must be a count or `sat`, got `{other}`"))),
        }
    }
}

impl fmt::Display for Layers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layers::Fixed(l) => write!(f, "{l}"),
            Layers::Saturated => f.write_str("sat"),
        }
    }
}

/// The LOD basis on the interior fine nodes together with its corrected
/// Galerkin matrices.
#[derive(Debug, Clone)]
pub struct LodBasis {
    pub(crate) coarse_side: usize,
    pub(crate) factor: usize,
    pub(crate) layers: usize,
    pub(crate) saturated: bool,
    pub(crate) sigma: f64,
    pub(crate) coarse_dofs: Dofs,
    pub(crate) fine_dofs: Dofs,
    /// Row `c` holds column `c` of `B` (fine interior dof indices); the
    /// stored pattern is the column's support mask.
    pub(crate) bt: CsrMatrix<f64>,
    pub(crate) stiffness: Mat<f64>,
    pub(crate) mass_v: Mat<f64>,
    pub(crate) mass: Mat<f64>,
}

/// Builds the basis for `ℓ` layers.
pub fn build_lod_basis(refmap: &RefinementMap, form: &BilinearFormSpec, layers: Layers) -> Result<LodBasis> {
    let setup = CorrectorSetup::new(refmap, form)?;
    build_from_setup(&setup, layers)
}

type Contribution = (usize, Arc<Vec<usize>>, Vec<f64>);

/// Same as [`build_lod_basis`], reusing an existing fine-level setup.
pub fn build_from_setup(setup: &CorrectorSetup<'_>, layers: Layers) -> Result<LodBasis> {
    let refmap = setup.refmap();
    let coarse = refmap.coarse();
    let fine = refmap.fine();
    let l = layers.resolve(coarse);

    // Elements with identical patches share one factorization, and their
    // loads for a common coarse node can be summed before solving.
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for k in 0..coarse.n_elements() {
        groups.entry(element_patch(coarse, k, l)?.elements).or_default().push(k);
    }
    let saturated = groups.len() == 1 && groups.keys().next().is_some_and(|e| e.len() == coarse.n_elements());
    let groups: Vec<(Vec<usize>, Vec<usize>)> = groups.into_iter().collect();

    let solved: Vec<Vec<Contribution>> = groups
        .par_iter()
        .map(|(elements, members)| -> Result<Vec<Contribution>> {
            let mut patch = element_patch(coarse, members[0], l)?;
            patch.interior_fine_nodes = refmap.interior_fine_nodes(elements);
            let solver = setup.patch_solver(&patch)?;
            let nodes = Arc::new(solver.nodes().to_vec());
            let mut loads: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            for &k in members {
                for (v, &j) in coarse.elements()[k].iter().enumerate() {
                    if !coarse.is_boundary(j) {
                        loads.entry(j).or_default().extend(setup.element_load(k, v)?);
                    }
                }
            }
            loads
                .into_iter()
                .map(|(j, load)| Ok((j, nodes.clone(), solver.solve(&load)?)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let coarse_dofs = Dofs::interior(coarse);
    let fine_dofs = Dofs::interior(fine);
    let mut per_node: Vec<Vec<&Contribution>> = vec![Vec::new(); coarse.n_nodes()];
    for c in solved.iter().flatten() {
        per_node[c.0].push(c);
    }

    let pt = prolongation_matrix(refmap).transpose();
    let n_fine = fine_dofs.len();
    let mut scratch = vec![0.0; n_fine];
    let mut in_mask = vec![false; n_fine];
    let mut mask: Vec<usize> = Vec::new();
    let mut offsets = vec![0usize];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for &j in coarse_dofs.nodes() {
        let mut touch = |d: usize, v: f64, scratch: &mut [f64]| {
            if !in_mask[d] {
                in_mask[d] = true;
                mask.push(d);
            }
            scratch[d] += v;
        };
        let (hat_nodes, hat_vals) = pt.row(j);
        for (&p, &v) in hat_nodes.iter().zip(hat_vals) {
            if let Some(d) = fine_dofs.local(p) {
                touch(d, v, &mut scratch);
            }
        }
        for (_, nodes, values) in &per_node[j] {
            for (&p, &v) in nodes.iter().zip(values) {
                let d = fine_dofs.local(p).expect("patch nodes are interior");
                touch(d, v, &mut scratch);
            }
        }
        mask.sort_unstable();
        for &d in &mask {
            cols.push(d);
            vals.push(scratch[d]);
            scratch[d] = 0.0;
            in_mask[d] = false;
        }
        mask.clear();
        offsets.push(cols.len());
    }
    let bt = CsrMatrix::from_parts(coarse_dofs.len(), n_fine, offsets, cols, vals)?;

    let assembled = setup.assembled();
    let mut basis = LodBasis {
        coarse_side: coarse.n_side(),
        factor: refmap.factor(),
        layers: l,
        saturated,
        sigma: assembled.sigma,
        coarse_dofs,
        fine_dofs,
        bt,
        stiffness: Mat::zeros(0, 0),
        mass_v: Mat::zeros(0, 0),
        mass: Mat::zeros(0, 0),
    };
    basis.stiffness = basis.corrected(&assembled.stiffness)?;
    basis.mass_v = basis.corrected(&assembled.mass_v)?;
    basis.mass = basis.corrected(&assembled.mass)?;
    Ok(basis)
}

impl LodBasis {
    /// Dimension of the LOD space (interior coarse nodes).
    pub fn dim(&self) -> usize {
        self.bt.n_rows()
    }

    /// Number of interior fine nodes.
    pub fn fine_dim(&self) -> usize {
        self.bt.n_cols()
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Whether every patch covered the whole mesh (ideal LOD).
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn coarse_side(&self) -> usize {
        self.coarse_side
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn coarse_dofs(&self) -> &Dofs {
        &self.coarse_dofs
    }

    pub fn fine_dofs(&self) -> &Dofs {
        &self.fine_dofs
    }

    /// Column `c` of `B` as (fine interior dof indices, values); the
    /// indices are the column's support mask.
    pub fn column(&self, c: usize) -> (&[usize], &[f64]) {
        self.bt.row(c)
    }

    /// `Bᵀ` in CSR form.
    pub fn basis_transpose(&self) -> &CsrMatrix<f64> {
        &self.bt
    }

    /// `B` as a dense fine-interior × coarse-interior matrix.
    pub fn basis_matrix(&self) -> Mat<f64> {
        let mut b = Mat::<f64>::zeros(self.fine_dim(), self.dim());
        for c in 0..self.dim() {
            let (idx, val) = self.bt.row(c);
            for (&d, &v) in idx.iter().zip(val) {
                b[(d, c)] = v;
            }
        }
        b
    }

    /// `Bᵀ A B` for a (symmetric) pattern `A` on all fine nodes.
    pub fn corrected(&self, a_full: &CsrMatrix<f64>) -> Result<Mat<f64>> {
        check_len(self.fine_dofs.n_nodes(), a_full.n_rows())?;
        let a = self.fine_dofs.restrict_matrix(a_full);
        let b = self.basis_matrix();
        let mut ab = Mat::<f64>::zeros(self.fine_dim(), self.dim());
        for c in 0..self.dim() {
            let src = b.col(c).try_as_col_major().expect("owned column is contiguous").as_slice();
            let dst = ab.col_mut(c).try_as_col_major_mut().expect("owned column is contiguous").as_slice_mut();
            a.apply_into(src, dst);
        }
        let mut g = Mat::<f64>::zeros(self.dim(), self.dim());
        faer::linalg::matmul::matmul(&mut g, Accum::Replace, b.transpose(), &ab, 1.0, Par::Seq);
        for i in 0..self.dim() {
            for j in 0..i {
                let s = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        Ok(g)
    }

    /// `Bᵀ K B` for the `b`-weighted stiffness `K`.
    pub fn stiffness(&self) -> &Mat<f64> {
        &self.stiffness
    }

    /// `Bᵀ M_V B`.
    pub fn mass_v(&self) -> &Mat<f64> {
        &self.mass_v
    }

    /// `Bᵀ M B`, the corrected mass matrix.
    pub fn mass(&self) -> &Mat<f64> {
        &self.mass
    }

    /// `Bᵀ A_σ B`, the corrected stiffness of the shifted form.
    pub fn a_lod(&self) -> Mat<f64> {
        Mat::from_fn(self.dim(), self.dim(), |i, j| {
            self.stiffness[(i, j)] + self.mass_v[(i, j)] + self.sigma * self.mass[(i, j)]
        })
    }

    /// Interior fine nodal values of `Σ_c x_c B_c`.
    pub fn fine_values<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.dim(), x.len())?;
        let mut out = vec![T::default(); self.fine_dim()];
        for (c, &xc) in x.iter().enumerate() {
            let (idx, val) = self.bt.row(c);
            for (&d, &v) in idx.iter().zip(val) {
                out[d] += xc.scale(v);
            }
        }
        Ok(out)
    }

    /// All fine nodal values (zeros on the boundary).
    pub fn to_fine<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        self.fine_dofs.extend(&self.fine_values(x)?)
    }

    /// `Bᵀ g` for a vector on the interior fine nodes.
    pub fn restrict_load<T: Scalar>(&self, g: &[T]) -> Result<Vec<T>> {
        check_len(self.fine_dim(), g.len())?;
        Ok((0..self.dim())
            .map(|c| {
                let (idx, val) = self.bt.row(c);
                let mut acc = T::default();
                for (&d, &v) in idx.iter().zip(val) {
                    acc += g[d].scale(v);
                }
                acc
            })
            .collect())
    }

    /// Ritz projection: `x` with `Bᵀ A_σ (B x − u) = 0` for a full fine
    /// nodal vector `u` (boundary values included in `A_σ u`).
    pub fn ritz_project(&self, u: &[Complex64], form: &AssembledForm) -> Result<Vec<Complex64>> {
        check_len(self.fine_dofs.n_nodes(), u.len())?;
        let au = self.fine_dofs.restrict(&form.a.apply(u)?)?;
        let rhs = self.restrict_load(&au)?;
        DenseSpdSolver::new(&self.a_lod())
            .map_err(|e| Error::SolverFailure(format!("corrected stiffness: {e}")))?
            .solve_complex(&rhs)
    }

    /// L² projection onto the LOD space of a full fine nodal vector.
    pub fn l2_project(&self, u: &[Complex64], form: &AssembledForm) -> Result<Vec<Complex64>> {
        check_len(self.fine_dofs.n_nodes(), u.len())?;
        let mu = self.fine_dofs.restrict(&form.mass.apply(u)?)?;
        let rhs = self.restrict_load(&mu)?;
        DenseSpdSolver::new(&self.mass)
            .map_err(|e| Error::SolverFailure(format!("corrected mass: {e}")))?
            .solve_complex(&rhs)
    }
}

/// One row of a localization study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub layers: usize,
    /// `‖R_ℓ u − R_sat u‖_{L²}`.
    pub error_l2: f64,
    /// The same difference in the `a_σ` energy norm.
    pub error_energy: f64,
}

/// Distance between the Ritz projections of `u` onto localized and ideal
/// LOD spaces, for each requested layer count.
pub fn localization_decay_study(
    refmap: &RefinementMap,
    form: &BilinearFormSpec,
    layers: impl IntoIterator<Item = usize>,
    u: &[Complex64],
) -> Result<Vec<DecayRow>> {
    let setup = CorrectorSetup::new(refmap, form)?;
    let assembled = setup.assembled();
    let ideal = build_from_setup(&setup, Layers::Saturated)?;
    let reference = ideal.to_fine(&ideal.ritz_project(u, assembled)?)?;
    layers
        .into_iter()
        .map(|l| {
            let basis = build_from_setup(&setup, Layers::Fixed(l))?;
            let r = basis.to_fine(&basis.ritz_project(u, assembled)?)?;
            let d: Vec<Complex64> = r.iter().zip(&reference).map(|(a, b)| a - b).collect();
            Ok(DecayRow {
                layers: l,
                error_l2: assembled.mass.quadratic_form(&d).max(0.0).sqrt(),
                error_energy: assembled.a.quadratic_form(&d).max(0.0).sqrt(),
            })
        })
        .collect()
}
