//! Dense reference constructions shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use lod_nls::fem::{assemble_mass, prolongation_matrix, Dofs, Weight};
use lod_nls::lod::BilinearFormSpec;
use lod_nls::mesh::RefinementMap;
use lod_nls::sparse::CsrMatrix;

pub fn dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        let (idx, val) = a.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            d[(i, j)] += v;
        }
    }
    d
}

pub fn select(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// The ideal LOD space built from an explicit null-space basis.
pub struct DenseLod {
    /// `a_σ` on the fine interior nodes.
    pub a: DMatrix<f64>,
    /// Constraint rows `(φ_j, ·)` for the interior coarse hats.
    pub c: DMatrix<f64>,
    /// Orthonormal basis of `ker C`.
    pub kernel: DMatrix<f64>,
    /// Prolonged coarse hats, fine interior × coarse interior.
    pub hats: DMatrix<f64>,
    /// `(I − Q) hats` with `Q` the `a_σ`-orthogonal projection onto `ker C`.
    pub basis: DMatrix<f64>,
}

pub fn dense_ideal_lod(refmap: &RefinementMap, form: &BilinearFormSpec) -> DenseLod {
    let fine = refmap.fine();
    let fine_dofs = Dofs::interior(fine);
    let coarse_dofs = Dofs::interior(refmap.coarse());
    let assembled = form.assemble(fine).unwrap();
    let a = select(&dense(&assembled.a), fine_dofs.nodes(), fine_dofs.nodes());
    let m = dense(&assemble_mass(fine, Weight::Unit).unwrap());
    let p = dense(&prolongation_matrix(refmap));
    let c = select(&(p.transpose() * &m), coarse_dofs.nodes(), fine_dofs.nodes());
    let hats = select(&p, fine_dofs.nodes(), coarse_dofs.nodes());

    // ker C = eigenvectors of I − Cᵀ(CCᵀ)⁻¹C with eigenvalue one
    let nf = fine_dofs.len();
    let cct_inv = (&c * c.transpose()).try_inverse().expect("constraint rows are independent");
    let proj = DMatrix::identity(nf, nf) - c.transpose() * cct_inv * &c;
    let eig = nalgebra::SymmetricEigen::new((&proj + proj.transpose()) * 0.5);
    let keep: Vec<usize> = (0..nf).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    assert_eq!(keep.len(), nf - coarse_dofs.len());
    let kernel = DMatrix::from_fn(nf, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])]);

    let nan = kernel.transpose() * &a * &kernel;
    let q = &kernel * nan.lu().solve(&(kernel.transpose() * &a * &hats)).unwrap();
    let basis = &hats - q;
    DenseLod {
        a,
        c,
        kernel,
        hats,
        basis,
    }
}

impl DenseLod {
    /// Coefficients of the Ritz projection of the interior values `u`.
    pub fn ritz(&self, u: &DVector<f64>) -> DVector<f64> {
        let k = self.basis.transpose() * &self.a * &self.basis;
        let rhs = self.basis.transpose() * &self.a * u;
        k.lu().solve(&rhs).unwrap()
    }
}

/// Column `c` of the library basis as a dense vector on the fine interior.
pub fn library_column(basis: &lod_nls::lod::LodBasis, c: usize) -> DVector<f64> {
    let mut v = DVector::zeros(basis.fine_dim());
    let (idx, val) = basis.column(c);
    for (&i, &x) in idx.iter().zip(val) {
        v[i] = x;
    }
    v
}
