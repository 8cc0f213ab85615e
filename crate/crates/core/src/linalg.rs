//! Thin wrappers over faer factorizations plus a few small dense helpers.

use faer::linalg::solvers::Solve;
use faer::{Accum, ColMut, Mat, MatRef, Par, Side};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;

/// Sparse Cholesky factorization of a real SPD matrix.
pub struct SpdSolver {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix<f64>) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        let llt = a
            .to_faer()
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::SolverFailure(format!("sparse Cholesky: {e:?}")))?;
        Ok(SpdSolver { n: a.n_rows(), llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut x = b.to_vec();
        self.llt.solve_in_place(ColMut::from_slice_mut(&mut x));
        Ok(x)
    }

    /// Solves real and imaginary parts separately.
    pub fn solve_complex(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, b.len())?;
        let mut rhs = Mat::<f64>::zeros(self.n, 2);
        for (i, v) in b.iter().enumerate() {
            rhs[(i, 0)] = v.re;
            rhs[(i, 1)] = v.im;
        }
        self.llt.solve_in_place(&mut rhs);
        Ok((0..self.n).map(|i| Complex64::new(rhs[(i, 0)], rhs[(i, 1)])).collect())
    }

    /// Overwrites every column of `rhs` with the solution.
    pub fn solve_columns(&self, rhs: &mut Mat<f64>) -> Result<()> {
        check_len(self.n, rhs.nrows())?;
        self.llt.solve_in_place(rhs);
        Ok(())
    }
}

/// Sparse LU factorization of a general complex matrix.
pub struct ComplexSparseSolver {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
}

impl ComplexSparseSolver {
    pub fn new(a: &CsrMatrix<Complex64>) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        let lu = a
            .to_faer()
            .sp_lu()
            .map_err(|e| Error::SolverFailure(format!("sparse LU: {e:?}")))?;
        Ok(ComplexSparseSolver { n: a.n_rows(), lu })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, b.len())?;
        let mut x = b.to_vec();
        self.lu.solve_in_place(ColMut::from_slice_mut(&mut x));
        Ok(x)
    }
}

/// Dense partial-pivoting LU of a complex matrix.
pub struct DenseComplexSolver {
    n: usize,
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
}

impl DenseComplexSolver {
    pub fn new(a: &Mat<Complex64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let lu = a.partial_piv_lu();
        Ok(DenseComplexSolver { n: a.nrows(), lu })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, b.len())?;
        let mut x = b.to_vec();
        self.lu.solve_in_place(ColMut::from_slice_mut(&mut x));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("dense LU produced non-finite values".into()));
        }
        Ok(x)
    }
}

/// Dense Cholesky of a real SPD matrix.
pub struct DenseSpdSolver {
    n: usize,
    llt: faer::linalg::solvers::Llt<f64>,
}

impl DenseSpdSolver {
    pub fn new(a: &Mat<f64>) -> Result<Self> {
        let llt = a
            .llt(Side::Lower)
            .map_err(|e| Error::SolverFailure(format!("dense Cholesky: {e:?}")))?;
        Ok(DenseSpdSolver { n: a.nrows(), llt })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let mut x = b.to_vec();
        self.llt.solve_in_place(ColMut::from_slice_mut(&mut x));
        Ok(x)
    }

    pub fn solve_complex(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let re = self.solve(&b.iter().map(|v| v.re).collect::<Vec<_>>())?;
        let im = self.solve(&b.iter().map(|v| v.im).collect::<Vec<_>>())?;
        Ok(re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect())
    }
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix, discarding
/// eigenvalues below `rel_tol · max |λ|`. Returns the inverse and its rank.
pub fn symmetric_pseudo_inverse(s: MatRef<'_, f64>, rel_tol: f64) -> Result<(Mat<f64>, usize)> {
    let n = s.nrows();
    if n == 0 {
        return Ok((Mat::zeros(0, 0), 0));
    }
    let evd = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverFailure(format!("symmetric eigendecomposition: {e:?}")))?;
    let lambda = evd.S().column_vector();
    let u = evd.U();
    let max = (0..n).map(|i| lambda[i].abs()).fold(0.0, f64::max);
    let cut = rel_tol * max;
    let kept: Vec<usize> = (0..n).filter(|&i| lambda[i] > cut).collect();
    let mut scaled = Mat::<f64>::zeros(n, kept.len());
    let mut basis = Mat::<f64>::zeros(n, kept.len());
    for (c, &k) in kept.iter().enumerate() {
        for r in 0..n {
            basis[(r, c)] = u[(r, k)];
            scaled[(r, c)] = u[(r, k)] / lambda[k];
        }
    }
    let mut out = Mat::<f64>::zeros(n, n);
    faer::linalg::matmul::matmul(&mut out, Accum::Replace, &scaled, basis.transpose(), 1.0, Par::Seq);
    Ok((out, kept.len()))
}

/// Smallest Ritz value over `probes` Lanczos runs of `steps` iterations
/// each, started from seeded random vectors. Full reorthogonalization.
pub fn lanczos_smallest_ritz(a: &CsrMatrix<f64>, probes: usize, steps: usize, seed: u64) -> Result<f64> {
    let n = a.n_rows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let m = steps.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..probes {
        let mut v: Vec<f64> = (0..n).map(|_| (rng.next_u64() as f64 / u64::MAX as f64) - 0.5).collect();
        normalize(&mut v);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for j in 0..m {
            let mut w = a.apply(&basis[j])?;
            let aj = dot(&w, &basis[j]);
            alpha.push(aj);
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
            let bj = dot(&w, &w).sqrt();
            if j + 1 == m || bj < 1e-12 * aj.abs().max(1e-300) {
                break;
            }
            beta.push(bj);
            w.iter_mut().for_each(|x| *x /= bj);
            basis.push(w);
        }
        let k = alpha.len();
        let mut t = Mat::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let ev = t
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::SolverFailure(format!("tridiagonal eigenvalues: {e:?}")))?;
        best = best.min(ev[0]);
    }
    Ok(best)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let s = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= s);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn spd_solver_roundtrip() {
        let a = laplace_1d(20, 0.0);
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let b = a.apply(&x).unwrap();
        let y = SpdSolver::new(&a).unwrap().solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_fails_cholesky() {
        assert!(SpdSolver::new(&laplace_1d(5, -3.0)).is_err());
    }

    #[test]
    fn complex_sparse_solver_roundtrip() {
        let a = CsrMatrix::combine(8, &[(Complex64::new(1.0, 0.5), &laplace_1d(8, 0.0))]);
        let x: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.apply(&x).unwrap();
        let y = ComplexSparseSolver::new(&a).unwrap().solve(&b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_of_singular_matrix() {
        // [[1,1],[1,1]] has pseudo-inverse [[1,1],[1,1]] / 4
        let s = Mat::<f64>::from_fn(2, 2, |_, _| 1.0);
        let (p, rank) = symmetric_pseudo_inverse(s.as_ref(), 1e-12).unwrap();
        assert_eq!(rank, 1);
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[(i, j)] - 0.25).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lanczos_finds_smallest_eigenvalue() {
        let n = 30;
        let a = laplace_1d(n, 0.0);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let ritz = lanczos_smallest_ritz(&a, 3, 30, 1).unwrap();
        assert!((ritz - exact).abs() < 1e-8, "{ritz} vs {exact}");
        assert!(lanczos_smallest_ritz(&laplace_1d(n, -1.0), 2, 30, 2).unwrap() < 0.0);
    }
}
