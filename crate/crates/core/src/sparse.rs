//! Compressed sparse row storage for assembled operators.

use std::fmt::Debug;
use std::io::Write;
use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

/// Scalars stored in a [`CsrMatrix`] or acted on by real operators.
pub trait Scalar:
    Copy + Debug + Default + PartialEq + Send + Sync + Add<Output = Self> + AddAssign + Mul<Output = Self> + 'static
{
    fn scale(self, s: f64) -> Self;
    fn abs(self) -> f64;
    fn is_finite(self) -> bool;
    fn from_real(x: f64) -> Self;
    /// Matrix-market value columns.
    fn mm_entry(self) -> String;
    fn mm_field() -> &'static str;
}

impl Scalar for f64 {
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn mm_entry(self) -> String {
        format!("{:.17e}", self)
    }
    fn mm_field() -> &'static str {
        "real"
    }
}

impl Scalar for Complex64 {
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn mm_entry(self) -> String {
        format!("{:.17e} {:.17e}", self.re, self.im)
    }
    fn mm_field() -> &'static str {
        "complex"
    }
}

/// Sparse matrix in CSR layout with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are
    /// summed in the order they appear.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        // stable sort keeps the summation order of duplicates deterministic
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n_rows && j < n_cols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_offsets[i + 1] += 1;
                col_indices.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Wraps raw CSR arrays after checking their consistency.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("malformed CSR arrays: {msg}")));
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 {
            return bad("row offsets");
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return bad("lengths");
        }
        for i in 0..n_rows {
            if row_offsets[i + 1] < row_offsets[i] {
                return bad("offsets decrease");
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&c| c >= n_cols) {
                return bad("column indices");
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::from_real(1.0))).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::default(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.n_cols, self.n_rows, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.scale(s));
        out
    }

    /// `y = A x` for any scalar type `A` can act on.
    pub fn apply<U>(&self, x: &[U]) -> Result<Vec<U>>
    where
        U: Scalar,
        T: Into<ActOn<U>>,
    {
        check_len(self.n_cols, x.len())?;
        let mut y = vec![U::default(); self.n_rows];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation; panics on dimension mismatch.
    pub fn apply_into<U>(&self, x: &[U], y: &mut [U])
    where
        U: Scalar,
        T: Into<ActOn<U>>,
    {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = U::default();
            for (&j, &a) in cols.iter().zip(vals) {
                acc += a.into().times(x[j]);
            }
            *yi = acc;
        }
    }

    /// Submatrix on the given (sorted or unsorted) row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.n_cols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut trip = Vec::new();
        for (new_i, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let nj = col_map[j];
                if nj != usize::MAX {
                    trip.push((new_i, nj, x));
                }
            }
        }
        Self::from_triplets(rows.len(), cols.len(), trip)
    }

    /// Writes the matrix in matrix-market coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate {} general", T::mm_field())?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {}", i + 1, j + 1, v.mm_entry())?;
        }
        Ok(())
    }

    pub fn to_faer(&self) -> faer::sparse::SparseColMat<usize, T>
    where
        T: faer::traits::ComplexField,
    {
        let trip: Vec<faer::sparse::Triplet<usize, usize, T>> =
            self.triplets().map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v)).collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &trip)
            .expect("CSR indices are valid by construction")
    }
}

impl CsrMatrix<f64> {
    /// `max |A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// `xᵀ A y` for real vectors.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.apply(y).expect("dimension checked by caller");
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// `Re(xᴴ A x)` for a complex vector and real symmetric `A`.
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        let ax = self.apply(x).expect("dimension checked by caller");
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `Σ c_k A_k` for real matrices with complex coefficients.
    pub fn combine(n: usize, terms: &[(Complex64, &CsrMatrix<f64>)]) -> CsrMatrix<Complex64> {
        let mut trip = Vec::new();
        for (c, a) in terms {
            assert_eq!((a.n_rows, a.n_cols), (n, n));
            trip.extend(a.triplets().map(|(i, j, v)| (i, j, *c * v)));
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    /// `Σ c_k A_k` with real coefficients.
    pub fn combine_real(n: usize, terms: &[(f64, &CsrMatrix<f64>)]) -> CsrMatrix<f64> {
        let mut trip = Vec::new();
        for (c, a) in terms {
            assert_eq!((a.n_rows, a.n_cols), (n, n));
            trip.extend(a.triplets().map(|(i, j, v)| (i, j, *c * v)));
        }
        CsrMatrix::from_triplets(n, n, trip)
    }
}

/// Adapter letting a real matrix act on complex vectors.
#[derive(Clone, Copy)]
pub struct ActOn<U>(Action<U>);

#[derive(Clone, Copy)]
enum Action<U> {
    Same(U),
    Real(f64),
}

impl<U: Scalar> ActOn<U> {
    #[inline]
    fn times(self, x: U) -> U {
        match self.0 {
            Action::Same(a) => a * x,
            Action::Real(a) => x.scale(a),
        }
    }
}

impl From<f64> for ActOn<f64> {
    #[inline]
    fn from(a: f64) -> Self {
        ActOn(Action::Same(a))
    }
}

impl From<f64> for ActOn<Complex64> {
    #[inline]
    fn from(a: f64) -> Self {
        ActOn(Action::Real(a))
    }
}

impl From<Complex64> for ActOn<Complex64> {
    #[inline]
    fn from(a: Complex64) -> Self {
        ActOn(Action::Same(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 4.0)]);
        assert_eq!(a.row(1), (&[0usize, 2][..], &[3.0, 5.0][..]));
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn real_matrix_acts_on_complex_vectors() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, -1.0)]);
        let x = [Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)];
        let y = a.apply(&x).unwrap();
        assert_eq!(y, vec![Complex64::new(2.0, 4.0), Complex64::new(0.0, -2.0)]);
        assert!(a.apply(&x[..1]).is_err());
    }

    #[test]
    fn submatrix_and_transpose() {
        let a = CsrMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (2, 0, 3.0), (1, 1, 4.0)]);
        let s = a.submatrix(&[0, 2], &[0, 2]);
        assert_eq!(s.get(0, 1), 2.0);
        assert_eq!(s.get(1, 0), 3.0);
        assert_eq!(a.transpose().get(2, 0), 2.0);
        assert_eq!(a.max_asymmetry(), 1.0);
    }

    #[test]
    fn matrix_market_header() {
        let a = CsrMatrix::<f64>::identity(2);
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 "));
    }
}
