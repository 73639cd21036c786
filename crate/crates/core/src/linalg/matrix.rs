use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Hilbert-space dimension any operation may produce.
pub const MAX_DIMENSION: usize = 1 << 14;

/// Validator tolerance shared by every quantum object.
pub const TOLERANCE: f64 = 1e-9;

/// Dense complex matrix stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Outer product |a⟩⟨b|.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Matrix product; zero entries of `self` are skipped, which keeps products
    /// with identity-padded local operators cheap.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Tr[self · rhs] without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Result<Complex64> {
        if self.cols != rhs.rows || self.rows != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[r * self.cols + k] * rhs.data[k * rhs.cols + r];
            }
        }
        Ok(acc)
    }

    /// Kronecker product, rejecting results above [`MAX_DIMENSION`].
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        let rows = self.rows.saturating_mul(rhs.rows);
        let cols = self.cols.saturating_mul(rhs.cols);
        let requested = rows.max(cols);
        if requested > MAX_DIMENSION {
            return Err(Error::DimensionBudget {
                requested,
                limit: MAX_DIMENSION,
            });
        }
        Ok(Self::from_fn(rows, cols, |r, c| {
            self[(r / rhs.rows, c / rhs.cols)] * rhs[(r % rhs.rows, c % rhs.cols)]
        }))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Eigenvalues of a Hermitian matrix, sorted descending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "eigenvalues of a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if !self.is_hermitian(TOLERANCE) {
            return Err(Error::InvalidParameter("matrix is not Hermitian".into()));
        }
        // Symmetrize so rounding noise in the upper triangle cannot leak in.
        let n = self.rows;
        let m = DMatrix::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5);
        let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

/// Pauli matrices and a few fixed single-qubit operators.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64;

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, 2, vec![O, ONE, ONE, O]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, 2, vec![O, -I, I, O]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, 2, vec![ONE, O, O, -ONE]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_kron_identity() {
        let i4 = ComplexMatrix::identity(2).kron(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));
    }

    #[test]
    fn basis_projector_kron() {
        let p0 = ComplexMatrix::diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::diagonal(&[0.0, 1.0]);
        let p01 = p0.kron(&p1).unwrap();
        assert_eq!(p01, ComplexMatrix::diagonal(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_rejects_budget_overflow() {
        let big = ComplexMatrix::identity(1 << 7);
        let err = big.kron(&ComplexMatrix::identity(1 << 8)).unwrap_err();
        assert!(matches!(err, Error::DimensionBudget { requested, .. } if requested == 1 << 15));
        assert!(big.kron(&ComplexMatrix::identity(1 << 7)).is_ok());
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
        let xy = &x * &y;
        assert!(xy.max_abs_diff(&z.scale(Complex64::new(0.0, 1.0))) < 1e-15);
        assert!((&x * &x).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn trace_product_matches_matmul() {
        let a = ComplexMatrix::from_fn(3, 3, |r, k| Complex64::new(r as f64 + 1.0, k as f64 - 1.0));
        let b = ComplexMatrix::from_fn(3, 3, |r, k| Complex64::new((r * k) as f64, 0.5));
        let direct = (&a * &b).trace();
        assert!((a.trace_product(&b).unwrap() - direct).norm() < 1e-12);
    }

    #[test]
    fn eigenvalues_of_diagonal_are_sorted() {
        let m = ComplexMatrix::diagonal(&[0.2, 0.7, 0.1]);
        assert_eq!(m.hermitian_eigenvalues().unwrap(), vec![0.7, 0.2, 0.1]);
        assert!(ComplexMatrix::from_fn(2, 2, |r, _| c(r as f64))
            .hermitian_eigenvalues()
            .is_err());
    }

    #[test]
    fn from_row_major_validates() {
        assert!(ComplexMatrix::from_row_major(2, 2, vec![c(1.0); 3]).is_err());
        assert!(ComplexMatrix::from_row_major(1, 1, vec![c(f64::NAN)]).is_err());
    }
}
