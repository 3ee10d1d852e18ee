//! Dense complex matrices.
//!
//! Every operator and density matrix in the crate is a [`ComplexMatrix`]:
//! row-major storage of `Complex64` entries. System dimensions stay below a
//! hundred or so, so everything is dense; [`SparseMatrix`] exists only as a
//! compiled view the integrator uses for its hot loop.
//!
//! `expm` and the Hermitian eigensolver delegate to nalgebra. Its matrix
//! exponential is a scaling-and-squaring Padé approximant, which meets the
//! 1e-10 relative accuracy needed here for inputs with norm up to ~50.

pub mod sparse;

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

pub use self::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// Default tolerance for "is this Hermitian" checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Real-valued rows, convenient for small literal matrices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| c64(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .collect()
    }

    fn require_square(&self, op: &'static str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Standard matrix product `self · other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = ComplexMatrix::zeros(n, m);
        for i in 0..n {
            let out_row = &mut out.data[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product; the index of `self` varies slowest.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let (ar, ac) = self.shape();
        let (br, bc) = other.shape();
        let cols = ac * bc;
        let mut out = ComplexMatrix::zeros(ar * br, cols);
        for i in 0..ar {
            for j in 0..ac {
                let a = self.data[i * ac + j];
                for k in 0..br {
                    let row = i * br + k;
                    for l in 0..bc {
                        out.data[row * cols + j * bc + l] = a * other.data[k * bc + l];
                    }
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| {
            self.data[j * self.cols + i].conj()
        })
    }

    pub fn trace(&self) -> Result<C64> {
        let n = self.require_square("trace")?;
        Ok((0..n).map(|i| self.data[i * n + i]).sum())
    }

    pub fn scale(&self, s: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> ComplexMatrix {
        self.scale(c64(s, 0.0))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// Largest element-wise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.shape() == other.shape() && self.max_abs_diff(other) <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|` over all entries.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = self.data[i * n + j] - self.data[j * n + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Replaces `self` with `(self + self†)/2`.
    pub fn hermitize(&mut self) {
        let n = self.rows;
        debug_assert!(self.is_square());
        for i in 0..n {
            let d = self.data[i * n + i];
            self.data[i * n + i] = c64(d.re, 0.0);
            for j in i + 1..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Submatrix copy.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        assert!(
            r0 + rows <= self.rows && c0 + cols <= self.cols,
            "block out of range"
        );
        ComplexMatrix::from_fn(rows, cols, |i, j| self.data[(r0 + i) * self.cols + c0 + j])
    }

    /// Principal submatrix on the given index set.
    pub fn select(&self, idx: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(idx.len(), idx.len(), |i, j| {
            self.data[idx[i] * self.cols + idx[j]]
        })
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> ComplexMatrix {
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Matrix exponential.
    pub fn expm(&self) -> Result<ComplexMatrix> {
        self.require_square("expm")?;
        if self.rows == 0 {
            return Ok(self.clone());
        }
        Ok(Self::from_nalgebra(&self.to_nalgebra().exp()))
    }

    /// Eigen-decomposition of a Hermitian matrix with the default tolerance.
    pub fn eig_hermitian(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        self.eig_hermitian_tol(HERMITIAN_TOL)
    }

    /// Eigenvalues ascending; column `k` of the returned matrix is the
    /// eigenvector for eigenvalue `k`.
    pub fn eig_hermitian_tol(&self, tol: f64) -> Result<(Vec<f64>, ComplexMatrix)> {
        self.check_hermitian(tol)?;
        let eig = self.to_nalgebra().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors =
            ComplexMatrix::from_fn(self.rows, self.rows, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((values, vectors))
    }

    /// Eigenvalues only (ascending); cheaper than the full decomposition.
    pub fn eigvals_hermitian(&self) -> Result<Vec<f64>> {
        self.eigvals_hermitian_tol(HERMITIAN_TOL)
    }

    pub fn eigvals_hermitian_tol(&self, tol: f64) -> Result<Vec<f64>> {
        self.check_hermitian(tol)?;
        let mut values: Vec<f64> = self
            .to_nalgebra()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    fn check_hermitian(&self, tol: f64) -> Result<()> {
        self.require_square("eig_hermitian")?;
        let residual = self.hermiticity_residual();
        if residual > tol {
            return Err(Error::NotHermitian { residual, tol });
        }
        Ok(())
    }
}

/// `trace(op · rho)` without forming the product.
pub fn expectation(op: &ComplexMatrix, rho: &ComplexMatrix) -> Result<C64> {
    if !op.is_square() || !rho.is_square() || op.rows != rho.rows {
        return Err(Error::DimensionMismatch {
            op: "expectation",
            left: op.shape(),
            right: rho.shape(),
        });
    }
    let n = op.rows;
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += op.data[i * n + j] * rho.data[j * n + i];
        }
    }
    Ok(acc)
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of range"
        );
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.data[i * self.cols + j];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Element-wise arithmetic. These panic on shape mismatch, like the other
// dense-matrix libraries in the ecosystem; use `matmul` for the checked
// product.

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}
