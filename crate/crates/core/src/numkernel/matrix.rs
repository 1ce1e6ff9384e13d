use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Real matrix from row slices.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        m
    }

    /// Outer product `u v*`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMatrix::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * oc..(k + 1) * oc];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self* other` without forming the adjoint.
    pub fn adjoint_mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.rows, other.rows);
        let mut out = CMatrix::zeros(self.cols, other.cols);
        let oc = other.cols;
        for k in 0..self.rows {
            let other_row = &other.data[k * oc..(k + 1) * oc];
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i].conj();
                if a == ZERO {
                    continue;
                }
                let out_row = &mut out.data[i * oc..(i + 1) * oc];
                for (o, b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Unconjugated entrywise pairing `sum_ij A_ij B_ij = tr(A B^T)`.
    pub fn bilinear_pairing(&self, other: &CMatrix) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Real Frobenius inner product `Re tr(A B*)`.
    pub fn frobenius_inner(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Entrywise product.
    pub fn hadamard(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Submatrix made of the given columns.
    pub fn select_columns(&self, cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
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

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
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

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Hermitian matrix; symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(CMatrix);

/// Deviation from Hermitian symmetry tolerated by [`HermMatrix::try_new`].
pub const HERMITIZE_TOL: f64 = 1e-12;

impl HermMatrix {
    /// Symmetrize `(M + M*)/2`.
    pub fn new(m: CMatrix) -> Self {
        assert!(m.is_square(), "Hermitian matrix must be square");
        let n = m.rows();
        let mut out = m;
        for i in 0..n {
            let d = out[(i, i)].re;
            out[(i, i)] = C64::new(d, 0.0);
            for j in (i + 1)..n {
                let v = (out[(i, j)] + out[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        HermMatrix(out)
    }

    /// Like [`HermMatrix::new`] but rejects inputs further than
    /// `HERMITIZE_TOL * (1 + |M|_F)` from Hermitian.
    pub fn try_new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let dev = (&m - &m.adjoint()).max_abs();
        if dev > HERMITIZE_TOL * (1.0 + m.frobenius_norm()) {
            return Err(Error::InvalidArgument(format!(
                "matrix deviates from Hermitian by {dev:e}"
            )));
        }
        Ok(Self::new(m))
    }

    pub fn zeros(n: usize) -> Self {
        HermMatrix(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermMatrix(CMatrix::identity(n))
    }

    pub fn diag_real(values: &[f64]) -> Self {
        HermMatrix(CMatrix::diag_real(values))
    }

    /// `v v*`
    pub fn rank_one(v: &[C64]) -> Self {
        Self::new(CMatrix::outer(v, v))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Entrywise conjugate, i.e. the transpose.
    pub fn conj(&self) -> Self {
        HermMatrix(self.0.conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        HermMatrix(self.0.scale_real(s))
    }

    pub fn axpy(&mut self, s: f64, other: &HermMatrix) {
        self.0.axpy(C64::new(s, 0.0), &other.0);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// `tr(A B^T)`; real for Hermitian arguments.
    pub fn pairing(&self, other: &HermMatrix) -> f64 {
        let z = self.0.bilinear_pairing(&other.0);
        debug_assert!(
            z.im.abs() <= 1e-9 * (1.0 + self.frobenius_norm() * other.frobenius_norm()),
            "pairing of Hermitian matrices has imaginary part {}",
            z.im
        );
        z.re
    }

    pub fn frobenius_inner(&self, other: &HermMatrix) -> f64 {
        self.0.frobenius_inner(&other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }
}

impl Index<(usize, usize)> for HermMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl Add for &HermMatrix {
    type Output = HermMatrix;
    fn add(self, rhs: &HermMatrix) -> HermMatrix {
        HermMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermMatrix {
    type Output = HermMatrix;
    fn sub(self, rhs: &HermMatrix) -> HermMatrix {
        HermMatrix(&self.0 - &rhs.0)
    }
}

impl From<HermMatrix> for CMatrix {
    fn from(h: HermMatrix) -> Self {
        h.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_adjoint_mul_agree() {
        let a = CMatrix::from_fn(3, 2, |i, j| C64::new(i as f64 + 1.0, j as f64 - 0.5));
        let b = CMatrix::from_fn(3, 4, |i, j| C64::new((i * j) as f64, 1.0));
        let x = a.adjoint().matmul(&b);
        let y = a.adjoint_mul(&b);
        assert!((&x - &y).max_abs() < 1e-14);
    }

    #[test]
    fn hermitize_symmetrizes() {
        let m = CMatrix::from_rows(&[
            vec![C64::new(1.0, 0.3), C64::new(2.0, 1.0)],
            vec![C64::new(0.0, 0.0), C64::new(3.0, 0.0)],
        ])
        .unwrap();
        let h = HermMatrix::new(m);
        assert_eq!(h[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(h[(0, 1)], C64::new(1.0, 0.5));
        assert_eq!(h[(1, 0)], C64::new(1.0, -0.5));
    }

    #[test]
    fn try_new_rejects_non_hermitian() {
        let m = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(HermMatrix::try_new(m).is_err());
    }

    #[test]
    fn pairing_is_transpose_trace() {
        let a = HermMatrix::new(
            CMatrix::from_rows(&[
                vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
                vec![C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
            ])
            .unwrap(),
        );
        let b = a.clone();
        // tr(A A^T) = 1 + 4 + (i)(i) + (-i)(-i) = 3
        assert!((a.pairing(&b) - 3.0).abs() < 1e-15);
        // Frobenius: 1 + 4 + 1 + 1
        assert!((a.frobenius_inner(&b) - 7.0).abs() < 1e-15);
    }
}
