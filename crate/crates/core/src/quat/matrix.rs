use std::ops::{Add, Index, IndexMut, Sub};

use faer::{c64, Mat};

use super::scalar::Quaternion;
use crate::error::{Error, Result};

/// Dense quaternion matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Quaternion>,
}

/// Entrywise norms of a quaternion matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixNorms {
    pub l1: f64,
    pub fro: f64,
}

impl QuaternionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Quaternion::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Quaternion::ONE
            } else {
                Quaternion::ZERO
            }
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Quaternion,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from column-major entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<Quaternion>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} entries", rows * cols),
                format!("{}", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a 1×1 or diagonal real matrix, mostly for tests.
    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Quaternion::real(diag[r])
            } else {
                Quaternion::ZERO
            }
        })
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Quaternion {
        self.data[r + c * self.rows]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, q: Quaternion) {
        self.data[r + c * self.rows] = q;
    }

    #[inline]
    pub fn as_slice(&self) -> &[Quaternion] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Quaternion] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Quaternion> {
        self.data
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[Quaternion] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [Quaternion] {
        let rows = self.rows;
        &mut self.data[c * rows..(c + 1) * rows]
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn map(&self, mut f: impl FnMut(Quaternion) -> Quaternion) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&q| f(q)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &Self,
        mut f: impl FnMut(Quaternion, Quaternion) -> Quaternion,
    ) -> Self {
        assert_eq!(self.shape(), other.shape(), "zip_map shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&p, &q)| f(p, q))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|q| q.scale(s))
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        for (p, &q) in self.data.iter_mut().zip(&other.data) {
            *p += q.scale(s);
        }
    }

    pub fn norms(&self) -> MatrixNorms {
        let (mut l1, mut sq) = (0.0, 0.0);
        for q in &self.data {
            let n2 = q.norm_sqr();
            l1 += n2.sqrt();
            sq += n2;
        }
        MatrixNorms { l1, fro: sq.sqrt() }
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|q| q.norm()).sum()
    }

    /// Largest entry modulus; the flattened ∞-norm.
    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    /// Real trace inner product `Re tr(selfᴴ·other)`.
    pub fn real_inner(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "real_inner shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(p, q)| p.dot(*q))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    /// True when every entry has zero imaginary parts.
    pub fn is_real(&self) -> bool {
        self.data
            .iter()
            .all(|q| q.b == 0.0 && q.c == 0.0 && q.d == 0.0)
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(cols.len() * self.rows);
        for &c in cols {
            data.extend_from_slice(self.col(c));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Writes the columns of `src` into the listed columns of `self`.
    pub fn scatter_cols(&mut self, cols: &[usize], src: &Self) {
        assert_eq!(src.cols, cols.len());
        assert_eq!(src.rows, self.rows);
        for (k, &c) in cols.iter().enumerate() {
            self.col_mut(c).copy_from_slice(src.col(k));
        }
    }

    /// Symplectic parts `(C1, C2)` with `self = C1 + C2·j`.
    pub fn to_complex_pair(&self) -> (Mat<c64>, Mat<c64>) {
        let c1 = Mat::from_fn(self.rows, self.cols, |r, c| {
            let q = self.get(r, c);
            c64::new(q.a, q.b)
        });
        let c2 = Mat::from_fn(self.rows, self.cols, |r, c| {
            let q = self.get(r, c);
            c64::new(q.c, q.d)
        });
        (c1, c2)
    }

    pub fn from_complex_pair(c1: &Mat<c64>, c2: &Mat<c64>) -> Self {
        assert_eq!((c1.nrows(), c1.ncols()), (c2.nrows(), c2.ncols()));
        Self::from_fn(c1.nrows(), c1.ncols(), |r, c| {
            Quaternion::from_split(c1[(r, c)], c2[(r, c)])
        })
    }

    /// Quaternion matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        if self.is_real() {
            return self.real_part_matmul(other);
        }
        // (P1 + P2 j)(Q1 + Q2 j) = (P1 Q1 - P2 conj(Q2)) + (P1 Q2 + P2 conj(Q1)) j
        let (p1, p2) = self.to_complex_pair();
        let (q1, q2) = other.to_complex_pair();
        let q1c = conj_mat(&q1);
        let q2c = conj_mat(&q2);
        let r1 = &p1 * &q1 - &p2 * &q2c;
        let r2 = &p1 * &q2 + &p2 * &q1c;
        Self::from_complex_pair(&r1, &r2)
    }

    /// Product with the real parts of `self` only; the four components of
    /// `other` are processed as one stacked real GEMM.
    fn real_part_matmul(&self, other: &Self) -> Self {
        let left = Mat::from_fn(self.rows, self.cols, |r, c| self.get(r, c).a);
        real_left_mul(&left, other)
    }

    pub fn to_real_parts(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |r, c| self.get(r, c).a)
    }
}

/// `left · q` for a real matrix `left`.
pub fn real_left_mul(left: &Mat<f64>, q: &QuaternionMatrix) -> QuaternionMatrix {
    assert_eq!(
        left.ncols(),
        q.rows(),
        "real_left_mul inner dimension mismatch"
    );
    let (k, n) = q.shape();
    let stacked = Mat::from_fn(k, 4 * n, |r, c| {
        let e = q.get(r, c % n);
        match c / n {
            0 => e.a,
            1 => e.b,
            2 => e.c,
            _ => e.d,
        }
    });
    let prod = left * &stacked;
    QuaternionMatrix::from_fn(left.nrows(), n, |r, c| {
        Quaternion::new(
            prod[(r, c)],
            prod[(r, c + n)],
            prod[(r, c + 2 * n)],
            prod[(r, c + 3 * n)],
        )
    })
}

pub(crate) fn conj_mat(m: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)].conj())
}

/// ℓ2 norm of a quaternion vector.
pub fn qvec_norm2(v: &[Quaternion]) -> f64 {
    v.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
}

/// ℓ1 norm of a quaternion vector.
pub fn qvec_norm1(v: &[Quaternion]) -> f64 {
    v.iter().map(|q| q.norm()).sum()
}

pub fn qmat_norms(q: &QuaternionMatrix) -> MatrixNorms {
    q.norms()
}

impl Index<(usize, usize)> for QuaternionMatrix {
    type Output = Quaternion;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Quaternion {
        &self.data[r + c * self.rows]
    }
}

impl IndexMut<(usize, usize)> for QuaternionMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Quaternion {
        &mut self.data[r + c * self.rows]
    }
}

impl Add for &QuaternionMatrix {
    type Output = QuaternionMatrix;
    fn add(self, o: &QuaternionMatrix) -> QuaternionMatrix {
        self.zip_map(o, |p, q| p + q)
    }
}

impl Sub for &QuaternionMatrix {
    type Output = QuaternionMatrix;
    fn sub(self, o: &QuaternionMatrix) -> QuaternionMatrix {
        self.zip_map(o, |p, q| p - q)
    }
}
