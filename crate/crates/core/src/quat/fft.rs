//! 2-D quaternion FFT through the symplectic split `q = c1 + c2·j`.
//!
//! Both complex parts are transformed with the standard 2-D DFT
//! `F(x)(u, v) = Σ x(s, t)·exp(-2πi(us/M + vt/N))`. The forward transform
//! is unnormalized and the inverse carries the `1/(MN)` factor. Left
//! multiplication of the spectrum by a complex transfer function commutes
//! with the split, which is what diagonalizes real convolutions.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::matrix::QuaternionMatrix;
use super::scalar::Quaternion;

/// Spectrum of a quaternion matrix: `S = S1 + S2·j`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionSpectrum {
    rows: usize,
    cols: usize,
    pub s1: Vec<Complex64>,
    pub s2: Vec<Complex64>,
}

impl QuaternionSpectrum {
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> (Complex64, Complex64) {
        let i = u * self.cols + v;
        (self.s1[i], self.s2[i])
    }

    /// Modulus of the spectral quaternion at `(u, v)`.
    pub fn modulus(&self, u: usize, v: usize) -> f64 {
        let (a, b) = self.get(u, v);
        (a.norm_sqr() + b.norm_sqr()).sqrt()
    }

    /// Squared Frobenius norm of the spectrum.
    pub fn energy(&self) -> f64 {
        self.s1.iter().chain(&self.s2).map(|z| z.norm_sqr()).sum()
    }

    /// Left-multiplies every coefficient by the complex `h(u, v)`.
    pub fn apply_transfer(&mut self, h: &[Complex64]) {
        assert_eq!(h.len(), self.s1.len());
        for ((a, b), &t) in self.s1.iter_mut().zip(self.s2.iter_mut()).zip(h) {
            *a *= t;
            *b *= t;
        }
    }

    /// `self += other` coefficientwise.
    pub fn accumulate(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.s1.iter_mut().zip(&other.s1) {
            *a += b;
        }
        for (a, b) in self.s2.iter_mut().zip(&other.s2) {
            *a += b;
        }
    }

    /// Divides every coefficient by the real `d(u, v)`.
    pub fn divide_real(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.s1.len());
        for ((a, b), &den) in self.s1.iter_mut().zip(self.s2.iter_mut()).zip(d) {
            *a /= den;
            *b /= den;
        }
    }
}

/// Cached FFT plans for one image size.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols.max(1)),
            row_inv: planner.plan_fft_inverse(cols.max(1)),
            col_fwd: planner.plan_fft_forward(rows.max(1)),
            col_inv: planner.plan_fft_inverse(rows.max(1)),
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (m, n) = (self.rows, self.cols);
        if m == 0 || n == 0 {
            return;
        }
        let (rf, cf) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        for row in buf.chunks_exact_mut(n) {
            rf.process(row);
        }
        let mut col = vec![Complex64::default(); m];
        for c in 0..n {
            for r in 0..m {
                col[r] = buf[r * n + c];
            }
            cf.process(&mut col);
            for r in 0..m {
                buf[r * n + c] = col[r];
            }
        }
    }

    pub fn forward(&self, q: &QuaternionMatrix) -> QuaternionSpectrum {
        assert_eq!(q.shape(), (self.rows, self.cols), "Fft2 plan size mismatch");
        let (m, n) = (self.rows, self.cols);
        let mut s1 = vec![Complex64::default(); m * n];
        let mut s2 = vec![Complex64::default(); m * n];
        for r in 0..m {
            for c in 0..n {
                let (c1, c2) = q.get(r, c).split();
                s1[r * n + c] = c1;
                s2[r * n + c] = c2;
            }
        }
        self.transform(&mut s1, false);
        self.transform(&mut s2, false);
        QuaternionSpectrum {
            rows: m,
            cols: n,
            s1,
            s2,
        }
    }

    pub fn inverse(&self, spec: &QuaternionSpectrum) -> QuaternionMatrix {
        assert_eq!(
            (spec.rows, spec.cols),
            (self.rows, self.cols),
            "Fft2 plan size mismatch"
        );
        let (m, n) = (self.rows, self.cols);
        let mut s1 = spec.s1.clone();
        let mut s2 = spec.s2.clone();
        self.transform(&mut s1, true);
        self.transform(&mut s2, true);
        let norm = 1.0 / (m * n) as f64;
        QuaternionMatrix::from_fn(m, n, |r, c| {
            let i = r * n + c;
            Quaternion::from_split(s1[i] * norm, s2[i] * norm)
        })
    }
}

pub fn qfft2(q: &QuaternionMatrix) -> QuaternionSpectrum {
    Fft2::new(q.rows(), q.cols()).forward(q)
}

pub fn iqfft2(spec: &QuaternionSpectrum) -> QuaternionMatrix {
    Fft2::new(spec.rows, spec.cols).inverse(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_concentrates_at_dc() {
        let q = QuaternionMatrix::from_fn(4, 6, |_, _| Quaternion::new(0.5, 1.0, -2.0, 0.25));
        let s = qfft2(&q);
        for u in 0..4 {
            for v in 0..6 {
                let m = s.modulus(u, v);
                if (u, v) == (0, 0) {
                    assert!(
                        (m - 24.0 * Quaternion::new(0.5, 1.0, -2.0, 0.25).norm()).abs() < 1e-12
                    );
                } else {
                    assert!(m < 1e-12);
                }
            }
        }
    }

    #[test]
    fn empty_round_trip() {
        let q = QuaternionMatrix::zeros(0, 0);
        assert_eq!(iqfft2(&qfft2(&q)), q);
    }
}
