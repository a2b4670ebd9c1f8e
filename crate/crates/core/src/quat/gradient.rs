//! Periodic forward differences and their frequency responses.
//!
//! `∇₁` is the vertical difference `X(s+1, t) − X(s, t)` and `∇₂` the
//! horizontal one `X(s, t+1) − X(s, t)`, both with circular wrap. Their
//! adjoints are the circular backward differences.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::matrix::QuaternionMatrix;

pub fn grad1(q: &QuaternionMatrix) -> QuaternionMatrix {
    let m = q.rows();
    QuaternionMatrix::from_fn(m, q.cols(), |r, c| q.get((r + 1) % m, c) - q.get(r, c))
}

pub fn grad2(q: &QuaternionMatrix) -> QuaternionMatrix {
    let n = q.cols();
    QuaternionMatrix::from_fn(q.rows(), n, |r, c| q.get(r, (c + 1) % n) - q.get(r, c))
}

pub fn grad1_adj(q: &QuaternionMatrix) -> QuaternionMatrix {
    let m = q.rows();
    QuaternionMatrix::from_fn(m, q.cols(), |r, c| q.get((r + m - 1) % m, c) - q.get(r, c))
}

pub fn grad2_adj(q: &QuaternionMatrix) -> QuaternionMatrix {
    let n = q.cols();
    QuaternionMatrix::from_fn(q.rows(), n, |r, c| q.get(r, (c + n - 1) % n) - q.get(r, c))
}

/// Frequency response of `∇₁`, row-major `M×N`: `exp(2πiu/M) − 1`.
pub fn transfer1(m: usize, n: usize) -> Vec<Complex64> {
    let mut h = Vec::with_capacity(m * n);
    for u in 0..m {
        let w = Complex64::from_polar(1.0, 2.0 * PI * u as f64 / m as f64) - 1.0;
        h.extend(std::iter::repeat_n(w, n));
    }
    h
}

/// Frequency response of `∇₂`, row-major `M×N`: `exp(2πiv/N) − 1`.
pub fn transfer2(m: usize, n: usize) -> Vec<Complex64> {
    let row: Vec<Complex64> = (0..n)
        .map(|v| Complex64::from_polar(1.0, 2.0 * PI * v as f64 / n as f64) - 1.0)
        .collect();
    let mut h = Vec::with_capacity(m * n);
    for _ in 0..m {
        h.extend_from_slice(&row);
    }
    h
}

/// Real response of `∇₁ᵀ∇₁ + ∇₂ᵀ∇₂`: `4sin²(πu/M) + 4sin²(πv/N)`, row-major.
pub fn grad_transfer(m: usize, n: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(m * n);
    for u in 0..m {
        let su = (PI * u as f64 / m as f64).sin();
        for v in 0..n {
            let sv = (PI * v as f64 / n as f64).sin();
            h.push(4.0 * su * su + 4.0 * sv * sv);
        }
    }
    h
}
