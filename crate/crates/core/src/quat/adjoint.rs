//! Complex adjoint embedding of quaternion matrices.
//!
//! Writing `Q = Q1 + Q2·j` with complex `Q1`, `Q2`, the adjoint is the
//! `2M×2N` complex matrix
//!
//! ```text
//! χ(Q) = [  Q1        Q2      ]
//!        [ -conj(Q2)  conj(Q1) ]
//! ```
//!
//! `χ` is additive and multiplicative, so complex factorizations of `χ(Q)`
//! carry over to `Q`. A quaternion column vector `u = u1 + u2·j` is
//! represented by the first block column `[u1; -conj(u2)]` of `χ(u)`.

use faer::{c64, Mat};

use super::matrix::QuaternionMatrix;
use super::scalar::Quaternion;
use crate::error::{Error, Result};

pub fn complex_adjoint(q: &QuaternionMatrix) -> Mat<c64> {
    let (m, n) = q.shape();
    let mut out = Mat::<c64>::zeros(2 * m, 2 * n);
    for c in 0..n {
        for r in 0..m {
            let (c1, c2) = q.get(r, c).split();
            out[(r, c)] = c1;
            out[(r, c + n)] = c2;
            out[(r + m, c)] = -c2.conj();
            out[(r + m, c + n)] = c1.conj();
        }
    }
    out
}

/// Recovers `Q` from the top block row of its adjoint.
pub fn adjoint_inverse(adj: &Mat<c64>) -> Result<QuaternionMatrix> {
    if !adj.nrows().is_multiple_of(2) || !adj.ncols().is_multiple_of(2) {
        return Err(Error::shape(
            "even-sized complex adjoint",
            format!("{}x{}", adj.nrows(), adj.ncols()),
        ));
    }
    let (m, n) = (adj.nrows() / 2, adj.ncols() / 2);
    Ok(QuaternionMatrix::from_fn(m, n, |r, c| {
        Quaternion::from_split(adj[(r, c)], adj[(r, c + n)])
    }))
}

/// First block column `[Q1; -conj(Q2)]` of `χ(Q)`, shape `2M×N`.
pub(crate) fn first_block_column(q: &QuaternionMatrix) -> Mat<c64> {
    let m = q.rows();
    Mat::from_fn(2 * m, q.cols(), |r, c| {
        if r < m {
            q.get(r, c).split().0
        } else {
            -q.get(r - m, c).split().1.conj()
        }
    })
}

/// Inverse of [`first_block_column`].
pub(crate) fn from_first_block_column(x: &Mat<c64>) -> QuaternionMatrix {
    let m = x.nrows() / 2;
    QuaternionMatrix::from_fn(m, x.ncols(), |r, c| {
        Quaternion::from_split(x[(r, c)], -x[(r + m, c)].conj())
    })
}
