use faer::linalg::solvers::{Llt, Solve};
use faer::{c64, Side};

use super::adjoint::{complex_adjoint, first_block_column, from_first_block_column};
use super::matrix::QuaternionMatrix;
use crate::error::{Error, Result};

/// Cholesky factor of a quaternion Hermitian positive definite matrix,
/// held on its complex adjoint.
pub struct HermitianFactor {
    n: usize,
    llt: Llt<c64>,
}

impl std::fmt::Debug for HermitianFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HermitianFactor")
            .field("n", &self.n)
            .finish()
    }
}

impl HermitianFactor {
    pub fn new(h: &QuaternionMatrix) -> Result<Self> {
        let (n, m) = h.shape();
        if n != m {
            return Err(Error::shape("square matrix", format!("{n}x{m}")));
        }
        let asym = (h - &h.conj_transpose()).max_modulus();
        if asym > 1e-10 * h.max_modulus().max(1.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let adj = complex_adjoint(h);
        let llt = adj
            .llt(Side::Lower)
            .map_err(|_| Error::NotPositiveDefinite)?;
        Ok(Self { n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `H·X = rhs`.
    pub fn solve(&self, rhs: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        if rhs.rows() != self.n {
            return Err(Error::shape(
                format!("{} rows", self.n),
                format!("{} rows", rhs.rows()),
            ));
        }
        // χ(H)·χ(X) = χ(rhs); the first block column determines X.
        let mut x = first_block_column(rhs);
        self.llt.solve_in_place(x.as_mut());
        Ok(from_first_block_column(&x))
    }
}

/// Solves `H·X = rhs` for Hermitian positive definite `H`.
pub fn hermitian_solve(h: &QuaternionMatrix, rhs: &QuaternionMatrix) -> Result<QuaternionMatrix> {
    HermitianFactor::new(h)?.solve(rhs)
}
