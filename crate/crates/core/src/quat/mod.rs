//! Quaternion scalars, matrices, decompositions, transforms and proximal
//! operators.

mod adjoint;
mod fft;
mod gradient;
mod matrix;
mod scalar;
mod shrink;
mod solve;
mod svd;

pub use adjoint::{adjoint_inverse, complex_adjoint};
pub use fft::{iqfft2, qfft2, Fft2, QuaternionSpectrum};
pub use gradient::{grad1, grad1_adj, grad2, grad2_adj, grad_transfer, transfer1, transfer2};
pub use matrix::{
    qmat_norms, qvec_norm1, qvec_norm2, real_left_mul, MatrixNorms, QuaternionMatrix,
};
pub use scalar::{qmul, Quaternion};
pub use shrink::{soft_threshold, ShrinkMode};
pub use solve::{hermitian_solve, HermitianFactor};
pub use svd::{nuclear_norm, nuclear_prox, nuclear_prox_gram, qsvd, Qsvd};
