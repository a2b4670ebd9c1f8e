//! Quaternion SVD through the complex adjoint.
//!
//! The singular values of `χ(Q)` are those of `Q`, each repeated twice, and
//! every singular subspace of `χ(Q)` is closed under the partner map
//! `[x1; x2] ↦ [-conj(x2); conj(x1)]`. Picking one vector per partner pair
//! (with pivoting inside clusters of equal singular values, where the complex
//! SVD may return arbitrary rotations) yields the quaternion left factor.

use faer::{c64, Mat, Side};

use super::adjoint::{adjoint_inverse, complex_adjoint, from_first_block_column};
use super::matrix::QuaternionMatrix;
use crate::error::{Error, Result};

/// Thin QSVD `Q = U·diag(sigma)·Vᴴ` with `r = min(M, N)` columns.
#[derive(Clone, Debug)]
pub struct Qsvd {
    pub u: QuaternionMatrix,
    pub sigma: Vec<f64>,
    pub v: QuaternionMatrix,
}

impl Qsvd {
    /// Number of singular values above `tol · sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma
            .iter()
            .filter(|&&s| s > tol * top && s > 0.0)
            .count()
    }

    pub fn reconstruct(&self) -> QuaternionMatrix {
        self.reconstruct_with(|s| s)
    }

    /// `U·diag(f(sigma))·Vᴴ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> QuaternionMatrix {
        let keep: Vec<usize> = (0..self.sigma.len())
            .filter(|&i| f(self.sigma[i]) != 0.0)
            .collect();
        if keep.is_empty() {
            return QuaternionMatrix::zeros(self.u.rows(), self.v.rows());
        }
        let mut us = self.u.select_cols(&keep);
        for (k, &i) in keep.iter().enumerate() {
            let s = f(self.sigma[i]);
            for q in us.col_mut(k) {
                *q = q.scale(s);
            }
        }
        us.matmul(&self.v.select_cols(&keep).conj_transpose())
    }
}

type CVec = Vec<c64>;

fn partner(x: &[c64]) -> CVec {
    let h = x.len() / 2;
    let mut out = Vec::with_capacity(x.len());
    out.extend(x[h..].iter().map(|z| -z.conj()));
    out.extend(x[..h].iter().map(|z| z.conj()));
    out
}

fn to_mat(vecs: &[CVec], len: usize) -> Mat<c64> {
    Mat::from_fn(len, vecs.len(), |r, c| vecs[c][r])
}

fn identity(n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |r, c| {
        if r == c {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Removes from every column of `res` its components along `acc`, an
/// orthonormal set (two passes keep the result orthogonal to working precision).
fn project_out(res: &mut Mat<c64>, acc: &[CVec]) {
    if acc.is_empty() || res.ncols() == 0 {
        return;
    }
    let a = to_mat(acc, res.nrows());
    for _ in 0..2 {
        let coef = a.adjoint() * &*res;
        *res = &*res - &a * &coef;
    }
}

/// Gram-Schmidt with column pivoting over `candidates`, appending up to
/// `quota` new vectors, each followed by its partner, to `acc`.
fn pivoted_select(mut res: Mat<c64>, quota: usize, acc: &mut Vec<CVec>) -> usize {
    project_out(&mut res, acc);
    let (len, count) = (res.nrows(), res.ncols());
    let col_norm =
        |m: &Mat<c64>, j: usize| (0..len).map(|k| m[(k, j)].norm_sqr()).sum::<f64>().sqrt();
    let mut used = vec![false; count];
    let mut taken = 0;
    while taken < quota {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..count).filter(|&j| !used[j]) {
            let n = col_norm(&res, j);
            if best.is_none_or(|(_, bn)| n > bn) {
                best = Some((j, n));
            }
        }
        let Some((i, n)) = best else { break };
        if n <= 1e-8 {
            break;
        }
        used[i] = true;
        let x: CVec = (0..len).map(|k| res[(k, i)] / n).collect();
        let p = partner(&x);
        for j in (0..count).filter(|&j| !used[j]) {
            let (mut cx, mut cp) = (c64::new(0.0, 0.0), c64::new(0.0, 0.0));
            for k in 0..len {
                cx += x[k].conj() * res[(k, j)];
                cp += p[k].conj() * res[(k, j)];
            }
            for k in 0..len {
                res[(k, j)] -= x[k] * cx + p[k] * cp;
            }
        }
        acc.push(x);
        acc.push(p);
        taken += 1;
    }
    taken
}

/// Quaternion matrix whose columns are the first vector of each accepted pair.
fn to_quaternion_cols(acc: &[CVec], len: usize) -> QuaternionMatrix {
    let firsts: Vec<CVec> = acc.iter().step_by(2).cloned().collect();
    from_first_block_column(&to_mat(&firsts, len))
}

/// Thin quaternion singular value decomposition.
pub fn qsvd(q: &QuaternionMatrix) -> Result<Qsvd> {
    decompose(q, None)
}

/// Pairs the complex-adjoint singular vectors into quaternion ones. With a
/// `floor`, only singular values above it are kept and no completion of the
/// null space is attempted.
fn decompose(q: &QuaternionMatrix, floor: Option<f64>) -> Result<Qsvd> {
    let (m, n) = q.shape();
    let r = m.min(n);
    if r == 0 {
        return Ok(Qsvd {
            u: QuaternionMatrix::zeros(m, 0),
            sigma: vec![],
            v: QuaternionMatrix::zeros(n, 0),
        });
    }
    let adj = complex_adjoint(q);
    let svd = adj
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("complex SVD failed: {e:?}")))?;
    let s: Vec<f64> = (0..2 * r).map(|i| svd.S()[i].re).collect();
    let uc = svd.U();
    let vc = svd.V();
    let smax = s[0];
    let cluster_tol = 1e-9 * smax.max(f64::MIN_POSITIVE);

    // Left factor: one vector per partner pair, cluster by cluster.
    let mut left: Vec<CVec> = Vec::with_capacity(2 * r);
    let mut start = 0;
    while start < 2 * r && left.len() < 2 * r && floor.is_none_or(|f| s[start] > f) {
        let mut end = start + 1;
        while end < 2 * r && s[end - 1] - s[end] <= cluster_tol {
            end += 1;
        }
        let quota = end.div_ceil(2).min(r).saturating_sub(left.len() / 2);
        let cands = uc.subcols(start, end - start).to_owned();
        pivoted_select(cands, quota, &mut left);
        start = end;
    }
    if floor.is_none() && left.len() < 2 * r {
        // rank-deficient tail: complete with any partner-orthonormal vectors
        pivoted_select(identity(2 * m), r - left.len() / 2, &mut left);
    }
    let k = left.len() / 2;
    let u = to_quaternion_cols(&left, 2 * m);

    // Right factor from Qᴴ·U; near-null directions are completed separately.
    let w = q.conj_transpose().matmul(&u);
    let cutoff = (m.max(n) as f64) * f64::EPSILON * smax;
    let mut sigma = vec![0.0; k];
    let mut right: Vec<Option<(CVec, CVec)>> = vec![None; k];
    for i in 0..k {
        let col = w.col(i);
        let si = super::matrix::qvec_norm2(col);
        if si > cutoff {
            sigma[i] = si;
            let x: CVec = (0..2 * n)
                .map(|t| {
                    if t < n {
                        col[t].split().0 / si
                    } else {
                        -col[t - n].split().1.conj() / si
                    }
                })
                .collect();
            let p = partner(&x);
            right[i] = Some((x, p));
        }
    }
    let missing: Vec<usize> = (0..k).filter(|&i| right[i].is_none()).collect();
    if !missing.is_empty() {
        let mut accepted: Vec<CVec> = right
            .iter()
            .flatten()
            .flat_map(|(x, p)| [x.clone(), p.clone()])
            .collect();
        let before = accepted.len();
        let rev: Vec<usize> = (0..vc.ncols()).rev().collect();
        let cands = Mat::from_fn(2 * n, rev.len(), |row, c| vc[(row, rev[c])]);
        let got = pivoted_select(cands, missing.len(), &mut accepted);
        if got < missing.len() {
            pivoted_select(identity(2 * n), missing.len() - got, &mut accepted);
        }
        for (slot, pair) in missing.iter().zip(accepted[before..].chunks_exact(2)) {
            right[*slot] = Some((pair[0].clone(), pair[1].clone()));
        }
    }
    let right: Vec<CVec> = right
        .into_iter()
        .flat_map(|v| {
            let (x, p) = v.expect("right factor completed");
            [x, p]
        })
        .collect();
    let v = to_quaternion_cols(&right, 2 * n);

    // Sort descending.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    Ok(Qsvd {
        u: u.select_cols(&order),
        sigma: order.iter().map(|&i| sigma[i]).collect(),
        v: v.select_cols(&order),
    })
}

/// Proximal operator of `lam·‖·‖_*`: singular value soft-thresholding.
pub fn nuclear_prox(y: &QuaternionMatrix, lam: f64) -> Result<QuaternionMatrix> {
    if !(lam >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "nuclear_prox threshold must be >= 0, got {lam}"
        )));
    }
    if lam == 0.0 {
        return Ok(y.clone());
    }
    // only components above the threshold survive
    let svd = decompose(y, Some(lam))?;
    Ok(svd.reconstruct_with(|s| (s - lam).max(0.0)))
}

/// The operator of [`nuclear_prox`] evaluated without an SVD: with `G` the
/// smaller Gram matrix (`YᴴY` or `YYᴴ`), `Y·g(G)` or `g(G)·Y` where
/// `g(t) = max(√t − lam, 0)/√t`, from a Hermitian eigendecomposition of
/// `χ(G)`. About twice as fast on tall group matrices; singular values are
/// resolved to roughly `eps·σ_max²/σ`, which only matters for components
/// within that distance of the threshold.
pub fn nuclear_prox_gram(y: &QuaternionMatrix, lam: f64) -> Result<QuaternionMatrix> {
    if !(lam >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "nuclear_prox threshold must be >= 0, got {lam}"
        )));
    }
    if lam == 0.0 || y.is_empty() {
        return Ok(y.clone());
    }
    let tall = y.rows() >= y.cols();
    let yh = y.conj_transpose();
    let g = if tall { yh.matmul(y) } else { y.matmul(&yh) };
    let adj = complex_adjoint(&g);
    let eig = adj
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("Hermitian eigendecomposition failed: {e:?}")))?;
    let w = eig.U();
    let vals = eig.S();
    let k = vals.dim();
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let root = vals[i].re.max(0.0).sqrt();
            if root > lam {
                (root - lam) / root
            } else {
                0.0
            }
        })
        .collect();
    let ws = Mat::from_fn(w.nrows(), k, |r, c| w[(r, c)] * scale[c]);
    let f = adjoint_inverse(&(&ws * w.adjoint()))?;
    Ok(if tall { y.matmul(&f) } else { f.matmul(y) })
}

/// Nuclear norm, the sum of singular values.
pub fn nuclear_norm(y: &QuaternionMatrix) -> Result<f64> {
    if y.is_empty() {
        return Ok(0.0);
    }
    let adj = complex_adjoint(y);
    let s = adj
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("complex SVD failed: {e:?}")))?;
    // each quaternion singular value appears twice
    Ok(s.iter().sum::<f64>() / 2.0)
}
