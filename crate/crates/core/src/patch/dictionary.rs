use std::f64::consts::PI;
use std::path::Path;

use faer::Mat;

use crate::error::{Error, Result};
use crate::quat::{real_left_mul, Quaternion, QuaternionMatrix};

/// Quaternion dictionary `A ∈ H^{d×L}` with unit-norm columns.
#[derive(Clone, Debug)]
pub struct Dictionary {
    atoms: QuaternionMatrix,
    /// Set when every atom is real; enables the real-GEMM fast path.
    real: Option<Mat<f64>>,
}

fn perfect_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

impl Dictionary {
    /// Wraps `atoms`, normalizing any column whose ℓ2 norm is not already 1.
    pub fn new(mut atoms: QuaternionMatrix) -> Result<Self> {
        let (d, l) = atoms.shape();
        if d == 0 || l < d {
            return Err(Error::InvalidParameter(format!(
                "dictionary must be d×L with L ≥ d ≥ 1, got {d}x{l}"
            )));
        }
        if !atoms.is_finite() {
            return Err(Error::InvalidParameter(
                "dictionary contains non-finite entries".into(),
            ));
        }
        for j in 0..l {
            let col = atoms.col_mut(j);
            let n = col.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
            if n == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "dictionary atom {j} is zero"
                )));
            }
            if (n - 1.0).abs() > 1e-12 {
                col.iter_mut().for_each(|q| *q = q.scale(1.0 / n));
            }
        }
        let real = atoms
            .is_real()
            .then(|| Mat::from_fn(d, l, |r, c| atoms.get(r, c).a));
        Ok(Self { atoms, real })
    }

    pub fn atoms(&self) -> &QuaternionMatrix {
        &self.atoms
    }

    pub fn patch_dim(&self) -> usize {
        self.atoms.rows()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.cols()
    }

    pub fn is_real(&self) -> bool {
        self.real.is_some()
    }

    /// `A·Z`.
    pub fn apply(&self, z: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        if z.rows() != self.atom_count() {
            return Err(Error::shape(
                format!("{} rows", self.atom_count()),
                format!("{} rows", z.rows()),
            ));
        }
        Ok(match &self.real {
            Some(a) => real_left_mul(a, z),
            None => self.atoms.matmul(z),
        })
    }

    /// `Aᴴ·X`.
    pub fn apply_adjoint(&self, x: &QuaternionMatrix) -> Result<QuaternionMatrix> {
        if x.rows() != self.patch_dim() {
            return Err(Error::shape(
                format!("{} rows", self.patch_dim()),
                format!("{} rows", x.rows()),
            ));
        }
        Ok(match &self.real {
            Some(a) => real_left_mul(&a.transpose().to_owned(), x),
            None => self.atoms.conj_transpose().matmul(x),
        })
    }

    /// `AAᴴ` (d×d).
    pub fn outer_gram(&self) -> QuaternionMatrix {
        self.atoms.matmul(&self.atoms.conj_transpose())
    }

    /// `AᴴA` (L×L).
    pub fn gram(&self) -> QuaternionMatrix {
        self.atoms.conj_transpose().matmul(&self.atoms)
    }

    /// Binary layout: `d` and `L` as little-endian u64, then `d·L` quaternions
    /// column-major, each as four little-endian f64 `(a, b, c, d)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (d, l) = self.atoms.shape();
        let mut out = Vec::with_capacity(16 + 32 * d * l);
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&(l as u64).to_le_bytes());
        for q in self.atoms.as_slice() {
            for x in q.to_array() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 16 {
            return Err("truncated header".into());
        }
        let d = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
        let l = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let expected = d
            .checked_mul(l)
            .and_then(|n| n.checked_mul(32))
            .and_then(|n| n.checked_add(16))
            .ok_or("header sizes overflow")?;
        if bytes.len() != expected {
            return Err(format!(
                "expected {expected} bytes for {d}x{l}, found {}",
                bytes.len()
            ));
        }
        let data = bytes[16..]
            .chunks_exact(32)
            .map(|c| {
                let f = |i: usize| f64::from_le_bytes(c[8 * i..8 * i + 8].try_into().unwrap());
                Quaternion::new(f(0), f(1), f(2), f(3))
            })
            .collect();
        let atoms = QuaternionMatrix::from_col_major(d, l, data).map_err(|e| e.to_string())?;
        Self::new(atoms).map_err(|e| e.to_string())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Overcomplete separable 2-D DCT dictionary with `d` = side² rows and `l` =
/// k² atoms. The 1-D atoms are `cos(π·f·(2n+1)/(2k))`, `f < k`, `n < side`;
/// atom `fr + fc·k` is the outer product of vertical frequency `fr` and
/// horizontal frequency `fc`, vectorized column-major like patches.
pub fn build_dictionary(d: usize, l: usize) -> Result<Dictionary> {
    let (Some(side), Some(k)) = (perfect_sqrt(d), perfect_sqrt(l)) else {
        return Err(Error::InvalidParameter(format!(
            "dictionary sizes d = {d}, L = {l} must be perfect squares"
        )));
    };
    if d == 0 || l < d {
        return Err(Error::InvalidParameter(format!(
            "need L ≥ d ≥ 1, got d = {d}, L = {l}"
        )));
    }
    let basis: Vec<Vec<f64>> = (0..k)
        .map(|f| {
            let v: Vec<f64> = (0..side)
                .map(|n| (PI * f as f64 * (2 * n + 1) as f64 / (2 * k) as f64).cos())
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let atoms = QuaternionMatrix::from_fn(d, l, |i, j| {
        let (r, c) = (i % side, i / side);
        let (fr, fc) = (j % k, j / k);
        Quaternion::real(basis[fr][r] * basis[fc][c])
    });
    Dictionary::new(atoms)
}
