use serde::{Deserialize, Serialize};

use super::matrix::{qvec_norm1, QuaternionMatrix};

/// Shrinkage rule used for the ℓ1 subproblems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkMode {
    /// Scales column `i` by `(‖y_i‖₁ − τ)/‖y_i‖₁`, or zeroes it when `‖y_i‖₁ ≤ τ`.
    #[default]
    Columnwise,
    /// Shrinks every entry's modulus by `τ`, keeping its direction.
    Entrywise,
}

impl std::str::FromStr for ShrinkMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "columnwise" => Ok(ShrinkMode::Columnwise),
            "entrywise" => Ok(ShrinkMode::Entrywise),
            other => Err(format!(
                "unknown shrink mode '{other}' (expected columnwise|entrywise)"
            )),
        }
    }
}

/// Quaternion soft-thresholding.
pub fn soft_threshold(y: &QuaternionMatrix, tau: f64, mode: ShrinkMode) -> QuaternionMatrix {
    debug_assert!(tau >= 0.0);
    if tau <= 0.0 {
        return y.clone();
    }
    match mode {
        ShrinkMode::Entrywise => y.map(|q| {
            let n = q.norm();
            if n > tau {
                q.scale((n - tau) / n)
            } else {
                Default::default()
            }
        }),
        ShrinkMode::Columnwise => {
            let mut out = y.clone();
            for c in 0..y.cols() {
                let n1 = qvec_norm1(y.col(c));
                let col = out.col_mut(c);
                if n1 > tau {
                    let s = (n1 - tau) / n1;
                    col.iter_mut().for_each(|q| *q = q.scale(s));
                } else {
                    col.iter_mut().for_each(|q| *q = Default::default());
                }
            }
            out
        }
    }
}
