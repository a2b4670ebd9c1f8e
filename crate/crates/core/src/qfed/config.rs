use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::ShrinkMode;

/// Parameters of the base/detail/noise decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QfedConfig {
    /// Weight of the base-layer gradient sparsity.
    pub alpha: f64,
    /// Weight of the detail-layer sparsity.
    pub beta: f64,
    /// Weight of the noise-layer energy.
    pub lambda: f64,
    pub mu0: f64,
    pub mu_max: f64,
    pub mu_growth: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Side of the square patches used by the low-rank coding term.
    pub patch_side: usize,
    /// Number of atoms of the default DCT dictionary; must be a perfect square.
    pub atom_count: usize,
    /// Number of patch groups; `None` selects `max(1, ⌈P/100⌉)`.
    pub groups: Option<usize>,
    pub seed: u64,
    pub shrink_mode: ShrinkMode,
}

impl Default for QfedConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            beta: 0.5,
            lambda: 0.05,
            mu0: 300.0,
            mu_max: 1e6,
            mu_growth: 1.1,
            tol: 1e-5,
            max_iter: 50,
            patch_side: 8,
            atom_count: 256,
            groups: None,
            seed: 0,
            shrink_mode: ShrinkMode::Columnwise,
        }
    }
}

impl QfedConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda", self.lambda),
            ("mu0", self.mu0),
            ("mu_max", self.mu_max),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(self.mu_growth.is_finite() && self.mu_growth > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mu_growth must be > 1, got {}",
                self.mu_growth
            )));
        }
        if self.mu0 > self.mu_max {
            return Err(Error::InvalidParameter("mu0 must not exceed mu_max".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        if self.patch_side == 0 {
            return Err(Error::InvalidParameter(
                "patch_side must be positive".into(),
            ));
        }
        if self.groups == Some(0) {
            return Err(Error::InvalidParameter("groups must be positive".into()));
        }
        Ok(())
    }
}
