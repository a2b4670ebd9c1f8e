use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FuseConfig;
use crate::quat::ShrinkMode;

/// Dataset-tuned `(α, β, λ)` triples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Lytro,
    Mffw,
    MfiWhu,
    /// Library defaults; all values come from explicit overrides.
    #[default]
    Custom,
}

impl Preset {
    pub fn weights(self) -> (f64, f64, f64) {
        match self {
            Preset::Lytro | Preset::MfiWhu | Preset::Custom => (1.5, 0.5, 0.05),
            Preset::Mffw => (1.5, 2.0, 0.05),
        }
    }
}

/// Flat run description; every set field overrides the preset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    pub mu_max: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub patch_side: Option<usize>,
    pub atom_count: Option<usize>,
    pub groups: Option<usize>,
    pub seed: Option<u64>,
    pub shrink_mode: Option<ShrinkMode>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub radius: Option<usize>,
    pub detail_side: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub epsilon: Option<f64>,
    /// Binary dictionary file replacing the default DCT dictionary.
    pub dictionary: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    /// Directory for focus-map label images and the similarity CSV.
    pub maps_dir: Option<PathBuf>,
}

macro_rules! take_set {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace ours; a non-empty input list replaces ours.
    pub fn merge(&mut self, over: RunConfig) {
        let s = self;
        take_set!(s, over; preset, alpha, beta, lambda, mu0, mu_max, tol, max_iter, patch_side,
            atom_count, groups, seed, shrink_mode, theta, gamma, radius, detail_side, c1, c2,
            epsilon, dictionary, output, maps_dir);
        if !over.inputs.is_empty() {
            s.inputs = over.inputs;
        }
    }

    pub fn fuse_config(&self) -> Result<FuseConfig> {
        let mut cfg = FuseConfig::default();
        let (alpha, beta, lambda) = self.preset.unwrap_or_default().weights();
        let q = &mut cfg.qfed;
        q.alpha = self.alpha.unwrap_or(alpha);
        q.beta = self.beta.unwrap_or(beta);
        q.lambda = self.lambda.unwrap_or(lambda);
        q.mu0 = self.mu0.unwrap_or(q.mu0);
        q.mu_max = self.mu_max.unwrap_or(q.mu_max);
        q.tol = self.tol.unwrap_or(q.tol);
        q.max_iter = self.max_iter.unwrap_or(q.max_iter);
        q.patch_side = self.patch_side.unwrap_or(q.patch_side);
        q.atom_count = self.atom_count.unwrap_or(q.atom_count);
        q.groups = self.groups.or(q.groups);
        q.seed = self.seed.unwrap_or(q.seed);
        q.shrink_mode = self.shrink_mode.unwrap_or(q.shrink_mode);
        let f = &mut cfg.focus;
        f.theta = self.theta.unwrap_or(f.theta);
        f.gamma = self.gamma.unwrap_or(f.gamma);
        f.radius = self.radius.unwrap_or(f.radius);
        f.detail_side = self.detail_side.or(f.detail_side);
        let s = &mut cfg.ssim;
        s.c1 = self.c1.unwrap_or(s.c1);
        s.c2 = self.c2.unwrap_or(s.c2);
        s.epsilon = self.epsilon.unwrap_or(s.epsilon);
        cfg.validate()?;
        Ok(cfg)
    }
}
