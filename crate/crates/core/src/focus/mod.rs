//! Dual-scale patch focus measures and focus maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patch::PatchGrid;
use crate::quat::{qvec_norm2, Quaternion, QuaternionMatrix};

/// Parameters of the focus measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocusParams {
    /// Weight of the coefficient norm in the base-scale level.
    pub theta: f64,
    /// Scale of the saturating map `1 − exp(−x/γ)` in the detail-scale level.
    pub gamma: f64,
    /// Radius of the detail amplification window.
    pub radius: usize,
    /// Detail-scale patch side; `None` derives it from the image size.
    pub detail_side: Option<usize>,
}

impl Default for FocusParams {
    fn default() -> Self {
        Self {
            theta: 1.0,
            gamma: 0.2,
            radius: 3,
            detail_side: None,
        }
    }
}

impl FocusParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be >= 0, got {}",
                self.theta
            )));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if self.detail_side == Some(0) {
            return Err(Error::InvalidParameter(
                "detail_side must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Detail-scale patch side `round(5e-5·M·N)`, clamped to `[4, 64]` and to the image.
pub fn detail_grid_side(rows: usize, cols: usize) -> usize {
    let side = (5e-5 * rows as f64 * cols as f64).round() as usize;
    side.clamp(4, 64).min(rows.min(cols)).max(1)
}

/// Box sum over a `(2r+1)²` window with replicate padding.
pub fn detail_amplify(d: &QuaternionMatrix, r: usize) -> QuaternionMatrix {
    if r == 0 || d.is_empty() {
        return d.clone();
    }
    let (m, n) = d.shape();
    let clamp = |i: isize, len: usize| i.clamp(0, len as isize - 1) as usize;
    let ri = r as isize;
    // separable: clamping each axis independently is replicate padding in 2-D
    let vertical = QuaternionMatrix::from_fn(m, n, |row, col| {
        let mut acc = Quaternion::ZERO;
        for s in -ri..=ri {
            acc += d.get(clamp(row as isize + s, m), col);
        }
        acc
    });
    QuaternionMatrix::from_fn(m, n, |row, col| {
        let mut acc = Quaternion::ZERO;
        for t in -ri..=ri {
            acc += vertical.get(row, clamp(col as isize + t, n));
        }
        acc
    })
}

/// `‖∇₁p‖₁ + ‖∇₂p‖₁` of a column-major `side×side` patch, with forward
/// differences inside the patch only (the last row/column contributes zero).
pub fn patch_gradient_l1(patch: &[Quaternion], side: usize) -> f64 {
    debug_assert_eq!(patch.len(), side * side);
    let at = |r: usize, c: usize| patch[r + c * side];
    let mut sum = 0.0;
    for c in 0..side {
        for r in 0..side {
            if r + 1 < side {
                sum += (at(r + 1, c) - at(r, c)).norm();
            }
            if c + 1 < side {
                sum += (at(r, c + 1) - at(r, c)).norm();
            }
        }
    }
    sum
}

/// `l_B = ‖∇₁d‖₁ + ‖∇₂d‖₁ + θ‖z‖₂`.
pub fn base_focus_level(
    d_patch: &[Quaternion],
    side: usize,
    z_col: &[Quaternion],
    theta: f64,
) -> f64 {
    patch_gradient_l1(d_patch, side) + theta * qvec_norm2(z_col)
}

/// `φ(x) = 1 − exp(−x/γ)`.
pub fn saturate(x: f64, gamma: f64) -> f64 {
    1.0 - (-x / gamma).exp()
}

/// `l_D = φ(‖∇₁d_s‖₁ + ‖∇₂d_s‖₁)`.
pub fn detail_focus_level(ds_patch: &[Quaternion], side: usize, gamma: f64) -> f64 {
    saturate(patch_gradient_l1(ds_patch, side), gamma)
}

/// Per-input quantities the focus measures are computed from.
#[derive(Clone, Debug)]
pub struct FocusFeatures {
    pub d: QuaternionMatrix,
    pub ds: QuaternionMatrix,
    /// Coefficients, one column per base-grid patch.
    pub z: QuaternionMatrix,
}

impl FocusFeatures {
    pub fn new(d: QuaternionMatrix, z: QuaternionMatrix, radius: usize) -> Self {
        let ds = detail_amplify(&d, radius);
        Self { d, ds, z }
    }
}

/// Focus levels of one input on both grids.
#[derive(Clone, Debug, PartialEq)]
pub struct FocusLevels {
    pub base: Vec<f64>,
    pub detail: Vec<f64>,
    /// Gradient sums before saturation; `detail[p] = φ(detail_gradient[p])`.
    pub detail_gradient: Vec<f64>,
}

impl FocusLevels {
    pub fn from_sums(base: Vec<f64>, detail_gradient: Vec<f64>, gamma: f64) -> Self {
        let detail = detail_gradient
            .iter()
            .map(|&x| saturate(x, gamma))
            .collect();
        Self {
            base,
            detail,
            detail_gradient,
        }
    }
}

pub fn focus_levels(
    f: &FocusFeatures,
    base_grid: &PatchGrid,
    detail_grid: &PatchGrid,
    params: &FocusParams,
) -> Result<FocusLevels> {
    if f.d.shape() != base_grid.image_shape() || f.d.shape() != detail_grid.image_shape() {
        return Err(Error::shape(
            format!("{:?} detail layer", base_grid.image_shape()),
            format!("{:?}", f.d.shape()),
        ));
    }
    if f.z.cols() != base_grid.patch_count() {
        return Err(Error::shape(
            format!("{} coefficient columns", base_grid.patch_count()),
            format!("{}", f.z.cols()),
        ));
    }
    let bs = base_grid.side();
    let base = (0..base_grid.patch_count())
        .map(|p| base_focus_level(&base_grid.patch(&f.d, p), bs, f.z.col(p), params.theta))
        .collect();
    let ds = detail_grid.side();
    let sums = (0..detail_grid.patch_count())
        .map(|p| patch_gradient_l1(&detail_grid.patch(&f.ds, p), ds))
        .collect();
    Ok(FocusLevels::from_sums(base, sums, params.gamma))
}

/// Per-patch source labels on the base and detail grids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FocusMaps {
    pub base: Vec<usize>,
    pub detail: Vec<usize>,
    pub inputs: usize,
}

/// Index of the largest value; ties go to the later index.
pub fn argmax_last(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v >= best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Per patch, the input with the highest level (ties to the later input).
///
/// The detail map ranks the gradient sums: φ is strictly increasing, so this is
/// the same argmax, but φ rounds to exactly 1.0 once `x/γ` exceeds about 37.
pub fn build_focus_maps(levels: &[FocusLevels]) -> Result<FocusMaps> {
    if levels.len() < 2 {
        return Err(Error::TooFewInputs {
            required: 2,
            actual: levels.len(),
        });
    }
    let (nb, nd) = (levels[0].base.len(), levels[0].detail.len());
    if levels
        .iter()
        .any(|l| l.base.len() != nb || l.detail_gradient.len() != nd)
    {
        return Err(Error::shape(
            "equal patch counts for all inputs",
            "differing patch counts",
        ));
    }
    let base = (0..nb)
        .map(|p| argmax_last(levels.iter().map(|l| l.base[p])))
        .collect();
    let detail = (0..nd)
        .map(|p| argmax_last(levels.iter().map(|l| l.detail_gradient[p])))
        .collect();
    Ok(FocusMaps {
        base,
        detail,
        inputs: levels.len(),
    })
}

/// Row-major 8-bit label raster, `label·⌊255/(N−1)⌋`.
pub fn label_raster(labels: &[usize], grid: &PatchGrid, inputs: usize) -> Vec<u8> {
    let (m, n) = grid.image_shape();
    let step = 255 / inputs.saturating_sub(1).max(1);
    let mut out = vec![0u8; m * n];
    for (p, &l) in labels.iter().enumerate() {
        let v = (l * step).min(255) as u8;
        for (r, c) in grid.pixels(p) {
            out[r * n + c] = v;
        }
    }
    out
}
