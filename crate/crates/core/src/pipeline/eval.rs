use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::fusion::{fuse, FuseConfig, FusionOutput};
use crate::patch::PatchGrid;
use crate::pipeline::io::{from_quaternion, to_quaternion, RgbImage};
use crate::pipeline::metrics::psnr;
use crate::pipeline::synth::{synth_split, Split, SynthSet};
use crate::quat::QuaternionMatrix;

pub const MIN_FUSED_PSNR: f64 = 28.0;
pub const MIN_PSNR_GAIN: f64 = 5.0;
pub const MIN_MAP_ACCURACY: f64 = 0.90;
pub const MIN_PATCH_ACCURACY: f64 = 0.95;

/// Region of each patch, or `None` when it straddles a seam.
pub fn patch_regions(labels: &[usize], width: usize, grid: &PatchGrid) -> Vec<Option<usize>> {
    (0..grid.patch_count())
        .map(|p| {
            let mut it = grid.pixels(p).map(|(r, c)| labels[r * width + c]);
            let first = it.next()?;
            it.all(|l| l == first).then_some(first)
        })
        .collect()
}

/// Fraction of non-seam patches whose predicted label equals the region.
pub fn label_accuracy(predicted: &[usize], regions: &[Option<usize>]) -> f64 {
    let scored: Vec<bool> = predicted
        .iter()
        .zip(regions)
        .filter_map(|(p, r)| r.map(|r| *p == r))
        .collect();
    if scored.is_empty() {
        return 1.0;
    }
    scored.iter().filter(|&&ok| ok).count() as f64 / scored.len() as f64
}

/// Patches of `grid` not bit-identical to the co-located patch of any input.
pub fn copy_violations(
    fused: &QuaternionMatrix,
    inputs: &[QuaternionMatrix],
    grid: &PatchGrid,
) -> usize {
    (0..grid.patch_count())
        .filter(|&p| {
            let f = grid.patch(fused, p);
            !inputs.iter().any(|i| grid.patch(i, p) == f)
        })
        .count()
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthReport {
    pub split: Split,
    pub sigma: f64,
    pub psnr_fused: f64,
    pub psnr_inputs: Vec<f64>,
    /// Fused PSNR minus the best input PSNR.
    pub psnr_gain: f64,
    pub base_map_accuracy: f64,
    pub detail_map_accuracy: f64,
    /// Fraction of non-seam detail-grid patches equal to the ground truth.
    pub patch_accuracy: f64,
    pub copy_violations: usize,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub seconds: f64,
    pub pass: bool,
}

/// Synthesizes the inputs, fuses them and scores the result.
pub fn evaluate_split(
    gt: &RgbImage,
    split: Split,
    sigma: f64,
    cfg: &FuseConfig,
) -> Result<(SynthReport, FusionOutput)> {
    let set = synth_split(gt, split, sigma)?;
    let start = Instant::now();
    let inputs: Vec<QuaternionMatrix> = set.inputs.iter().map(to_quaternion).collect();
    let out = fuse(&inputs, cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    let report = score(gt, &set, &inputs, &out, sigma, seconds)?;
    Ok((report, out))
}

fn score(
    gt: &RgbImage,
    set: &SynthSet,
    inputs: &[QuaternionMatrix],
    out: &FusionOutput,
    sigma: f64,
    seconds: f64,
) -> Result<SynthReport> {
    let w = gt.width();
    let fused_rgb = from_quaternion(&out.fused);
    let psnr_fused = psnr(&fused_rgb, gt)?;
    let psnr_inputs = set
        .inputs
        .iter()
        .map(|i| psnr(i, gt))
        .collect::<Result<Vec<_>>>()?;
    let best = psnr_inputs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let base_regions = patch_regions(&set.labels, w, &out.base_grid);
    let detail_regions = patch_regions(&set.labels, w, &out.detail_grid);
    let gt_q = to_quaternion(gt);
    let correct: Vec<usize> = (0..out.detail_grid.patch_count())
        .map(|p| {
            usize::from(out.detail_grid.patch(&out.fused, p) == out.detail_grid.patch(&gt_q, p))
        })
        .collect();
    let patch_accuracy = label_accuracy(
        &correct,
        &detail_regions
            .iter()
            .map(|r| r.map(|_| 1))
            .collect::<Vec<_>>(),
    );
    let base_map_accuracy = label_accuracy(&out.maps.base, &base_regions);
    let detail_map_accuracy = label_accuracy(&out.maps.detail, &detail_regions);
    let copy_violations = copy_violations(&out.fused, inputs, &out.detail_grid);
    let psnr_gain = psnr_fused - best;
    let pass = psnr_fused >= MIN_FUSED_PSNR
        && psnr_gain >= MIN_PSNR_GAIN
        && copy_violations == 0
        && if set.split.inputs() == 2 {
            base_map_accuracy >= MIN_MAP_ACCURACY && detail_map_accuracy >= MIN_MAP_ACCURACY
        } else {
            patch_accuracy >= MIN_PATCH_ACCURACY
        };
    Ok(SynthReport {
        split: set.split,
        sigma,
        psnr_fused,
        psnr_inputs,
        psnr_gain,
        base_map_accuracy,
        detail_map_accuracy,
        patch_accuracy,
        copy_violations,
        iterations: out.decompositions.iter().map(|d| d.iterations).collect(),
        converged: out.decompositions.iter().map(|d| d.converged).collect(),
        seconds,
        pass,
    })
}
