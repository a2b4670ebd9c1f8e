//! Dual-scale patch-copy fusion and structural-similarity refinement.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::focus::{
    build_focus_maps, detail_grid_side, focus_levels, FocusFeatures, FocusLevels, FocusMaps,
    FocusParams,
};
use crate::patch::{build_dictionary, Dictionary, PatchGrid};
use crate::qfed::{decompose, QfedConfig};
use crate::quat::{Quaternion, QuaternionMatrix};

/// Stabilizing constants of the similarity index and the adaptive weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimParams {
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            c1: 1e-6,
            c2: 1e-6,
            epsilon: 1e-10,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("epsilon", self.epsilon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn quaternion_mean(x: &[Quaternion]) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for &q in x {
        acc += q;
    }
    acc / x.len() as f64
}

/// Per-component population standard deviations assembled into a quaternion.
fn quaternion_sigma(x: &[Quaternion], mean: Quaternion) -> Quaternion {
    let m = mean.to_array();
    let mut var = [0.0; 4];
    for q in x {
        for (v, (a, b)) in var.iter_mut().zip(q.to_array().into_iter().zip(m)) {
            *v += (a - b) * (a - b);
        }
    }
    Quaternion::from_array(var.map(|v| (v / x.len() as f64).sqrt()))
}

/// `(2·conj(u)·v + c) / (|u|² + |v|² + c)`; the denominator is real.
fn similarity_factor(u: Quaternion, v: Quaternion, c: f64) -> Quaternion {
    (u.conj() * v * 2.0 + Quaternion::real(c)) / (u.norm_sqr() + v.norm_sqr() + c)
}

/// Quaternion structural similarity `conj(ȧ)·ḃ` of two equally sized patches.
pub fn qssim(x: &[Quaternion], y: &[Quaternion], p: &SsimParams) -> Quaternion {
    assert_eq!(x.len(), y.len(), "qssim patches differ in size");
    if x.is_empty() {
        return Quaternion::ONE;
    }
    let (mx, my) = (quaternion_mean(x), quaternion_mean(y));
    let (sx, sy) = (quaternion_sigma(x, mx), quaternion_sigma(y, my));
    let a = similarity_factor(mx, my, p.c1);
    let b = similarity_factor(sx, sy, p.c2);
    a.conj() * b
}

/// Scalar similarity: the modulus of [`qssim`].
pub fn qssim_score(x: &[Quaternion], y: &[Quaternion], p: &SsimParams) -> f64 {
    qssim(x, y, p).norm()
}

/// `τᵢ = lᵢ / (Σl + ε)`, with the last weight set to `1 − Σ` of the others.
pub fn adaptive_weights(levels: &[f64], epsilon: f64) -> Vec<f64> {
    let Some((_, head)) = levels.split_last() else {
        return Vec::new();
    };
    let total: f64 = levels.iter().sum::<f64>() + epsilon;
    let mut w: Vec<f64> = head.iter().map(|l| l / total).collect();
    w.push(1.0 - w.iter().sum::<f64>());
    w
}

/// Focus-weighted similarity of a candidate patch to the co-located source patches.
pub fn wqssim(f: &[Quaternion], sources: &[&[Quaternion]], levels: &[f64], p: &SsimParams) -> f64 {
    assert_eq!(
        sources.len(),
        levels.len(),
        "one detail level per source patch"
    );
    adaptive_weights(levels, p.epsilon)
        .iter()
        .zip(sources)
        .map(|(t, s)| t * qssim_score(f, s, p))
        .sum()
}

/// The two patch-copy composites.
#[derive(Clone, Debug, PartialEq)]
pub struct DualScaleFusion {
    /// Base-scale composite: base-grid patches chosen by the base map.
    pub f1: QuaternionMatrix,
    /// Detail-scale composite: detail-grid patches chosen by the detail map.
    pub f2: QuaternionMatrix,
}

fn check_inputs(inputs: &[QuaternionMatrix]) -> Result<(usize, usize)> {
    if inputs.len() < 2 {
        return Err(Error::TooFewInputs {
            required: 2,
            actual: inputs.len(),
        });
    }
    let shape = inputs[0].shape();
    if let Some(bad) = inputs.iter().find(|q| q.shape() != shape) {
        return Err(Error::shape(
            format!("{shape:?} for every input"),
            format!("{:?}", bad.shape()),
        ));
    }
    Ok(shape)
}

fn patch_composite(
    inputs: &[QuaternionMatrix],
    labels: &[usize],
    grid: &PatchGrid,
) -> Result<QuaternionMatrix> {
    if labels.len() != grid.patch_count() {
        return Err(Error::shape(
            format!("{} labels", grid.patch_count()),
            format!("{}", labels.len()),
        ));
    }
    if grid.image_shape() != inputs[0].shape() {
        return Err(Error::shape(
            format!("{:?} grid", inputs[0].shape()),
            format!("{:?}", grid.image_shape()),
        ));
    }
    let (m, n) = grid.image_shape();
    let mut out = QuaternionMatrix::zeros(m, n);
    for (p, &l) in labels.iter().enumerate() {
        let src = inputs.get(l).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "label {l} out of range for {} inputs",
                inputs.len()
            ))
        })?;
        grid.copy_patch(&mut out, src, p);
    }
    Ok(out)
}

pub fn qbdf_fuse(
    inputs: &[QuaternionMatrix],
    maps: &FocusMaps,
    base_grid: &PatchGrid,
    detail_grid: &PatchGrid,
) -> Result<DualScaleFusion> {
    check_inputs(inputs)?;
    Ok(DualScaleFusion {
        f1: patch_composite(inputs, &maps.base, base_grid)?,
        f2: patch_composite(inputs, &maps.detail, detail_grid)?,
    })
}

/// Scores of one refinement decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QssrRecord {
    pub patch: usize,
    pub wq_base: f64,
    pub wq_detail: f64,
    pub took_base: bool,
}

/// Per detail-grid patch, keeps the base-scale candidate if its weighted
/// similarity is strictly larger, otherwise the detail-scale one.
pub fn qssr_refine(
    fusion: &DualScaleFusion,
    inputs: &[QuaternionMatrix],
    detail_levels: &[Vec<f64>],
    grid: &PatchGrid,
    params: &SsimParams,
) -> Result<(QuaternionMatrix, Vec<QssrRecord>)> {
    let shape = check_inputs(inputs)?;
    if fusion.f1.shape() != shape || fusion.f2.shape() != shape || grid.image_shape() != shape {
        return Err(Error::shape(
            format!("{shape:?} composites and grid"),
            "differing shapes",
        ));
    }
    if detail_levels.len() != inputs.len()
        || detail_levels.iter().any(|l| l.len() != grid.patch_count())
    {
        return Err(Error::shape(
            "one detail level per input and patch",
            "mismatched level vectors",
        ));
    }
    let records: Vec<QssrRecord> = (0..grid.patch_count())
        .into_par_iter()
        .map(|p| {
            let sources: Vec<Vec<Quaternion>> = inputs.iter().map(|q| grid.patch(q, p)).collect();
            let refs: Vec<&[Quaternion]> = sources.iter().map(Vec::as_slice).collect();
            let levels: Vec<f64> = detail_levels.iter().map(|l| l[p]).collect();
            let wq_base = wqssim(&grid.patch(&fusion.f1, p), &refs, &levels, params);
            let wq_detail = wqssim(&grid.patch(&fusion.f2, p), &refs, &levels, params);
            QssrRecord {
                patch: p,
                wq_base,
                wq_detail,
                took_base: wq_base > wq_detail,
            }
        })
        .collect();
    let mut out = fusion.f2.clone();
    for r in records.iter().filter(|r| r.took_base) {
        grid.copy_patch(&mut out, &fusion.f1, r.patch);
    }
    Ok((out, records))
}

/// Writes `patch,wq_base,wq_detail,took_base` rows.
pub fn write_wq_csv(records: &[QssrRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "patch,wq_base,wq_detail,took_base")?;
    for r in records {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{}",
            r.patch,
            r.wq_base,
            r.wq_detail,
            u8::from(r.took_base)
        )?;
    }
    Ok(())
}

/// Everything the fusion pipeline is parameterized by.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuseConfig {
    pub qfed: QfedConfig,
    pub focus: FocusParams,
    pub ssim: SsimParams,
}

impl FuseConfig {
    pub fn validate(&self) -> Result<()> {
        self.qfed.validate()?;
        self.focus.validate()?;
        self.ssim.validate()
    }
}

/// Solver diagnostics of one input's decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionSummary {
    pub iterations: usize,
    pub converged: bool,
    pub rel_diff: f64,
    pub constraint_residual: f64,
}

#[derive(Clone, Debug)]
pub struct FusionOutput {
    pub fused: QuaternionMatrix,
    pub dual: DualScaleFusion,
    pub maps: FocusMaps,
    pub levels: Vec<FocusLevels>,
    pub base_grid: PatchGrid,
    pub detail_grid: PatchGrid,
    pub qssr: Vec<QssrRecord>,
    pub decompositions: Vec<DecompositionSummary>,
}

/// Fuses with the default DCT dictionary sized by `cfg.qfed`.
pub fn fuse(inputs: &[QuaternionMatrix], cfg: &FuseConfig) -> Result<FusionOutput> {
    let side = cfg.qfed.patch_side;
    let dict = build_dictionary(side * side, cfg.qfed.atom_count)?;
    fuse_with_dictionary(inputs, cfg, &dict)
}

pub fn fuse_with_dictionary(
    inputs: &[QuaternionMatrix],
    cfg: &FuseConfig,
    dict: &Dictionary,
) -> Result<FusionOutput> {
    cfg.validate()?;
    let (m, n) = check_inputs(inputs)?;
    let results = inputs
        .par_iter()
        .map(|q| decompose(q, &cfg.qfed, dict))
        .collect::<Result<Vec<_>>>()?;
    let base_grid = results[0].grid.clone();
    let detail_side = cfg
        .focus
        .detail_side
        .unwrap_or_else(|| detail_grid_side(m, n));
    let detail_grid = PatchGrid::non_overlapping(m, n, detail_side)?;

    let decompositions = results
        .iter()
        .map(|r| DecompositionSummary {
            iterations: r.iterations,
            converged: r.converged,
            rel_diff: r.rel_diff,
            constraint_residual: r.constraint_residual,
        })
        .collect::<Vec<_>>();
    for (i, s) in decompositions
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.converged)
    {
        log::warn!(
            "input {i}: decomposition stopped after {} iterations (rel diff {:.3e})",
            s.iterations,
            s.rel_diff
        );
    }

    let levels = results
        .into_par_iter()
        .map(|r| {
            let features = FocusFeatures::new(r.d, r.z, cfg.focus.radius);
            focus_levels(&features, &base_grid, &detail_grid, &cfg.focus)
        })
        .collect::<Result<Vec<_>>>()?;
    let maps = build_focus_maps(&levels)?;
    log::debug!(
        "focus ties: {} base, {} detail",
        count_ties(levels.iter().map(|l| l.base.as_slice())),
        count_ties(levels.iter().map(|l| l.detail.as_slice()))
    );

    let dual = qbdf_fuse(inputs, &maps, &base_grid, &detail_grid)?;
    let detail_levels: Vec<Vec<f64>> = levels.iter().map(|l| l.detail.clone()).collect();
    let (fused, qssr) = qssr_refine(&dual, inputs, &detail_levels, &detail_grid, &cfg.ssim)?;
    log::debug!(
        "similarity ties: {}",
        qssr.iter().filter(|r| r.wq_base == r.wq_detail).count()
    );

    Ok(FusionOutput {
        fused,
        dual,
        maps,
        levels,
        base_grid,
        detail_grid,
        qssr,
        decompositions,
    })
}

/// Patches whose maximum level is attained by more than one input.
fn count_ties<'a>(levels: impl Iterator<Item = &'a [f64]>) -> usize {
    let levels: Vec<&[f64]> = levels.collect();
    let count = levels.first().map_or(0, |l| l.len());
    (0..count)
        .filter(|&p| {
            let best = levels
                .iter()
                .map(|l| l[p])
                .fold(f64::NEG_INFINITY, f64::max);
            levels.iter().filter(|l| l[p] == best).count() > 1
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_patch(rng: &mut ChaCha8Rng, len: usize) -> Vec<Quaternion> {
        (0..len)
            .map(|_| Quaternion::pure(rng.gen(), rng.gen(), rng.gen()))
            .collect()
    }

    #[test]
    fn qssim_identity_and_bounds() {
        let p = SsimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = random_patch(&mut rng, 16);
            let y = random_patch(&mut rng, 16);
            assert!((qssim_score(&x, &x, &p) - 1.0).abs() <= 1e-12);
            let s = qssim_score(&x, &y, &p);
            assert!((0.0..=1.0 + 1e-12).contains(&s), "{s}");
            assert!((s - qssim_score(&y, &x, &p)).abs() <= 1e-12);
        }
    }

    #[test]
    fn qssim_constant_offset() {
        // both σ = 0 so ḃ = 1 and the score is |ȧ|
        let p = SsimParams::default();
        let u = Quaternion::pure(0.2, 0.4, 0.1);
        let v = Quaternion::pure(0.3, 0.4, 0.1);
        let x = vec![u; 9];
        let y = vec![v; 9];
        let expected = ((u.conj() * v * 2.0 + Quaternion::real(p.c1))
            / (u.norm_sqr() + v.norm_sqr() + p.c1))
            .norm();
        let s = qssim_score(&x, &y, &p);
        assert!((s - expected).abs() < 1e-15);
        assert!(s < 1.0);
    }

    #[test]
    fn qssim_reduces_to_scalar_ssim_on_gray() {
        // real-only data: ȧ and ḃ are the luminance and contrast factors
        let p = SsimParams::default();
        let x: Vec<Quaternion> = [0.1, 0.5, 0.3, 0.9].map(Quaternion::real).to_vec();
        let y: Vec<Quaternion> = [0.2, 0.4, 0.4, 0.6].map(Quaternion::real).to_vec();
        let (mx, my) = (0.45, 0.4);
        let sx =
            ((0.35f64.powi(2) + 0.05f64.powi(2) + 0.15f64.powi(2) + 0.45f64.powi(2)) / 4.0).sqrt();
        let sy = ((0.2f64.powi(2) + 0.0 + 0.0 + 0.2f64.powi(2)) / 4.0).sqrt();
        let l = (2.0 * mx * my + p.c1) / (mx * mx + my * my + p.c1);
        let c = (2.0 * sx * sy + p.c2) / (sx * sx + sy * sy + p.c2);
        assert!((qssim_score(&x, &y, &p) - l * c).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let l: [f64; 2] = [rng.gen(), rng.gen()];
            let w = adaptive_weights(&l, 1e-10);
            assert_eq!(w[0] + w[1], 1.0);
        }
        let w = adaptive_weights(&[0.4, 0.4], 1e-10);
        assert!((w[0] - 0.5).abs() < 1e-6);
        let w = adaptive_weights(&[0.8, 0.0], 1e-10);
        assert!((w[0] - 1.0).abs() < 1e-9);
        let w = adaptive_weights(&[0.0, 0.0], 1e-10);
        assert_eq!(w, vec![0.0, 1.0]);
        assert_eq!(adaptive_weights(&[0.2, 0.3, 0.5], 0.0).len(), 3);
    }

    #[test]
    fn wqssim_limits() {
        let p = SsimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_patch(&mut rng, 16);
        let a = random_patch(&mut rng, 16);
        let wq = wqssim(&f, &[&f, &a], &[0.9, 0.0], &p);
        assert!((wq - 1.0).abs() < 1e-9);
        let wq = wqssim(&f, &[&a, &f], &[0.3, 0.3], &p);
        let half = 0.5 * qssim_score(&f, &a, &p) + 0.5;
        assert!((wq - half).abs() < 1e-9);
    }

    fn stripes(m: usize, n: usize, k: f64) -> QuaternionMatrix {
        QuaternionMatrix::from_fn(m, n, |r, c| {
            Quaternion::pure(
                (r as f64 * k).sin().abs(),
                (c as f64 * 0.3).cos().abs(),
                k / 4.0,
            )
        })
    }

    #[test]
    fn qbdf_copies_patches() {
        let a = stripes(8, 8, 1.0);
        let b = stripes(8, 8, 2.0);
        let bg = PatchGrid::non_overlapping(8, 8, 4).unwrap();
        let dg = PatchGrid::non_overlapping(8, 8, 2).unwrap();
        let maps = FocusMaps {
            base: vec![0, 1, 1, 0],
            detail: (0..16).map(|p| (p + p / 4) % 2).collect(),
            inputs: 2,
        };
        let out = qbdf_fuse(&[a.clone(), b.clone()], &maps, &bg, &dg).unwrap();
        for p in 0..4 {
            let src = if maps.base[p] == 0 { &a } else { &b };
            assert_eq!(bg.patch(&out.f1, p), bg.patch(src, p));
        }
        for p in 0..16 {
            let src = if maps.detail[p] == 0 { &a } else { &b };
            assert_eq!(dg.patch(&out.f2, p), dg.patch(src, p));
        }
        let zeros = FocusMaps {
            base: vec![0; 4],
            detail: vec![0; 16],
            inputs: 2,
        };
        assert_eq!(
            qbdf_fuse(&[a.clone(), b.clone()], &zeros, &bg, &dg)
                .unwrap()
                .f1,
            a
        );
        let bad = FocusMaps {
            base: vec![2; 4],
            detail: vec![0; 16],
            inputs: 2,
        };
        assert!(qbdf_fuse(&[a.clone(), b], &bad, &bg, &dg).is_err());
        assert!(qbdf_fuse(&[a.clone(), stripes(8, 9, 1.0)], &zeros, &bg, &dg).is_err());
    }

    #[test]
    fn qssr_prefers_the_matching_candidate() {
        let sharp = stripes(8, 8, 1.3);
        let flat = QuaternionMatrix::from_fn(8, 8, |_, _| Quaternion::pure(0.5, 0.5, 0.3));
        let grid = PatchGrid::non_overlapping(8, 8, 4).unwrap();
        let dual = DualScaleFusion {
            f1: sharp.clone(),
            f2: flat.clone(),
        };
        let levels = vec![vec![0.9; 4], vec![0.1; 4]];
        let (out, rec) = qssr_refine(
            &dual,
            &[sharp.clone(), flat.clone()],
            &levels,
            &grid,
            &SsimParams::default(),
        )
        .unwrap();
        assert_eq!(out, sharp);
        assert!(rec.iter().all(|r| r.took_base));

        // equal candidates: the tie goes to the detail-scale composite
        let same = DualScaleFusion {
            f1: sharp.clone(),
            f2: sharp.clone(),
        };
        let (out, rec) = qssr_refine(
            &same,
            &[sharp.clone(), flat],
            &levels,
            &grid,
            &SsimParams::default(),
        )
        .unwrap();
        assert_eq!(out, sharp);
        assert!(rec.iter().all(|r| !r.took_base));
    }

    #[test]
    fn wq_csv_layout() {
        let rec = [QssrRecord {
            patch: 3,
            wq_base: 0.5,
            wq_detail: 0.25,
            took_base: true,
        }];
        let mut buf = Vec::new();
        write_wq_csv(&rec, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("patch,wq_base,wq_detail,took_base"));
        assert!(lines.next().unwrap().starts_with("3,5.0"));
    }

    #[test]
    fn fuse_identical_inputs_is_identity() {
        let img = stripes(24, 24, 0.7);
        let cfg = FuseConfig {
            qfed: QfedConfig {
                max_iter: 5,
                atom_count: 64,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = fuse(&[img.clone(), img.clone()], &cfg).unwrap();
        assert_eq!(out.fused, img);
        assert!(out.maps.base.iter().all(|&l| l == 1));
        assert!(fuse(std::slice::from_ref(&img), &cfg).is_err());
    }
}
