//! Fusion quality metrics on ITU-R 601 luminance.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::pipeline::io::RgbImage;

const BINS: usize = 256;

fn check_same(fused: &RgbImage, inputs: &[RgbImage]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::TooFewInputs {
            required: 1,
            actual: 0,
        });
    }
    let shape = (fused.width(), fused.height());
    if let Some(bad) = inputs.iter().find(|i| (i.width(), i.height()) != shape) {
        return Err(Error::shape(
            format!("{shape:?}"),
            format!("{:?}", (bad.width(), bad.height())),
        ));
    }
    Ok(())
}

/// PSNR in dB over all RGB channels, peak 1.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_same(a, std::slice::from_ref(b))?;
    let n = (a.pixels().len() * 3) as f64;
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).powi(2)))
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

fn bin(v: f64) -> usize {
    ((v * BINS as f64) as usize).min(BINS - 1)
}

fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&v| v > 0.0).map(|v| -v * v.log2()).sum()
}

/// Mutual information and the two marginal entropies, in bits.
fn mutual_information(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let mut joint = vec![0.0; BINS * BINS];
    for (&a, &b) in x.iter().zip(y) {
        joint[bin(a) * BINS + bin(b)] += 1.0;
    }
    let n = x.len() as f64;
    joint.iter_mut().for_each(|v| *v /= n);
    let px: Vec<f64> = joint.chunks(BINS).map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..BINS)
        .map(|j| (0..BINS).map(|i| joint[i * BINS + j]).sum())
        .collect();
    let (hx, hy) = (entropy(px.into_iter()), entropy(py.into_iter()));
    let hxy = entropy(joint.into_iter());
    (hx + hy - hxy, hx, hy)
}

/// Normalized mutual information `Σᵢ 2·MI(Aᵢ,F)/(H(Aᵢ)+H(F))`, scaled by
/// `2/N` so that two inputs give the usual `[0, 2]` range.
pub fn metric_qmi(fused: &RgbImage, inputs: &[RgbImage]) -> Result<f64> {
    check_same(fused, inputs)?;
    let f = fused.luminance();
    let total: f64 = inputs
        .iter()
        .map(|i| {
            let (mi, ha, hf) = mutual_information(&i.luminance(), &f);
            if ha + hf > 0.0 {
                2.0 * mi / (ha + hf)
            } else {
                0.0
            }
        })
        .sum();
    Ok(total * 2.0 / inputs.len() as f64)
}

/// Sobel magnitude and orientation with replicate borders.
fn sobel(lum: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |r: isize, c: isize| {
        lum[r.clamp(0, h as isize - 1) as usize * w + c.clamp(0, w as isize - 1) as usize]
    };
    let mut mag = vec![0.0; w * h];
    let mut ang = vec![0.0; w * h];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)
                - at(r - 1, c - 1)
                - 2.0 * at(r, c - 1)
                - at(r + 1, c - 1);
            let gy = at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)
                - at(r - 1, c - 1)
                - 2.0 * at(r - 1, c)
                - at(r - 1, c + 1);
            let i = r as usize * w + c as usize;
            mag[i] = gx.hypot(gy);
            ang[i] = if gx == 0.0 {
                if gy == 0.0 {
                    0.0
                } else {
                    FRAC_PI_2
                }
            } else {
                (gy / gx).atan()
            };
        }
    }
    (mag, ang)
}

// sigmoid constants; the gains are chosen so perfect preservation scores 1
const KG: f64 = -15.0;
const SG: f64 = 0.5;
const KA: f64 = -22.0;
const SA: f64 = 0.8;

fn sigmoid(x: f64, k: f64, s: f64) -> f64 {
    (1.0 + (k * (1.0 - s)).exp()) / (1.0 + (k * (x - s)).exp())
}

/// Edge-preservation metric `Q^{AB/F}` with gradient-magnitude weights.
pub fn metric_qg(fused: &RgbImage, inputs: &[RgbImage]) -> Result<f64> {
    check_same(fused, inputs)?;
    let (w, h) = (fused.width(), fused.height());
    let (gf, af) = sobel(&fused.luminance(), w, h);
    let mut num = 0.0;
    let mut den = 0.0;
    for input in inputs {
        let (ga, aa) = sobel(&input.luminance(), w, h);
        for i in 0..w * h {
            let g = if ga[i] == gf[i] {
                1.0
            } else if ga[i] > gf[i] {
                gf[i] / ga[i]
            } else {
                ga[i] / gf[i]
            };
            let a = 1.0 - (aa[i] - af[i]).abs() / FRAC_PI_2;
            num += sigmoid(g, KG, SG) * sigmoid(a, KA, SA) * ga[i];
            den += ga[i];
        }
    }
    Ok(if den == 0.0 {
        1.0
    } else {
        (num / den).clamp(0.0, 1.0)
    })
}
