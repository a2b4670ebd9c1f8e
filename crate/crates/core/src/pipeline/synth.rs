use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::io::RgbImage;

/// How the ground truth is divided into in-focus regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    /// Two inputs: left half, right half.
    LeftRight,
    /// Two inputs: top half, bottom half.
    TopBottom,
    /// Three inputs: vertical thirds.
    Thirds,
}

impl Split {
    pub fn inputs(self) -> usize {
        match self {
            Split::LeftRight | Split::TopBottom => 2,
            Split::Thirds => 3,
        }
    }

    /// Region index of a pixel.
    pub fn region(self, row: usize, col: usize, height: usize, width: usize) -> usize {
        match self {
            Split::LeftRight => usize::from(2 * col >= width),
            Split::TopBottom => usize::from(2 * row >= height),
            Split::Thirds => (3 * col / width).min(2),
        }
    }
}

/// Normalized Gaussian kernel of radius `⌈3σ⌉`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let w: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable Gaussian blur with replicate borders.
pub fn gaussian_blur(img: &RgbImage, sigma: f64) -> Result<RgbImage> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be > 0, got {sigma}"
        )));
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let pass = |src: &dyn Fn(usize, usize) -> [f64; 3], horizontal: bool| -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; w * h];
        for row in 0..h {
            for col in 0..w {
                let mut acc = [0.0; 3];
                for (t, kv) in k.iter().enumerate() {
                    let off = t as isize - r;
                    let (rr, cc) = if horizontal {
                        (row, (col as isize + off).clamp(0, w as isize - 1) as usize)
                    } else {
                        ((row as isize + off).clamp(0, h as isize - 1) as usize, col)
                    };
                    let p = src(rr, cc);
                    for ch in 0..3 {
                        acc[ch] += kv * p[ch];
                    }
                }
                out[row * w + col] = acc;
            }
        }
        out
    };
    let tmp = pass(&|r, c| img.get(r, c), true);
    let out = pass(&|r, c| tmp[r * w + c], false);
    RgbImage::new(w, h, out)
}

/// Inputs each sharp on their own region and blurred elsewhere.
#[derive(Clone, Debug)]
pub struct SynthSet {
    pub inputs: Vec<RgbImage>,
    /// Row-major region index per pixel.
    pub labels: Vec<usize>,
    pub split: Split,
}

pub fn synth_split(gt: &RgbImage, split: Split, sigma: f64) -> Result<SynthSet> {
    let blurred = gaussian_blur(gt, sigma)?;
    let (w, h) = (gt.width(), gt.height());
    let labels: Vec<usize> = (0..h)
        .flat_map(|r| (0..w).map(move |c| split.region(r, c, h, w)))
        .collect();
    let inputs = (0..split.inputs())
        .map(|i| {
            RgbImage::from_fn(w, h, |r, c| {
                if labels[r * w + c] == i {
                    gt.get(r, c)
                } else {
                    blurred.get(r, c)
                }
            })
        })
        .collect();
    Ok(SynthSet {
        inputs,
        labels,
        split,
    })
}
