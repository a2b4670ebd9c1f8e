use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::quat::{Quaternion, QuaternionMatrix};

/// Row-major RGB image with channels in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    /// Channels are clamped to `[0, 1]`; NaN becomes 0.
    pub fn new(width: usize, height: usize, mut pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::shape(
                format!("{} pixels", width * height),
                format!("{}", pixels.len()),
            ));
        }
        for p in &mut pixels {
            for v in p.iter_mut() {
                *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Self {
        let pixels = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(width, height, pixels).expect("size matches by construction")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> [f64; 3] {
        self.pixels[row * self.width + col]
    }

    /// ITU-R 601 luminance, row-major.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect()
    }

    /// 8-bit sources are divided by 255; deeper sources go through f32.
    pub fn from_dynamic(img: &DynamicImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let pixels = match img {
            DynamicImage::ImageRgb8(_)
            | DynamicImage::ImageRgba8(_)
            | DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLumaA8(_) => img
                .to_rgb8()
                .pixels()
                .map(|p| p.0.map(|v| f64::from(v) / 255.0))
                .collect(),
            _ => img
                .to_rgb32f()
                .pixels()
                .map(|p| p.0.map(f64::from))
                .collect(),
        };
        Self::new(w, h, pixels).expect("size matches by construction")
    }

    /// Rounds to the nearest 8-bit level.
    pub fn to_rgb8(&self) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
        ImageBuffer::from_fn(self.width as u32, self.height as u32, |c, r| {
            Rgb(self
                .get(r as usize, c as usize)
                .map(|v| (v * 255.0).round() as u8))
        })
    }
}

pub fn read_image(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(RgbImage::from_dynamic(&img))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut std::fs::File) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    write(tmp.as_file_mut()).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_encoded_png(img: DynamicImage, path: &Path) -> Result<()> {
    write_atomic(path, |f| {
        let mut bytes = std::io::Cursor::new(Vec::new());
        img.write_to(&mut bytes, image::ImageFormat::Png)
            .map_err(std::io::Error::other)?;
        f.write_all(bytes.get_ref())
    })
}

pub fn write_png(img: &RgbImage, path: &Path) -> Result<()> {
    write_encoded_png(DynamicImage::ImageRgb8(img.to_rgb8()), path)
}

/// Row-major 8-bit grayscale PNG.
pub fn write_gray_png(values: &[u8], width: usize, height: usize, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(width as u32, height as u32, values.to_vec()).ok_or_else(
        || {
            Error::shape(
                format!("{} values", width * height),
                format!("{}", values.len()),
            )
        },
    )?;
    write_encoded_png(DynamicImage::ImageLuma8(buf), path)
}

/// Pure quaternion per pixel: `r·i + g·j + b·k`.
pub fn to_quaternion(img: &RgbImage) -> QuaternionMatrix {
    QuaternionMatrix::from_fn(img.height, img.width, |r, c| {
        let [red, green, blue] = img.get(r, c);
        Quaternion::pure(red, green, blue)
    })
}

/// Drops the real part and clamps the imaginary parts to `[0, 1]`.
pub fn from_quaternion(q: &QuaternionMatrix) -> RgbImage {
    let (rows, cols) = q.shape();
    RgbImage::from_fn(cols, rows, |r, c| {
        let p = q.get(r, c);
        [p.b, p.c, p.d]
    })
}

/// Float layer dump: `rows`, `cols`, `channels = 4` as little-endian u32,
/// then four row-major little-endian f32 planes (real, i, j, k).
pub fn write_layer(q: &QuaternionMatrix, path: &Path) -> Result<()> {
    let (rows, cols) = q.shape();
    let mut bytes = Vec::with_capacity(12 + 16 * rows * cols);
    for v in [rows as u32, cols as u32, 4] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for ch in 0..4 {
        for r in 0..rows {
            for c in 0..cols {
                bytes.extend_from_slice(&(q.get(r, c).to_array()[ch] as f32).to_le_bytes());
            }
        }
    }
    write_atomic(path, |f| f.write_all(&bytes))
}

pub fn read_layer(path: &Path) -> Result<QuaternionMatrix> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 12 {
        return Err(bad("truncated header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (rows, cols, channels) = (word(0), word(1), word(2));
    if channels != 4 {
        return Err(bad(format!("expected 4 channels, found {channels}")));
    }
    let plane = rows * cols;
    if bytes.len() != 12 + 16 * plane {
        return Err(bad(format!(
            "expected {} bytes for {rows}x{cols}, found {}",
            12 + 16 * plane,
            bytes.len()
        )));
    }
    let at = |ch: usize, i: usize| {
        let o = 12 + 4 * (ch * plane + i);
        f64::from(f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()))
    };
    Ok(QuaternionMatrix::from_fn(rows, cols, |r, c| {
        let i = r * cols + c;
        Quaternion::new(at(0, i), at(1, i), at(2, i), at(3, i))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn quaternion_mapping() {
        let black = RgbImage::from_fn(3, 2, |_, _| [0.0; 3]);
        assert_eq!(to_quaternion(&black), QuaternionMatrix::zeros(2, 3));
        let red = RgbImage::from_fn(1, 1, |_, _| [1.0, 0.0, 0.0]);
        assert_eq!(to_quaternion(&red).get(0, 0), Quaternion::I);
        let blue = from_quaternion(&QuaternionMatrix::from_fn(1, 1, |_, _| Quaternion::K));
        assert_eq!(blue.get(0, 0), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let img = RgbImage::from_fn(7, 5, |_, _| [rng.gen(), rng.gen(), rng.gen()]);
        assert_eq!(from_quaternion(&to_quaternion(&img)), img);
    }

    #[test]
    fn clamps_channels() {
        let img = RgbImage::new(2, 1, vec![[1.5, -0.2, f64::NAN], [0.5; 3]]).unwrap();
        assert_eq!(img.get(0, 0), [1.0, 0.0, 0.0]);
        assert!(RgbImage::new(2, 2, vec![[0.0; 3]]).is_err());
    }

    #[test]
    fn png_round_trip_on_255_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = RgbImage::from_fn(9, 4, |r, c| {
            [((r * 37 + c) % 256) as f64 / 255.0, c as f64 / 255.0, 1.0]
        });
        write_png(&img, &path).unwrap();
        assert_eq!(read_image(&path).unwrap(), img);
    }

    #[test]
    fn layer_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.qlayer");
        let q = QuaternionMatrix::from_fn(3, 4, |r, c| {
            Quaternion::new(0.25 * r as f64, -(c as f64), 0.5, 1.0 / 3.0)
        });
        write_layer(&q, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 12 + 16 * 12);
        let back = read_layer(&path).unwrap();
        assert!((&back - &q).max_modulus() < 1e-7);
        std::fs::write(&path, [0u8; 10]).unwrap();
        assert!(matches!(read_layer(&path), Err(Error::Format { .. })));
    }
}
