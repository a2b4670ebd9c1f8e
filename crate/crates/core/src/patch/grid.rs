use crate::error::{Error, Result};
use crate::quat::QuaternionMatrix;

/// Geometry of square patches laid over an image.
///
/// Patch origins advance by `stride`; the last origin along each axis is
/// clamped to the image border so every pixel is covered. Patches are
/// numbered in raster order (left to right, then top to bottom) and each
/// patch is vectorized column-major, so entry `r + c·side` of a patch vector
/// is pixel `(row0 + r, col0 + c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    rows: usize,
    cols: usize,
    side: usize,
    stride: usize,
    row_starts: Vec<usize>,
    col_starts: Vec<usize>,
}

fn starts(len: usize, side: usize, stride: usize) -> Vec<usize> {
    let count = (len - side).div_ceil(stride) + 1;
    (0..count).map(|i| (i * stride).min(len - side)).collect()
}

impl PatchGrid {
    pub fn new(rows: usize, cols: usize, side: usize, stride: usize) -> Result<Self> {
        if side == 0 || stride == 0 {
            return Err(Error::InvalidParameter(
                "patch side and stride must be positive".into(),
            ));
        }
        if side > rows || side > cols {
            return Err(Error::PatchTooLarge { side, rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            side,
            stride,
            row_starts: starts(rows, side, stride),
            col_starts: starts(cols, side, stride),
        })
    }

    /// Grid with `stride == side`.
    pub fn non_overlapping(rows: usize, cols: usize, side: usize) -> Result<Self> {
        Self::new(rows, cols, side, side)
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Patch vector length `d = side²`.
    pub fn patch_dim(&self) -> usize {
        self.side * self.side
    }

    pub fn patch_count(&self) -> usize {
        self.row_starts.len() * self.col_starts.len()
    }

    /// Number of patches along (rows, cols).
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.row_starts.len(), self.col_starts.len())
    }

    /// Top-left pixel of patch `p`.
    pub fn origin(&self, p: usize) -> (usize, usize) {
        let gc = self.col_starts.len();
        (self.row_starts[p / gc], self.col_starts[p % gc])
    }

    /// True when patches tile the image without overlap.
    pub fn is_exact_tiling(&self) -> bool {
        self.stride == self.side && self.rows.is_multiple_of(self.side) && self.cols.is_multiple_of(self.side)
    }

    /// Pixel coordinates covered by patch `p`, in vectorization order.
    pub fn pixels(&self, p: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (r0, c0) = self.origin(p);
        let s = self.side;
        (0..s).flat_map(move |c| (0..s).map(move |r| (r0 + r, c0 + c)))
    }

    fn check_image(&self, q: &QuaternionMatrix) -> Result<()> {
        if q.shape() != (self.rows, self.cols) {
            return Err(Error::shape(
                format!("{}x{} image", self.rows, self.cols),
                format!("{}x{}", q.rows(), q.cols()),
            ));
        }
        Ok(())
    }

    /// Vectorized patch `p` of `q`.
    pub fn patch(&self, q: &QuaternionMatrix, p: usize) -> Vec<crate::quat::Quaternion> {
        self.pixels(p).map(|(r, c)| q.get(r, c)).collect()
    }

    /// Copies patch `p` of `src` into the same location of `dst`.
    pub fn copy_patch(&self, dst: &mut QuaternionMatrix, src: &QuaternionMatrix, p: usize) {
        for (r, c) in self.pixels(p) {
            dst.set(r, c, src.get(r, c));
        }
    }
}

/// `R(q)`: stacks every vectorized patch as a column of a `d×P` matrix.
pub fn extract(q: &QuaternionMatrix, grid: &PatchGrid) -> Result<QuaternionMatrix> {
    grid.check_image(q)?;
    let d = grid.patch_dim();
    let mut out = QuaternionMatrix::zeros(d, grid.patch_count());
    for p in 0..grid.patch_count() {
        for (dst, (r, c)) in out.col_mut(p).iter_mut().zip(grid.pixels(p)) {
            *dst = q.get(r, c);
        }
    }
    Ok(out)
}

/// `R⁻¹(patches)`: places patches back, averaging pixels covered more than once.
pub fn reassemble(patches: &QuaternionMatrix, grid: &PatchGrid) -> Result<QuaternionMatrix> {
    if patches.shape() != (grid.patch_dim(), grid.patch_count()) {
        return Err(Error::shape(
            format!("{}x{} patch matrix", grid.patch_dim(), grid.patch_count()),
            format!("{}x{}", patches.rows(), patches.cols()),
        ));
    }
    let (rows, cols) = grid.image_shape();
    let mut acc = QuaternionMatrix::zeros(rows, cols);
    if grid.is_exact_tiling() {
        for p in 0..grid.patch_count() {
            for (&v, (r, c)) in patches.col(p).iter().zip(grid.pixels(p)) {
                acc.set(r, c, v);
            }
        }
        return Ok(acc);
    }
    let mut count = vec![0u32; rows * cols];
    for p in 0..grid.patch_count() {
        for (&v, (r, c)) in patches.col(p).iter().zip(grid.pixels(p)) {
            acc[(r, c)] += v;
            count[r + c * rows] += 1;
        }
    }
    for (q, &n) in acc.as_mut_slice().iter_mut().zip(&count) {
        *q = q.scale(1.0 / n as f64);
    }
    Ok(acc)
}
