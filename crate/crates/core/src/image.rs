//! Dense raster containers: grayscale images, filter banks, and stacks of
//! image-sized coefficient maps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// A real-valued grayscale raster, row-major, with values nominally in
/// `[0, 1]` (masks use exactly `{0, 1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image2D {
    /// Builds an image, checking that `data` has `height * width` finite
    /// entries and that both dimensions are nonzero.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimension(format!(
                "image dimensions must be nonzero, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidDimension(format!(
                "expected {} values for a {height}x{width} image, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite pixel value at index {bad}"
            )));
        }
        Ok(Self { height, width, data })
    }

    /// All-zero image. Panics on zero dimensions (programmer error).
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "zero image dimension");
        Self { height, width, data: vec![0.0; height * width] }
    }

    /// All-one image, the trivial mask.
    pub fn ones(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "zero image dimension");
        Self { height, width, data: vec![1.0; height * width] }
    }

    /// Fills an image from a per-pixel function of `(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "zero image dimension");
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self { height, width, data }
    }

    pub(crate) fn from_vec_unchecked(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &Image2D) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// True when every pixel is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// A bank of `count` square filters with side `side`, stored flat
/// (filter-major, then row-major). Every filter lies in the unit L2 ball.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    count: usize,
    side: usize,
    data: Vec<f64>,
}

/// Slack on the unit-ball check, absorbing projection round-off.
pub const UNIT_BALL_SLACK: f64 = 1e-9;

impl FilterBank {
    pub fn new(count: usize, side: usize, data: Vec<f64>) -> Result<Self> {
        if count == 0 || side == 0 {
            return Err(Error::InvalidDimension(format!(
                "filter bank must have nonzero count and side, got {count}x{side}x{side}"
            )));
        }
        if data.len() != count * side * side {
            return Err(Error::InvalidDimension(format!(
                "expected {} filter values, got {}",
                count * side * side,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite filter value at index {bad}"
            )));
        }
        for k in 0..count {
            let sq: f64 = data[k * side * side..(k + 1) * side * side]
                .iter()
                .map(|v| v * v)
                .sum();
            if sq > 1.0 + UNIT_BALL_SLACK {
                return Err(Error::InvalidParameter(format!(
                    "filter {k} has squared norm {sq}, exceeding the unit ball"
                )));
            }
        }
        Ok(Self { count, side, data })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// The `k`-th filter as a flat `side * side` slice.
    pub fn filter(&self, k: usize) -> &[f64] {
        let s = self.side * self.side;
        &self.data[k * s..(k + 1) * s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// L2 norm of filter `k`.
    pub fn filter_norm(&self, k: usize) -> f64 {
        math::sqrt(self.filter(k).iter().map(|v| v * v).sum())
    }
}

/// `count` image-sized coefficient maps sharing one canvas, stored flat
/// (map-major, then row-major). Also reused internally for stacks of
/// canvas-padded filters, which have the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMapStack {
    count: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SparseMapStack {
    pub fn new(count: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if count == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidDimension(format!(
                "map stack must have nonzero dimensions, got {count}x{height}x{width}"
            )));
        }
        if data.len() != count * height * width {
            return Err(Error::InvalidDimension(format!(
                "expected {} map values, got {}",
                count * height * width,
                data.len()
            )));
        }
        Ok(Self { count, height, width, data })
    }

    pub fn zeros(count: usize, height: usize, width: usize) -> Self {
        assert!(count > 0 && height > 0 && width > 0, "zero map stack dimension");
        Self { count, height, width, data: vec![0.0; count * height * width] }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Pixels per map.
    pub fn canvas_len(&self) -> usize {
        self.height * self.width
    }

    /// The `k`-th map as a flat canvas-sized slice.
    pub fn map(&self, k: usize) -> &[f64] {
        let d = self.canvas_len();
        &self.data[k * d..(k + 1) * d]
    }

    pub fn map_mut(&mut self, k: usize) -> &mut [f64] {
        let d = self.canvas_len();
        &mut self.data[k * d..(k + 1) * d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Sum of absolute values over every map.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// Value of map `k` at pixel index `idx` (row-major within the canvas).
    pub fn value_at(&self, k: usize, idx: usize) -> f64 {
        self.data[k * self.canvas_len() + idx]
    }
}
