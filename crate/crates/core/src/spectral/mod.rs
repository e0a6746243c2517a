//! Frequency-domain kernel: 2D FFT, circular convolution, filter
//! padding/cropping, and the dictionary reconstruction operator
//! `sum_k d_k (*) z_k`.
//!
//! Conventions used throughout the crate: forward transforms are
//! unnormalized and the inverse divides by the pixel count, so the
//! convolution theorem holds without extra scaling; filters are anchored
//! at the top-left corner of the canvas and all shifts live in the maps.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::image::{FilterBank, Image2D, SparseMapStack};

pub(crate) mod fft;

use fft::{CanvasFft, C64};

/// Full-complex 2D spectrum, row-major, bin `(0, 0)` is DC.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    height: usize,
    width: usize,
    values: Vec<Complex<f64>>,
}

impl Spectrum2D {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<f64> {
        self.values[row * self.width + col]
    }
}

/// Forward 2D DFT of an image (unnormalized).
pub fn fft2(img: &Image2D) -> Spectrum2D {
    let plan = CanvasFft::new(img.height(), img.width());
    let values = plan.forward_real(img.as_slice());
    Spectrum2D { height: img.height(), width: img.width(), values }
}

/// Inverse 2D DFT scaled by `1/(height*width)`, keeping real parts.
/// Intended for spectra of real images; `ifft2(fft2(x))` reproduces `x`.
pub fn ifft2(spectrum: &Spectrum2D) -> Image2D {
    let plan = CanvasFft::new(spectrum.height, spectrum.width);
    let data = plan.inverse_real(&spectrum.values);
    Image2D::from_vec_unchecked(spectrum.height, spectrum.width, data)
}

/// Embeds a flat `side x side` filter into the top-left block of a
/// `height x width` canvas, zero elsewhere (the transpose of the support
/// selection operator).
pub fn pad_filter(filter: &[f64], side: usize, height: usize, width: usize) -> Result<Image2D> {
    if filter.len() != side * side {
        return Err(Error::InvalidDimension(format!(
            "filter slice has {} values, expected {}",
            filter.len(),
            side * side
        )));
    }
    if side == 0 || side > height || side > width {
        return Err(Error::InvalidDimension(format!(
            "filter side {side} does not fit a {height}x{width} canvas"
        )));
    }
    let mut img = Image2D::zeros(height, width);
    for r in 0..side {
        for c in 0..side {
            img.set(r, c, filter[r * side + c]);
        }
    }
    Ok(img)
}

/// Extracts the top-left `side x side` block of a canvas image (the
/// support selection operator).
pub fn crop_filter(img: &Image2D, side: usize) -> Result<Vec<f64>> {
    if side == 0 || side > img.height() || side > img.width() {
        return Err(Error::InvalidDimension(format!(
            "crop side {side} does not fit a {}x{} canvas",
            img.height(),
            img.width()
        )));
    }
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            out.push(img.get(r, c));
        }
    }
    Ok(out)
}

/// Circular 2D convolution computed through the Fourier domain.
pub fn circ_conv(a: &Image2D, b: &Image2D) -> Result<Image2D> {
    if !a.same_dims(b) {
        return Err(Error::InvalidDimension(format!(
            "convolution operands differ: {}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    let plan = CanvasFft::new(a.height(), a.width());
    let mut sa = plan.forward_real(a.as_slice());
    let sb = plan.forward_real(b.as_slice());
    for (va, vb) in sa.iter_mut().zip(sb.iter()) {
        *va *= *vb;
    }
    let data = plan.inverse_real(&sa);
    Ok(Image2D::from_vec_unchecked(a.height(), a.width(), data))
}

/// Dictionary reconstruction `sum_k pad(d_k) (*) z_k` on the map canvas.
pub fn reconstruct(bank: &FilterBank, maps: &SparseMapStack) -> Result<Image2D> {
    if bank.count() != maps.count() {
        return Err(Error::InvalidDimension(format!(
            "bank has {} filters but stack has {} maps",
            bank.count(),
            maps.count()
        )));
    }
    if bank.side() > maps.height() || bank.side() > maps.width() {
        return Err(Error::InvalidDimension(format!(
            "filter side {} exceeds the {}x{} canvas",
            bank.side(),
            maps.height(),
            maps.width()
        )));
    }
    let plan = CanvasFft::new(maps.height(), maps.width());
    let spectra = filter_spectra(bank, &plan)?;
    let d = plan.pixels();
    let mut acc = alloc::vec![C64::new(0.0, 0.0); d];
    for k in 0..maps.count() {
        let zs = plan.forward_real(maps.map(k));
        let ds = &spectra[k * d..(k + 1) * d];
        for ((a, zv), dv) in acc.iter_mut().zip(zs.iter()).zip(ds.iter()) {
            *a += zv * dv;
        }
    }
    let data = plan.inverse_real(&acc);
    Ok(Image2D::from_vec_unchecked(maps.height(), maps.width(), data))
}

/// Spectra of every canvas-padded filter, concatenated filter-major.
pub(crate) fn filter_spectra(bank: &FilterBank, plan: &CanvasFft) -> Result<Vec<C64>> {
    let d = plan.pixels();
    let mut out = Vec::with_capacity(bank.count() * d);
    for k in 0..bank.count() {
        let padded = pad_filter(bank.filter(k), bank.side(), plan.height(), plan.width())?;
        out.extend(plan.forward_real(padded.as_slice()));
    }
    Ok(out)
}

/// Canvas size for an `height x width` image coded with `filter_side`
/// filters: the image plus a `filter_side - 1` padding ring on the
/// right/bottom, masked out of the data term.
pub fn canvas_dims(height: usize, width: usize, filter_side: usize) -> (usize, usize) {
    (height + filter_side - 1, width + filter_side - 1)
}

/// Embeds an image at the top-left of its working canvas, ring zeros.
pub fn embed_canvas(img: &Image2D, filter_side: usize) -> Image2D {
    let (ch, cw) = canvas_dims(img.height(), img.width(), filter_side);
    let mut out = Image2D::zeros(ch, cw);
    for r in 0..img.height() {
        for c in 0..img.width() {
            out.set(r, c, img.get(r, c));
        }
    }
    out
}

/// Canvas-sized mask that keeps exactly the original image block.
pub fn boundary_mask(height: usize, width: usize, filter_side: usize) -> Image2D {
    let (ch, cw) = canvas_dims(height, width, filter_side);
    Image2D::from_fn(ch, cw, |r, c| if r < height && c < width { 1.0 } else { 0.0 })
}

/// Extracts the top-left `height x width` block of a canvas image.
pub fn crop_valid(canvas: &Image2D, height: usize, width: usize) -> Result<Image2D> {
    if height > canvas.height() || width > canvas.width() {
        return Err(Error::InvalidDimension(format!(
            "valid region {height}x{width} exceeds canvas {}x{}",
            canvas.height(),
            canvas.width()
        )));
    }
    Ok(Image2D::from_fn(height, width, |r, c| canvas.get(r, c)))
}
