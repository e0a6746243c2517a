//! Brute-force reference implementations used as oracles by the test
//! suites. Everything here works on plain slices and is deliberately
//! independent of the solver crates: direct summations, dense matrices,
//! and scalar searches instead of FFTs and proximal splitting.

pub mod dense;
pub mod scalar;
pub mod synth;

use num_complex::Complex;

/// Direct `O(n^2)` DFT of a complex signal given as `(re, im)` pairs.
pub fn naive_dft_1d(signal: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = signal.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex::new(0.0, 0.0);
        for (j, &(re, im)) in signal.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
            acc += Complex::new(re, im) * Complex::from_polar(1.0, angle);
        }
        out.push((acc.re, acc.im));
    }
    out
}

/// Direct `O(D^2)` 2D DFT of a real row-major raster.
pub fn naive_dft_2d(height: usize, width: usize, data: &[f64]) -> Vec<(f64, f64)> {
    assert_eq!(data.len(), height * width);
    let mut out = Vec::with_capacity(data.len());
    for kr in 0..height {
        for kc in 0..width {
            let mut acc = Complex::new(0.0, 0.0);
            for r in 0..height {
                for c in 0..width {
                    let angle = -2.0
                        * std::f64::consts::PI
                        * ((kr * r) as f64 / height as f64 + (kc * c) as f64 / width as f64);
                    acc += data[r * width + c] * Complex::from_polar(1.0, angle);
                }
            }
            out.push((acc.re, acc.im));
        }
    }
    out
}

/// Circular 2D convolution by direct double summation.
pub fn circ_conv_direct(height: usize, width: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), height * width);
    assert_eq!(b.len(), height * width);
    let mut out = vec![0.0; height * width];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for i in 0..height {
                for j in 0..width {
                    let rr = (r + height - i) % height;
                    let cc = (c + width - j) % width;
                    acc += a[i * width + j] * b[rr * width + cc];
                }
            }
            out[r * width + c] = acc;
        }
    }
    out
}

/// Embeds a small `side x side` filter at the top-left of an
/// `height x width` canvas by direct indexing.
pub fn pad_top_left(filter: &[f64], side: usize, height: usize, width: usize) -> Vec<f64> {
    assert_eq!(filter.len(), side * side);
    let mut out = vec![0.0; height * width];
    for r in 0..side {
        for c in 0..side {
            out[r * width + c] = filter[r * side + c];
        }
    }
    out
}

/// Sum of filters circularly convolved with their maps, by direct summation.
pub fn reconstruct_direct(
    height: usize,
    width: usize,
    filters: &[Vec<f64>],
    side: usize,
    maps: &[Vec<f64>],
) -> Vec<f64> {
    assert_eq!(filters.len(), maps.len());
    let mut out = vec![0.0; height * width];
    for (filter, map) in filters.iter().zip(maps.iter()) {
        let padded = pad_top_left(filter, side, height, width);
        let conv = circ_conv_direct(height, width, &padded, map);
        for (o, v) in out.iter_mut().zip(conv.iter()) {
            *o += v;
        }
    }
    out
}
