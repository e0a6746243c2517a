//! In-place complex FFT plans: iterative radix-2 for power-of-two lengths
//! and Bluestein's chirp-z algorithm for everything else, so any canvas
//! size gets an exact-length transform.
//!
//! Forward transforms are unnormalized; inverses divide by the length.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::math;

pub(crate) type C64 = Complex<f64>;

pub(crate) struct FftPlan {
    n: usize,
    kind: PlanKind,
}

enum PlanKind {
    /// `n` is a power of two. `twiddles[k] = exp(-2*pi*i*k/n)` for `k < n/2`.
    Radix2 { twiddles: Vec<C64> },
    /// Arbitrary `n` via chirp-z: an `l`-point power-of-two convolution.
    Bluestein {
        chirp: Vec<C64>,
        chirp_fft: Vec<C64>,
        inner: Box<FftPlan>,
        l: usize,
    },
}

fn pow2_twiddles(n: usize) -> Vec<C64> {
    let mut tw = Vec::with_capacity(n / 2);
    for k in 0..n / 2 {
        let angle = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
        tw.push(C64::new(math::cos(angle), math::sin(angle)));
    }
    tw
}

fn fft_pow2(buf: &mut [C64], twiddles: &[C64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        let mut start = 0;
        while start < n {
            for k in 0..half {
                let w = twiddles[k * stride];
                let hi = buf[start + k + half] * w;
                let lo = buf[start + k];
                buf[start + k] = lo + hi;
                buf[start + k + half] = lo - hi;
            }
            start += len;
        }
        len <<= 1;
    }
}

impl FftPlan {
    pub(crate) fn new(n: usize) -> Self {
        assert!(n >= 1, "zero-length FFT");
        if n.is_power_of_two() {
            return Self { n, kind: PlanKind::Radix2 { twiddles: pow2_twiddles(n) } };
        }
        let l = (2 * n - 1).next_power_of_two();
        // chirp[j] = exp(-i*pi*j^2/n); j^2 reduced mod 2n keeps angles small.
        let modulus = 2 * n as u64;
        let mut chirp = Vec::with_capacity(n);
        for j in 0..n as u64 {
            let r = (j * j) % modulus;
            let angle = -core::f64::consts::PI * r as f64 / n as f64;
            chirp.push(C64::new(math::cos(angle), math::sin(angle)));
        }
        let inner = Box::new(FftPlan::new(l));
        let mut b = vec![C64::new(0.0, 0.0); l];
        b[0] = chirp[0].conj();
        for j in 1..n {
            b[j] = chirp[j].conj();
            b[l - j] = chirp[j].conj();
        }
        inner.forward(&mut b);
        Self { n, kind: PlanKind::Bluestein { chirp, chirp_fft: b, inner, l } }
    }

    /// Unnormalized forward transform, in place.
    pub(crate) fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        match &self.kind {
            PlanKind::Radix2 { twiddles } => fft_pow2(buf, twiddles),
            PlanKind::Bluestein { chirp, chirp_fft, inner, l } => {
                let mut work = vec![C64::new(0.0, 0.0); *l];
                for j in 0..self.n {
                    work[j] = buf[j] * chirp[j];
                }
                inner.forward(&mut work);
                for (w, q) in work.iter_mut().zip(chirp_fft.iter()) {
                    *w *= *q;
                }
                inner.inverse(&mut work);
                for k in 0..self.n {
                    buf[k] = work[k] * chirp[k];
                }
            }
        }
    }

    /// Inverse transform, in place, scaled by `1/n`.
    pub(crate) fn inverse(&self, buf: &mut [C64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v = v.conj() * scale;
        }
    }
}

/// Row/column plans for one canvas size, shared across the transforms of a
/// solve so twiddle tables are built once.
pub(crate) struct CanvasFft {
    height: usize,
    width: usize,
    row: FftPlan,
    col: FftPlan,
}

impl CanvasFft {
    pub(crate) fn new(height: usize, width: usize) -> Self {
        Self { height, width, row: FftPlan::new(width), col: FftPlan::new(height) }
    }

    pub(crate) fn height(&self) -> usize {
        self.height
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Unnormalized 2D forward transform, in place, row-major.
    pub(crate) fn forward_inplace(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.pixels());
        for r in 0..self.height {
            self.row.forward(&mut buf[r * self.width..(r + 1) * self.width]);
        }
        if self.height > 1 {
            let mut column = vec![C64::new(0.0, 0.0); self.height];
            for c in 0..self.width {
                for r in 0..self.height {
                    column[r] = buf[r * self.width + c];
                }
                self.col.forward(&mut column);
                for r in 0..self.height {
                    buf[r * self.width + c] = column[r];
                }
            }
        }
    }

    /// Inverse 2D transform, in place, scaled by `1/(height*width)`.
    pub(crate) fn inverse_inplace(&self, buf: &mut [C64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward_inplace(buf);
        let scale = 1.0 / self.pixels() as f64;
        for v in buf.iter_mut() {
            *v = v.conj() * scale;
        }
    }

    pub(crate) fn forward_real(&self, data: &[f64]) -> Vec<C64> {
        debug_assert_eq!(data.len(), self.pixels());
        let mut buf: Vec<C64> = data.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_inplace(&mut buf);
        buf
    }

    /// Inverse transform of the spectrum of a real signal; keeps real parts.
    pub(crate) fn inverse_real(&self, spectrum: &[C64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse_inplace(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }
}
