//! Per-frequency-bin linear algebra for the ADMM least-squares step:
//! rank-one and low-rank solves, the Woodbury block inverse used when
//! classifier rows join the stack, and a preconditioned conjugate
//! gradient fallback for partially labelled canvases.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::spectral::fft::C64;

/// Inverse of the `K x K` matrix `dhat dhat^H + w w^T + I`, where `dhat`
/// holds the filter spectra at one frequency bin. The shared real part
/// `w w^T + I` is inverted once in closed form and the rank-one spectrum
/// update is folded in by a second Sherman-Morrison step, so the whole
/// inverse costs `O(K^2)`.
pub fn woodbury_block_inverse(dhat: &[C64], weights: &[f64]) -> Vec<C64> {
    let k = dhat.len();
    assert_eq!(weights.len(), k, "weight vector length mismatch");
    // (w w^T + I)^-1 = I - w w^T / (1 + w'w)
    let wtw: f64 = weights.iter().map(|w| w * w).sum();
    let shrink = 1.0 / (1.0 + wtw);
    let mut base = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            base[i * k + j] = -weights[i] * weights[j] * shrink;
        }
        base[i * k + i] += 1.0;
    }
    // t = base * dhat, s = dhat^H base dhat (real, >= 0)
    let mut t = vec![C64::new(0.0, 0.0); k];
    for i in 0..k {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..k {
            acc += base[i * k + j] * dhat[j];
        }
        t[i] = acc;
    }
    let s: f64 = dhat.iter().zip(t.iter()).map(|(d, ti)| (d.conj() * ti).re).sum();
    let denom = 1.0 + s;
    let mut inv = vec![C64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            inv[i * k + j] = C64::new(base[i * k + j], 0.0) - t[i] * t[j].conj() / denom;
        }
    }
    inv
}

/// Solves `(I + C C^H) x = r` in place at one frequency bin, where `C` is
/// `K x N` column-major with `N` small (one column per convolution
/// output). Uses `x = r - C (I_N + C^H C)^{-1} C^H r`.
pub(crate) fn solve_identity_plus_gram(
    k: usize,
    columns: &[C64],
    n: usize,
    rhs: &mut [C64],
    gram: &mut [C64],
    beta: &mut [C64],
) {
    debug_assert_eq!(columns.len(), k * n);
    debug_assert_eq!(rhs.len(), k);
    if n == 1 {
        // Sherman-Morrison for a single rank-one update.
        let c = &columns[..k];
        let norm: f64 = c.iter().map(|v| v.norm_sqr()).sum();
        let dot: C64 = c.iter().zip(rhs.iter()).map(|(ci, ri)| ci.conj() * ri).sum();
        let scale = dot / (1.0 + norm);
        for (r, ci) in rhs.iter_mut().zip(c.iter()) {
            *r -= ci * scale;
        }
        return;
    }
    // gram = I_N + C^H C, beta = C^H r
    for a in 0..n {
        let ca = &columns[a * k..(a + 1) * k];
        let mut acc = C64::new(0.0, 0.0);
        for (ci, ri) in ca.iter().zip(rhs.iter()) {
            acc += ci.conj() * ri;
        }
        beta[a] = acc;
        for b in 0..n {
            let cb = &columns[b * k..(b + 1) * k];
            let mut g = C64::new(0.0, 0.0);
            for (ci, cj) in ca.iter().zip(cb.iter()) {
                g += ci.conj() * cj;
            }
            if a == b {
                g += 1.0;
            }
            gram[a * n + b] = g;
        }
    }
    solve_complex_in_place(n, gram, beta);
    for a in 0..n {
        let ca = &columns[a * k..(a + 1) * k];
        let ba = beta[a];
        for (r, ci) in rhs.iter_mut().zip(ca.iter()) {
            *r -= ci * ba;
        }
    }
}

/// Gaussian elimination with partial pivoting on a small complex system.
pub(crate) fn solve_complex_in_place(n: usize, a: &mut [C64], b: &mut [C64]) {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let mag = a[row * n + col].norm_sqr();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[row * n + j] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= a[row * n + j] * b[j];
        }
        b[row] = acc / a[row * n + row];
    }
}

/// Preconditioned conjugate gradient on a real symmetric positive
/// definite operator. Runs to a tight relative residual so callers can
/// treat the result as an exact least-squares solve.
pub(crate) fn pcg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>();
    let mut x = vec![0.0; b.len()];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let threshold = rel_tol * rel_tol * b_norm;
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(ap.iter()).map(|(a, b)| a * b).sum();
        if !pap.is_finite() || pap <= 0.0 {
            return Err(Error::NumericalDivergence(
                "conjugate gradient lost positive definiteness".into(),
            ));
        }
        let alpha = rz / pap;
        for ((xi, pi), (ri, api)) in
            x.iter_mut().zip(p.iter()).zip(r.iter_mut().zip(ap.iter()))
        {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let r_norm: f64 = r.iter().map(|v| v * v).sum();
        if r_norm <= threshold {
            return Ok(x);
        }
        z = precondition(&r);
        let rz_next: f64 = r.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(z.iter()) {
            *pi = zi + beta * *pi;
        }
    }
    // The operator is identity-plus-PSD, so stagnation this deep means
    // something upstream produced garbage.
    Err(Error::NumericalDivergence(
        "conjugate gradient failed to reach its tolerance".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use scsc_testkit::dense::{complex_inverse, complex_matmul};

    fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
    }

    fn assemble(dhat: &[C64], w: &[f64]) -> Vec<C64> {
        let k = dhat.len();
        let mut m = vec![C64::new(0.0, 0.0); k * k];
        for i in 0..k {
            for j in 0..k {
                m[i * k + j] = dhat[i] * dhat[j].conj() + w[i] * w[j];
            }
            m[i * k + i] += 1.0;
        }
        m
    }

    #[test]
    fn woodbury_scalar_case() {
        let d = C64::new(0.8, -0.6);
        let w = 1.5;
        let inv = woodbury_block_inverse(&[d], &[w]);
        let expected = 1.0 / (d.norm_sqr() + w * w + 1.0);
        assert!((inv[0].re - expected).abs() < 1e-14);
        assert!(inv[0].im.abs() < 1e-14);
    }

    #[test]
    fn woodbury_zero_weights_matches_gaussian_elimination() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for k in [1usize, 2, 3, 5] {
            let dhat: Vec<C64> = (0..k).map(|_| random_c64(&mut rng)).collect();
            let w = vec![0.0; k];
            let got = woodbury_block_inverse(&dhat, &w);
            let want = complex_inverse(k, &assemble(&dhat, &w));
            for (g, e) in got.iter().zip(want.iter()) {
                assert!((g - e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn woodbury_multiply_back_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &k in &[1usize, 2, 4, 8] {
            for _ in 0..100 {
                let dhat: Vec<C64> = (0..k).map(|_| random_c64(&mut rng)).collect();
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let inv = woodbury_block_inverse(&dhat, &w);
                let prod = complex_matmul(k, &inv, &assemble(&dhat, &w));
                for i in 0..k {
                    for j in 0..k {
                        let want = if i == j { 1.0 } else { 0.0 };
                        let err = (prod[i * k + j] - C64::new(want, 0.0)).norm();
                        assert!(err < 1e-10, "k={k} entry ({i},{j}) err {err}");
                    }
                }
            }
        }
    }

    #[test]
    fn gram_solve_matches_direct_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for (k, n) in [(3usize, 2usize), (4, 3), (2, 4)] {
            let columns: Vec<C64> = (0..k * n).map(|_| random_c64(&mut rng)).collect();
            let rhs: Vec<C64> = (0..k).map(|_| random_c64(&mut rng)).collect();
            // Direct: build I + C C^H and invert.
            let mut m = vec![C64::new(0.0, 0.0); k * k];
            for a in 0..n {
                for i in 0..k {
                    for j in 0..k {
                        m[i * k + j] += columns[a * k + i] * columns[a * k + j].conj();
                    }
                }
            }
            for i in 0..k {
                m[i * k + i] += 1.0;
            }
            let minv = complex_inverse(k, &m);
            let mut want = vec![C64::new(0.0, 0.0); k];
            for i in 0..k {
                for j in 0..k {
                    want[i] += minv[i * k + j] * rhs[j];
                }
            }
            let mut got = rhs.clone();
            let mut gram = vec![C64::new(0.0, 0.0); n * n];
            let mut beta = vec![C64::new(0.0, 0.0); n];
            solve_identity_plus_gram(k, &columns, n, &mut got, &mut gram, &mut beta);
            for (g, e) in got.iter().zip(want.iter()) {
                assert!((g - e).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn pcg_solves_diagonal_system() {
        let diag = [4.0, 2.0, 1.0, 0.5, 3.0];
        let b = [1.0, -2.0, 0.5, 4.0, 0.0];
        let x = pcg(
            |v| v.iter().zip(diag.iter()).map(|(vi, di)| vi * di).collect(),
            |v| v.to_vec(),
            &b,
            1e-13,
            100,
        )
        .unwrap();
        for i in 0..5 {
            assert!((x[i] - b[i] / diag[i]).abs() < 1e-10);
        }
    }
}
