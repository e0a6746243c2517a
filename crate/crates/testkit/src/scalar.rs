//! One-dimensional searches used as oracles for proximal operators and
//! scalar optimality conditions.

/// Golden-section search for the minimizer of a unimodal function on
/// `[lo, hi]`. Returns the abscissa of the minimum.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search followed by one parabolic-fit refinement, for
/// smooth objectives where plain golden section stalls at its
/// `sqrt(epsilon)` comparison floor.
pub fn golden_section_min_smooth(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let x0 = golden_section_min(&f, lo, hi, 1e-9);
    let h = 1e-4 * (1.0 + x0.abs());
    let (fm, f0, fp) = (f(x0 - h), f(x0), f(x0 + h));
    let denom = fm - 2.0 * f0 + fp;
    if denom <= 0.0 {
        return x0;
    }
    x0 + 0.5 * h * (fm - fp) / denom
}

/// Bisection for a root of a monotone increasing function on `[lo, hi]`.
/// Panics if the endpoints do not bracket a sign change.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo);
    let fhi = f(hi);
    assert!(flo <= 0.0 && fhi >= 0.0, "root not bracketed: f({lo})={flo}, f({hi})={fhi}");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central finite-difference gradient of a multivariate function.
pub fn finite_difference_grad(f: impl Fn(&[f64]) -> f64, point: &[f64], step: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(point.len());
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = f(&probe);
        probe[i] = orig - step;
        let fm = f(&probe);
        probe[i] = orig;
        grad.push((fp - fm) / (2.0 * step));
    }
    grad
}
