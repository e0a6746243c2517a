//! Proximal operators for the four split functions: the masked quadratic
//! data term, the L1 sparsity term, the support-constrained unit-ball
//! indicator, and the logistic loss (solved by safeguarded Newton).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::math;

/// Settings for prox evaluations inside the ADMM loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxConfig {
    /// ADMM penalty used when assembling per-block prox calls.
    pub rho: f64,
    /// Stationarity tolerance for the logistic prox.
    pub newton_tol: f64,
    /// Newton iterations before falling back to bisection.
    pub newton_max_iter: usize,
}

impl Default for ProxConfig {
    fn default() -> Self {
        Self { rho: 1.0, newton_tol: 1e-10, newton_max_iter: 50 }
    }
}

impl ProxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "newton_tol must be positive, got {}",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "newton_max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Elementwise soft-thresholding, the prox of `tau * ||.||_1`.
pub fn prox_l1(q: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(q.iter().map(|&v| soft_threshold(v, tau)).collect())
}

/// Prox of the masked data term `0.5 ||x - M v||^2` with penalty `rho`:
/// observed pixels blend toward the measurement, gated pixels pass through.
pub fn prox_data(q: &Image2D, x: &Image2D, mask: &Image2D, rho: f64) -> Result<Image2D> {
    if !q.same_dims(x) || !q.same_dims(mask) {
        return Err(Error::InvalidDimension(
            "data prox inputs must share dimensions".into(),
        ));
    }
    if !mask.is_binary() {
        return Err(Error::InvalidParameter("mask must be 0/1 valued".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let mut out = q.clone();
    data_prox_inplace(out.as_mut_slice(), x.as_slice(), mask.as_slice(), rho);
    Ok(out)
}

pub(crate) fn data_prox_inplace(q: &mut [f64], x: &[f64], mask: &[f64], rho: f64) {
    let blend = 1.0 / (1.0 + rho);
    for ((qv, &xv), &mv) in q.iter_mut().zip(x.iter()).zip(mask.iter()) {
        if mv != 0.0 {
            *qv = (xv + rho * *qv) * blend;
        }
    }
}

/// Projection onto `{v : v vanishes outside the top-left side x side
/// block and ||v||_2 <= 1}`: crop, then radially scale if needed.
pub fn prox_unitball(q: &Image2D, side: usize) -> Result<Image2D> {
    if side == 0 || side > q.height() || side > q.width() {
        return Err(Error::InvalidDimension(format!(
            "support side {side} does not fit a {}x{} canvas",
            q.height(),
            q.width()
        )));
    }
    let mut out = Image2D::zeros(q.height(), q.width());
    unit_ball_project(
        q.as_slice(),
        out.as_mut_slice(),
        q.width(),
        q.height(),
        side,
    );
    Ok(out)
}

pub(crate) fn unit_ball_project(
    src: &[f64],
    dst: &mut [f64],
    width: usize,
    height: usize,
    side: usize,
) {
    debug_assert!(side <= height && side <= width);
    for v in dst.iter_mut() {
        *v = 0.0;
    }
    for r in 0..side {
        for c in 0..side {
            dst[r * width + c] = src[r * width + c];
        }
    }
    // Rescale until the block norm is <= 1 exactly, so projecting an
    // already projected point is a no-op.
    for _ in 0..8 {
        let mut sq = 0.0;
        for r in 0..side {
            for c in 0..side {
                let v = dst[r * width + c];
                sq += v * v;
            }
        }
        if sq <= 1.0 {
            break;
        }
        let scale = 1.0 / math::sqrt(sq);
        for r in 0..side {
            for c in 0..side {
                dst[r * width + c] *= scale;
            }
        }
    }
}

/// Prox of `gamma * log(1 + e^{-label (v + bias)})` with penalty `rho`:
/// the unique stationary point of a strictly convex scalar objective,
/// found by Newton iteration bracketed by interval doubling, with
/// bisection as the fallback.
pub fn prox_logistic(
    q: f64,
    label: i8,
    bias: f64,
    gamma: f64,
    rho: f64,
    cfg: &ProxConfig,
) -> Result<f64> {
    if label != 1 && label != -1 {
        return Err(Error::InvalidParameter(format!("label must be +1 or -1, got {label}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    cfg.validate()?;
    if gamma == 0.0 {
        return Ok(q);
    }
    let y = label as f64;
    // g'(v) = -gamma y sigma(-y (v + bias)) + rho (v - q), strictly increasing.
    let deriv = |v: f64| -> f64 { -gamma * y * math::sigmoid(-y * (v + bias)) + rho * (v - q) };

    // Bracket the root by doubling away from q. The loss gradient is
    // bounded by gamma, so |v* - q| <= gamma / rho.
    let reach = gamma / rho + 1.0;
    let (mut lo, mut hi) = if deriv(q) >= 0.0 { (q - reach, q) } else { (q, q + reach) };
    let mut width = reach;
    let mut guard = 0;
    while deriv(lo) > 0.0 {
        width *= 2.0;
        lo -= width;
        guard += 1;
        if guard > 200 || !lo.is_finite() {
            return Err(Error::NumericalDivergence(
                "logistic prox failed to bracket its stationary point".into(),
            ));
        }
    }
    guard = 0;
    while deriv(hi) < 0.0 {
        width *= 2.0;
        hi += width;
        guard += 1;
        if guard > 200 || !hi.is_finite() {
            return Err(Error::NumericalDivergence(
                "logistic prox failed to bracket its stationary point".into(),
            ));
        }
    }

    // Newton from q, constrained to the bracket.
    let mut v = q.clamp(lo, hi);
    for _ in 0..cfg.newton_max_iter {
        let g = deriv(v);
        if g.abs() < cfg.newton_tol {
            return Ok(v);
        }
        if g > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let s = math::sigmoid(-y * (v + bias));
        let h = gamma * s * (1.0 - s) + rho;
        let next = v - g / h;
        if !next.is_finite() || next <= lo || next >= hi {
            break;
        }
        v = next;
    }

    // Bisection on the maintained bracket.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = deriv(mid);
        if g.abs() < cfg.newton_tol || hi - lo < f64::EPSILON * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if g > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NumericalDivergence(
        "logistic prox bisection exhausted its iteration budget".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use scsc_testkit::scalar::{bisect_root, golden_section_min, golden_section_min_smooth};

    fn softplus(t: f64) -> f64 {
        crate::math::softplus(t)
    }

    #[test]
    fn l1_shrinks_above_threshold() {
        assert_eq!(prox_l1(&[2.0], 0.5).unwrap()[0], 1.5);
        assert_eq!(prox_l1(&[-0.3], 0.5).unwrap()[0], 0.0);
        assert_eq!(prox_l1(&[-2.0], 0.5).unwrap()[0], -1.5);
    }

    #[test]
    fn l1_rejects_negative_threshold() {
        assert!(matches!(prox_l1(&[1.0], -0.1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn l1_matches_golden_section_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tau = 0.7;
        for _ in 0..200 {
            let q: f64 = rng.gen_range(-3.0..3.0);
            let got = prox_l1(&[q], tau).unwrap()[0];
            let want =
                golden_section_min(|v| tau * v.abs() + 0.5 * (v - q) * (v - q), -5.0, 5.0, 1e-9);
            assert!((got - want).abs() < 1e-6, "q={q}: {got} vs {want}");
        }
    }

    #[test]
    fn l1_is_a_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let q1: f64 = rng.gen_range(-4.0..4.0);
            let q2: f64 = rng.gen_range(-4.0..4.0);
            let tau: f64 = rng.gen_range(0.0..2.0);
            let p1 = prox_l1(&[q1], tau).unwrap()[0];
            let p2 = prox_l1(&[q2], tau).unwrap()[0];
            assert!((p1 - p2).abs() <= (q1 - q2).abs() + 1e-15);
        }
    }

    #[test]
    fn data_prox_closed_forms() {
        let x = Image2D::from_fn(1, 1, |_, _| 1.0);
        let q = Image2D::zeros(1, 1);
        let mask = Image2D::ones(1, 1);
        let out = prox_data(&q, &x, &mask, 1.0).unwrap();
        assert!((out.get(0, 0) - 0.5).abs() < 1e-15);

        let gated = Image2D::zeros(1, 1);
        let q2 = Image2D::from_fn(1, 1, |_, _| 0.73);
        let out2 = prox_data(&q2, &x, &gated, 1.0).unwrap();
        assert_eq!(out2.get(0, 0), 0.73);
    }

    #[test]
    fn data_prox_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = 2.0;
        for _ in 0..200 {
            let xv: f64 = rng.gen_range(0.0..1.0);
            let qv: f64 = rng.gen_range(-1.0..2.0);
            let x = Image2D::from_fn(1, 1, |_, _| xv);
            let q = Image2D::from_fn(1, 1, |_, _| qv);
            let mask = Image2D::ones(1, 1);
            let got = prox_data(&q, &x, &mask, rho).unwrap().get(0, 0);
            let want = golden_section_min_smooth(
                |v| 0.5 * (xv - v) * (xv - v) + 0.5 * rho * (v - qv) * (v - qv),
                -4.0,
                4.0,
            );
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn data_prox_rejects_non_binary_mask() {
        let x = Image2D::ones(2, 2);
        let mask = Image2D::from_fn(2, 2, |_, _| 0.5);
        assert!(matches!(
            prox_data(&x, &x, &mask, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn unit_ball_keeps_interior_points() {
        let q = pad_filter_for_test(&[0.3, 0.0, 0.0, 0.4], 2, 5, 5);
        let out = prox_unitball(&q, 2).unwrap();
        assert_eq!(out, q);
    }

    #[test]
    fn unit_ball_scales_exterior_points_radially() {
        let q = pad_filter_for_test(&[1.2, 0.0, 0.0, 1.6], 2, 5, 5);
        let out = prox_unitball(&q, 2).unwrap();
        let norm: f64 = out.as_slice().iter().map(|v| v * v).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
        // Direction preserved: entries stay proportional (1.2, 1.6) -> (0.6, 0.8).
        assert!((out.get(0, 0) - 0.6).abs() < 1e-12);
        assert!((out.get(1, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn unit_ball_zeroes_outside_support() {
        let mut q = Image2D::zeros(5, 5);
        q.set(0, 0, 0.5);
        q.set(4, 4, 9.0);
        q.set(0, 3, -2.0);
        let out = prox_unitball(&q, 2).unwrap();
        assert_eq!(out.get(4, 4), 0.0);
        assert_eq!(out.get(0, 3), 0.0);
        assert_eq!(out.get(0, 0), 0.5);
    }

    #[test]
    fn unit_ball_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let q = Image2D::from_fn(6, 6, |_, _| rng.gen_range(-2.0..2.0));
            let once = prox_unitball(&q, 3).unwrap();
            let twice = prox_unitball(&once, 3).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn unit_ball_is_the_nearest_feasible_point() {
        // Any feasible v decomposes over (support block, elsewhere); the
        // projection minimizes both parts independently, so random feasible
        // candidates can never beat it.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = Image2D::from_fn(5, 5, |_, _| rng.gen_range(-1.5..1.5));
        let proj = prox_unitball(&q, 2).unwrap();
        let dist = |v: &Image2D| -> f64 {
            v.as_slice().iter().zip(q.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let best = dist(&proj);
        for _ in 0..500 {
            let mut cand = Image2D::zeros(5, 5);
            let mut sq = 0.0;
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for v in raw.iter() {
                sq += v * v;
            }
            let scale = if sq > 1.0 { 1.0 / sq.sqrt() } else { 1.0 };
            cand.set(0, 0, raw[0] * scale);
            cand.set(0, 1, raw[1] * scale);
            cand.set(1, 0, raw[2] * scale);
            cand.set(1, 1, raw[3] * scale);
            assert!(dist(&cand) >= best - 1e-9);
        }
    }

    #[test]
    fn logistic_prox_gamma_zero_is_identity() {
        let cfg = ProxConfig::default();
        for q in [-3.0, 0.0, 1.7, 42.0] {
            assert_eq!(prox_logistic(q, 1, 0.4, 0.0, 1.0, &cfg).unwrap(), q);
            assert_eq!(prox_logistic(q, -1, -0.2, 0.0, 2.0, &cfg).unwrap(), q);
        }
    }

    #[test]
    fn logistic_prox_saturated_loss_barely_moves() {
        let cfg = ProxConfig::default();
        let v = prox_logistic(50.0, 1, 0.0, 1.0, 1.0, &cfg).unwrap();
        assert!(v > 49.99 && v <= 50.0, "got {v}");
    }

    #[test]
    fn logistic_prox_matches_bisection_oracle() {
        let cfg = ProxConfig::default();
        let got = prox_logistic(0.0, 1, 0.0, 1.0, 1.0, &cfg).unwrap();
        let want = bisect_root(
            |v| -crate::math::sigmoid(-v) + v,
            -10.0,
            10.0,
            1e-12,
        );
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn logistic_prox_matches_oracle_on_random_draws() {
        let cfg = ProxConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let q: f64 = rng.gen_range(-4.0..4.0);
            let label: i8 = if rng.gen_range(0.0..1.0) < 0.5 { 1 } else { -1 };
            let bias: f64 = rng.gen_range(-1.0..1.0);
            let gamma: f64 = rng.gen_range(0.01..5.0);
            let rho: f64 = rng.gen_range(0.2..3.0);
            let got = prox_logistic(q, label, bias, gamma, rho, &cfg).unwrap();
            let y = label as f64;
            let reach = gamma / rho + 1.0;
            let want = bisect_root(
                |v| -gamma * y * crate::math::sigmoid(-y * (v + bias)) + rho * (v - q),
                q - reach,
                q + reach,
                1e-13,
            );
            assert!((got - want).abs() < 1e-7, "q={q} gamma={gamma}: {got} vs {want}");
        }
    }

    #[test]
    fn logistic_prox_is_monotone_in_q() {
        let cfg = ProxConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let q1: f64 = rng.gen_range(-3.0..3.0);
            let q2: f64 = rng.gen_range(-3.0..3.0);
            let (qa, qb) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
            let va = prox_logistic(qa, -1, 0.3, 2.0, 0.7, &cfg).unwrap();
            let vb = prox_logistic(qb, -1, 0.3, 2.0, 0.7, &cfg).unwrap();
            assert!(va <= vb + 1e-9);
        }
    }

    #[test]
    fn prox_outputs_satisfy_perturbation_optimality() {
        let cfg = ProxConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        // Scalar objectives for l1, data, and logistic proxes; random small
        // perturbations never improve the objective.
        for _ in 0..40 {
            let q: f64 = rng.gen_range(-2.0..2.0);
            let tau = 0.6;
            let v = prox_l1(&[q], tau).unwrap()[0];
            let f = |t: f64| tau * t.abs() + 0.5 * (t - q) * (t - q);
            for _ in 0..25 {
                let d: f64 = rng.gen_range(-1e-2..1e-2);
                assert!(f(v + d) >= f(v) - 1e-9);
            }

            let xv: f64 = rng.gen_range(0.0..1.0);
            let rho = 1.3;
            let xi = Image2D::from_fn(1, 1, |_, _| xv);
            let qi = Image2D::from_fn(1, 1, |_, _| q);
            let m = Image2D::ones(1, 1);
            let vd = prox_data(&qi, &xi, &m, rho).unwrap().get(0, 0);
            let fd =
                |t: f64| 0.5 * (xv - t) * (xv - t) + 0.5 * rho * (t - q) * (t - q);
            for _ in 0..25 {
                let d: f64 = rng.gen_range(-1e-2..1e-2);
                assert!(fd(vd + d) >= fd(vd) - 1e-9);
            }

            let gamma = 1.8;
            let vl = prox_logistic(q, 1, 0.1, gamma, rho, &cfg).unwrap();
            let fl = |t: f64| gamma * softplus(-(t + 0.1)) + 0.5 * rho * (t - q) * (t - q);
            for _ in 0..25 {
                let d: f64 = rng.gen_range(-1e-2..1e-2);
                assert!(fl(vl + d) >= fl(vl) - 1e-9);
            }
        }
    }

    fn pad_filter_for_test(filter: &[f64], side: usize, h: usize, w: usize) -> Image2D {
        let mut img = Image2D::zeros(h, w);
        for r in 0..side {
            for c in 0..side {
                img.set(r, c, filter[r * side + c]);
            }
        }
        img
    }
}
