//! Scalar math helpers routed through `libm` so the crate stays `no_std`
//! and produces identical results in hosted and freestanding builds.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn log1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// Numerically stable `log(1 + e^t)`.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + log1p(exp(-t))
    } else {
        log1p(exp(t))
    }
}

/// Numerically stable logistic function `1 / (1 + e^{-t})`.
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + exp(-t))
    } else {
        let e = exp(t);
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for i in -40..40 {
            let t = i as f64 * 0.5;
            let naive = (1.0 + t.exp()).ln();
            assert!((softplus(t) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn softplus_survives_extremes() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0);
        assert!(softplus(-800.0) < 1e-300);
    }

    #[test]
    fn sigmoid_is_symmetric() {
        for i in -20..20 {
            let t = i as f64 * 0.7;
            assert!((sigmoid(t) + sigmoid(-t) - 1.0).abs() < 1e-15);
        }
    }
}
