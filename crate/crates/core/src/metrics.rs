//! Evaluation metrics: PSNR over a pixel region and average precision
//! over a ranked score list.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image2D;
use crate::math;

/// Scored, labelled entries awaiting ranking. Labels are +1/-1 and at
/// least one positive must be present.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedScores {
    entries: Vec<(f64, i8)>,
}

impl RankedScores {
    pub fn new(entries: Vec<(f64, i8)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("score list is empty".into()));
        }
        if let Some((s, l)) = entries.iter().find(|(s, l)| !s.is_finite() || (*l != 1 && *l != -1))
        {
            return Err(Error::InvalidParameter(format!(
                "bad ranked entry (score {s}, label {l})"
            )));
        }
        if !entries.iter().any(|&(_, l)| l == 1) {
            return Err(Error::InvalidParameter("no positive entries to rank".into()));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|&&(_, l)| l == 1).count()
    }
}

/// Average precision: mean of precision-at-rank over the ranks of the
/// positives, sorted by descending score. Ties rank negatives first, so
/// the reported value is a deterministic lower bound.
pub fn average_precision(scores: &RankedScores) -> f64 {
    let mut sorted = scores.entries.clone();
    sorted.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).expect("scores are finite").then(a.1.cmp(&b.1))
    });
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (rank0, &(_, label)) in sorted.iter().enumerate() {
        if label == 1 {
            hits += 1;
            acc += hits as f64 / (rank0 + 1) as f64;
        }
    }
    acc / hits as f64
}

/// `10 log10(peak^2 / MSE)` with the mean squared error taken over the
/// pixels where `region` is 1. Exact agreement returns `f64::INFINITY`.
pub fn psnr(reference: &Image2D, estimate: &Image2D, region: &Image2D, peak: f64) -> Result<f64> {
    if !reference.same_dims(estimate) || !reference.same_dims(region) {
        return Err(Error::InvalidDimension("psnr inputs must share dimensions".into()));
    }
    if !region.is_binary() {
        return Err(Error::InvalidParameter("psnr region must be 0/1 valued".into()));
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("peak must be positive, got {peak}")));
    }
    let mut count = 0usize;
    let mut sum_sq = 0.0;
    for ((&r, &e), &m) in reference
        .as_slice()
        .iter()
        .zip(estimate.as_slice())
        .zip(region.as_slice())
    {
        if m != 0.0 {
            let d = r - e;
            sum_sq += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidParameter("psnr region is empty".into()));
    }
    let mse = sum_sq / count as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * math::log10(peak * peak / mse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use scsc_testkit::synth::average_precision_reference;

    #[test]
    fn psnr_identical_images_is_infinite() {
        let img = Image2D::from_fn(4, 4, |r, c| (r + c) as f64 / 8.0);
        let region = Image2D::ones(4, 4);
        assert_eq!(psnr(&img, &img, &region, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_constant_offset_is_twenty_db() {
        let a = Image2D::from_fn(5, 5, |r, c| (r * 5 + c) as f64 / 50.0);
        let b = Image2D::from_fn(5, 5, |r, c| (r * 5 + c) as f64 / 50.0 + 0.1);
        let region = Image2D::ones(5, 5);
        let v = psnr(&a, &b, &region, 1.0).unwrap();
        assert!((v - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_mse_equal_peak_squared_is_zero_db() {
        let a = Image2D::zeros(3, 3);
        let b = Image2D::from_fn(3, 3, |_, _| 2.0);
        let region = Image2D::ones(3, 3);
        let v = psnr(&a, &b, &region, 2.0).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn psnr_rejects_empty_region() {
        let a = Image2D::zeros(2, 2);
        let region = Image2D::zeros(2, 2);
        assert!(matches!(
            psnr(&a, &a, &region, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn psnr_is_symmetric_in_error_and_strictly_decreasing() {
        let a = Image2D::from_fn(4, 4, |_, _| 0.5);
        let region = Image2D::ones(4, 4);
        let plus = Image2D::from_fn(4, 4, |_, _| 0.5 + 0.07);
        let minus = Image2D::from_fn(4, 4, |_, _| 0.5 - 0.07);
        let p1 = psnr(&a, &plus, &region, 1.0).unwrap();
        let p2 = psnr(&a, &minus, &region, 1.0).unwrap();
        assert!((p1 - p2).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for mag in [0.01, 0.02, 0.05, 0.1, 0.3] {
            let e = Image2D::from_fn(4, 4, |_, _| 0.5 + mag);
            let v = psnr(&a, &e, &region, 1.0).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn ap_perfect_ranking_is_one() {
        let s = RankedScores::new(vec![(0.9, 1), (0.8, 1), (0.3, -1), (0.1, -1)]).unwrap();
        assert_eq!(average_precision(&s), 1.0);
    }

    #[test]
    fn ap_single_positive_at_rank_r() {
        // Positive scored below three negatives: rank 4 of 5 entries.
        let s = RankedScores::new(vec![(0.9, -1), (0.8, -1), (0.7, -1), (0.5, 1), (0.1, -1)])
            .unwrap();
        assert!((average_precision(&s) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ap_matches_reference_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let n = rng.gen_range(1..12usize);
            let mut entries: Vec<(f64, i8)> = (0..n)
                .map(|_| {
                    // Coarse grid scores so ties actually occur.
                    let s = (rng.gen_range(0..5) as f64) / 4.0;
                    let l = if rng.gen_range(0.0..1.0) < 0.4 { 1 } else { -1 };
                    (s, l)
                })
                .collect();
            entries.push((0.5, 1));
            let s = RankedScores::new(entries.clone()).unwrap();
            let got = average_precision(&s);
            let want = average_precision_reference(&entries);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn ap_rejects_all_negative_lists() {
        assert!(RankedScores::new(vec![(0.5, -1)]).is_err());
        assert!(RankedScores::new(vec![]).is_err());
    }

    #[test]
    fn ap_invariant_under_monotone_score_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..50 {
            let n = rng.gen_range(2..10usize);
            let mut entries: Vec<(f64, i8)> = (0..n)
                .map(|_| {
                    (rng.gen_range(-1.0..1.0), if rng.gen_range(0.0..1.0) < 0.5 { 1 } else { -1 })
                })
                .collect();
            entries.push((0.0, 1));
            let base = average_precision(&RankedScores::new(entries.clone()).unwrap());
            let warped: Vec<(f64, i8)> =
                entries.iter().map(|&(s, l)| (s.exp() * 3.0 + 1.0, l)).collect();
            let after = average_precision(&RankedScores::new(warped).unwrap());
            assert_eq!(base, after);
        }
    }

    #[test]
    fn ap_lower_bound_worst_case_ranking() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(2..12usize);
            let p = rng.gen_range(1..=n);
            let entries: Vec<(f64, i8)> = (0..n)
                .map(|i| (rng.gen_range(-1.0..1.0), if i < p { 1 } else { -1 }))
                .collect();
            let ap = average_precision(&RankedScores::new(entries).unwrap());
            // Worst case: every positive ranked after every negative.
            let worst: f64 = (1..=p)
                .map(|i| i as f64 / (n - p + i) as f64)
                .sum::<f64>()
                / p as f64;
            assert!(ap >= worst - 1e-12);
        }
    }
}
