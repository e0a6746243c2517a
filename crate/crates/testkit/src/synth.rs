//! Deterministic synthetic scenes: images built by stamping known motifs
//! at sparse locations, with per-pixel labels at motif centers. Placement
//! never wraps, so every scene is exactly representable by top-left
//! anchored circular convolution on a padded canvas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unit-L2 vertical ridge: one bright column through the patch.
pub fn ridge_motif(side: usize) -> Vec<f64> {
    let mut m = vec![0.0; side * side];
    let mid = side / 2;
    for r in 0..side {
        m[r * side + mid] = 1.0;
    }
    normalize(&mut m);
    m
}

/// Unit-L2 horizontal bar.
pub fn bar_motif(side: usize) -> Vec<f64> {
    let mut m = vec![0.0; side * side];
    let mid = side / 2;
    for c in 0..side {
        m[mid * side + c] = 1.0;
    }
    normalize(&mut m);
    m
}

/// Unit-L2 blob: radially decaying mass around the patch center.
pub fn blob_motif(side: usize) -> Vec<f64> {
    let mut m = vec![0.0; side * side];
    let mid = (side as f64 - 1.0) / 2.0;
    for r in 0..side {
        for c in 0..side {
            let dr = r as f64 - mid;
            let dc = c as f64 - mid;
            m[r * side + c] = (-(dr * dr + dc * dc) / 1.2).exp();
        }
    }
    normalize(&mut m);
    m
}

/// Unit-L2 diagonal stroke.
pub fn diagonal_motif(side: usize) -> Vec<f64> {
    let mut m = vec![0.0; side * side];
    for i in 0..side {
        m[i * side + i] = 1.0;
    }
    normalize(&mut m);
    m
}

fn normalize(m: &mut [f64]) {
    let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in m.iter_mut() {
            *v /= norm;
        }
    }
}

/// Adds `motif` (side x side) at top-left position `(r, c)`. The caller
/// guarantees the placement stays inside the raster.
pub fn stamp(pixels: &mut [f64], width: usize, motif: &[f64], side: usize, r: usize, c: usize) {
    for i in 0..side {
        for j in 0..side {
            pixels[(r + i) * width + c + j] += motif[i * side + j];
        }
    }
}

/// Image built from independent Bernoulli spike maps per filter: each
/// interior top-left position carries a motif with probability `prob`.
/// Returns the image and, per filter, the spike positions used.
pub fn spike_scene(
    seed: u64,
    height: usize,
    width: usize,
    motifs: &[Vec<f64>],
    side: usize,
    prob: f64,
) -> (Vec<f64>, Vec<Vec<(usize, usize)>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = vec![0.0; height * width];
    let mut placements = Vec::with_capacity(motifs.len());
    for motif in motifs {
        let mut spots = Vec::new();
        for r in 0..height.saturating_sub(side - 1) {
            for c in 0..width.saturating_sub(side - 1) {
                if rng.gen_range(0.0..1.0) < prob {
                    stamp(&mut pixels, width, motif, side, r, c);
                    spots.push((r, c));
                }
            }
        }
        placements.push(spots);
    }
    (pixels, placements)
}

/// A labelled two-texture scene: `n_pos` instances of `pos_motif` and
/// `n_neg` of `neg_motif` at separated positions. Labels are +1 at the
/// center pixel of each positive motif, -1 at each negative center, 0
/// elsewhere.
pub struct LabelledScene {
    pub pixels: Vec<f64>,
    pub labels: Vec<i8>,
}

#[allow(clippy::too_many_arguments)]
pub fn two_texture_scene(
    seed: u64,
    height: usize,
    width: usize,
    pos_motif: &[f64],
    neg_motif: &[f64],
    side: usize,
    n_pos: usize,
    n_neg: usize,
    min_separation: usize,
) -> LabelledScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = vec![0.0; height * width];
    let mut labels = vec![0i8; height * width];
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let place = |rng: &mut ChaCha8Rng,
                     taken: &mut Vec<(usize, usize)>,
                     pixels: &mut [f64],
                     labels: &mut [i8],
                     motif: &[f64],
                     label: i8| {
        for _ in 0..4000 {
            let r = rng.gen_range(0..height - side + 1);
            let c = rng.gen_range(0..width - side + 1);
            let ok = taken.iter().all(|&(tr, tc)| {
                let dr = tr.abs_diff(r);
                let dc = tc.abs_diff(c);
                dr.max(dc) >= min_separation
            });
            if ok {
                stamp(pixels, width, motif, side, r, c);
                labels[(r + side / 2) * width + c + side / 2] = label;
                taken.push((r, c));
                return;
            }
        }
        panic!("could not place motif; scene too crowded");
    };
    for _ in 0..n_pos {
        place(&mut rng, &mut taken, &mut pixels, &mut labels, pos_motif, 1);
    }
    for _ in 0..n_neg {
        place(&mut rng, &mut taken, &mut pixels, &mut labels, neg_motif, -1);
    }
    LabelledScene { pixels, labels }
}

/// One motif species in a composite scene.
pub struct MotifSpec<'a> {
    pub motif: &'a [f64],
    pub side: usize,
    pub count: usize,
    /// Label stamped at each instance center: +1, -1, or 0 for none.
    pub label: i8,
    pub amplitude: f64,
    /// Per-instance multiplicative appearance jitter: each motif pixel
    /// is scaled by `1 + uniform(-jitter, jitter)`.
    pub jitter: f64,
}

/// Scene with several motif species at separated positions, labels at
/// the center pixel of labelled species, plus uniform pixel noise of
/// amplitude `pixel_noise`.
pub fn multi_motif_scene(
    seed: u64,
    height: usize,
    width: usize,
    species: &[MotifSpec<'_>],
    min_separation: usize,
    pixel_noise: f64,
) -> LabelledScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = vec![0.0; height * width];
    let mut labels = vec![0i8; height * width];
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for spec in species {
        for _ in 0..spec.count {
            let mut placed = false;
            for _ in 0..4000 {
                let r = rng.gen_range(0..height - spec.side + 1);
                let c = rng.gen_range(0..width - spec.side + 1);
                let ok = taken.iter().all(|&(tr, tc)| {
                    tr.abs_diff(r).max(tc.abs_diff(c)) >= min_separation
                });
                if ok {
                    let scaled: Vec<f64> = spec
                        .motif
                        .iter()
                        .map(|v| {
                            let warp = 1.0 + rng.gen_range(-spec.jitter..=spec.jitter);
                            v * spec.amplitude * warp
                        })
                        .collect();
                    stamp(&mut pixels, width, &scaled, spec.side, r, c);
                    if spec.label != 0 {
                        labels[(r + spec.side / 2) * width + c + spec.side / 2] = spec.label;
                    }
                    taken.push((r, c));
                    placed = true;
                    break;
                }
            }
            assert!(placed, "could not place motif; scene too crowded");
        }
    }
    if pixel_noise > 0.0 {
        for v in pixels.iter_mut() {
            *v += rng.gen_range(-pixel_noise..=pixel_noise);
        }
    }
    LabelledScene { pixels, labels }
}

/// Average precision straight from its definition: sort by descending
/// score with negatives winning ties, then average precision-at-rank over
/// the positive ranks.
pub fn average_precision_reference(entries: &[(f64, i8)]) -> f64 {
    let mut sorted: Vec<(f64, i8)> = entries.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let positives = sorted.iter().filter(|e| e.1 > 0).count();
    assert!(positives > 0);
    let mut seen_pos = 0usize;
    let mut acc = 0.0;
    for (rank0, &(_, label)) in sorted.iter().enumerate() {
        if label > 0 {
            seen_pos += 1;
            acc += seen_pos as f64 / (rank0 + 1) as f64;
        }
    }
    acc / positives as f64
}
