//! Random dropout masks for inpainting runs: exactly `round(fraction*D)`
//! pixels set to zero, positions drawn without replacement from a seeded
//! generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scsc_core::{Error, Image2D};

use crate::error::ToolResult;

pub fn make_dropout_mask(
    height: usize,
    width: usize,
    fraction: f64,
    seed: u64,
) -> ToolResult<Image2D> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "drop fraction must lie in [0, 1], got {fraction}"
        ))
        .into());
    }
    let total = height * width;
    let zeros = (fraction * total as f64).round() as usize;
    let mut mask = Image2D::ones(height, width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in rand::seq::index::sample(&mut rng, total, zeros).into_iter() {
        mask.as_mut_slice()[idx] = 0.0;
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fraction_keeps_everything() {
        let mask = make_dropout_mask(5, 4, 0.0, 9).unwrap();
        assert!(mask.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn half_fraction_drops_exactly_half() {
        let mask = make_dropout_mask(10, 10, 0.5, 3).unwrap();
        let zeros = mask.as_slice().iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, 50);
    }

    #[test]
    fn same_seed_same_mask() {
        let a = make_dropout_mask(8, 8, 0.3, 11).unwrap();
        let b = make_dropout_mask(8, 8, 0.3, 11).unwrap();
        assert_eq!(a, b);
        let c = make_dropout_mask(8, 8, 0.3, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn out_of_range_fraction_is_rejected() {
        assert!(make_dropout_mask(4, 4, 1.5, 0).is_err());
        assert!(make_dropout_mask(4, 4, -0.1, 0).is_err());
    }
}
