use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `n` in the given base.
pub fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while n > 0 {
        value += (n % base) as f64 * scale;
        n /= base;
        scale *= inv;
    }
    value
}

/// Halton point number `i` (0-based, skipping the origin), mapped to `[-1,1]^m`.
pub fn halton_point(i: usize, m: usize) -> Vec<f64> {
    assert!(m <= PRIMES.len(), "Halton points are defined for m <= {}", PRIMES.len());
    PRIMES[..m]
        .iter()
        .map(|&b| 2.0 * radical_inverse(i as u64 + 1, b) - 1.0)
        .collect()
}

/// Uniform sample number `i` on `[-1,1]^m`. Each index owns a ChaCha stream,
/// so sample `i` does not depend on how many samples are drawn.
pub fn mc_point(i: usize, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    (0..m).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_by_hand() {
        assert_eq!(halton_point(0, 2), vec![0.0, 2.0 / 3.0 - 1.0]);
        assert_eq!(halton_point(2, 1), vec![0.5]);
        assert_eq!(radical_inverse(6, 2), 0.375);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-16);
    }

    #[test]
    fn points_are_strictly_interior() {
        for i in 0..2000 {
            for c in halton_point(i, 16) {
                assert!(c > -1.0 && c < 1.0);
            }
            for c in mc_point(i, 6, 9) {
                assert!((-1.0..1.0).contains(&c));
            }
        }
    }

    #[test]
    fn mc_is_reproducible_and_seed_dependent() {
        assert_eq!(mc_point(17, 4, 3), mc_point(17, 4, 3));
        assert_ne!(mc_point(17, 4, 3), mc_point(17, 4, 4));
        assert_ne!(mc_point(17, 4, 3), mc_point(18, 4, 3));
    }
}
