//! Seeding and uniform sampling in balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::C64;

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x005e_edc1_c1e5;

/// splitmix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-sample seed derived from a master seed and a sample index.
pub fn mix(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Independent stream for sample `index`.
pub fn sample_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(master, index))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the closed unit ball of `R^dim`: a Gaussian direction
/// scaled to radius `U^{1/dim}`.
pub fn uniform_real_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    assert!(dim > 0, "ball dimension must be positive");
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let radius = rng.random::<f64>().powf(1.0 / dim as f64);
        return g.into_iter().map(|x| x * radius / norm).collect();
    }
}

/// Uniform point in the unit ball of `C^n`, which is the real ball of
/// dimension `2n`.
pub fn uniform_complex_ball<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let x = uniform_real_ball(rng, 2 * n);
    x.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect()
}

pub fn complex_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(base: u32, mut index: u64) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % b) as f64 * factor;
        index /= b;
        factor *= inv;
    }
    value
}

/// Deterministic low-discrepancy points in the closed unit ball of `C^n`.
///
/// Halton coordinates are pushed through the inverse normal CDF to get a
/// direction, and one extra coordinate sets the radius. Dimensions beyond
/// the prime table reuse primes with a scrambled offset. The first point is
/// the origin.
pub fn quasi_complex_ball(n: usize, count: usize) -> Vec<Vec<C64>> {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::standard();
    let dim = 2 * n;
    let mut points = Vec::with_capacity(count);
    if count == 0 {
        return points;
    }
    points.push(vec![C64::new(0.0, 0.0); n]);
    for idx in 1..count as u64 {
        let coord = |j: usize| {
            let prime = PRIMES[j % PRIMES.len()];
            let shift = (j / PRIMES.len()) as u64 * 7919;
            radical_inverse(prime, idx + shift)
        };
        let g: Vec<f64> = (0..dim)
            .map(|j| normal.inverse_cdf(coord(j).clamp(1e-12, 1.0 - 1e-12)))
            .collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let radius = coord(dim).powf(1.0 / dim as f64);
        points.push(
            g.chunks_exact(2)
                .map(|p| C64::new(p[0], p[1]) * (radius / norm))
                .collect(),
        );
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_is_deterministic_and_spreads() {
        assert_eq!(mix(7, 3), mix(7, 3));
        assert_ne!(mix(7, 3), mix(7, 4));
        assert_ne!(mix(7, 3), mix(8, 3));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = rng_from_seed(1);
        for dim in [1, 2, 5, 18, 40] {
            for _ in 0..200 {
                let x = uniform_real_ball(&mut rng, dim);
                assert_eq!(x.len(), dim);
                assert!(x.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn radius_law_matches_volume() {
        // P(|x| <= 1/2) = 2^-dim
        let mut rng = rng_from_seed(2);
        let dim = 2;
        let n = 40_000;
        let inside = (0..n)
            .filter(|_| {
                let x = uniform_real_ball(&mut rng, dim);
                x.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.5
            })
            .count();
        let p = inside as f64 / n as f64;
        let se = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((p - 0.25).abs() < 5.0 * se, "p = {p}");
    }

    #[test]
    fn quasi_points_inside_ball() {
        let pts = quasi_complex_ball(3, 500);
        assert_eq!(pts.len(), 500);
        for p in &pts {
            assert!(complex_norm(p) <= 1.0 + 1e-12);
        }
        assert_eq!(complex_norm(&pts[0]), 0.0);
    }
}
