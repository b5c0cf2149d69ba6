//! Deterministic sample generators: frequencies, lattice signals and scalar families.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lattice::LatticeSignal;
use crate::theta::TorusPoint;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of i in the given base.
pub fn halton(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// A seeded generator for one (purpose, dimension) stream.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fixed points where the inequalities tend to be tight: the origin, axis points at
/// 1/4 and 1/2, and the diagonal points at 1/4 and 1/2.
pub fn special_points(d: usize) -> Vec<Vec<f64>> {
    let axis = |v: f64| {
        let mut c = vec![0.0; d];
        c[0] = v;
        c
    };
    let mut pts = vec![vec![0.0; d], axis(0.25), axis(-0.5)];
    if d > 1 {
        pts.push(vec![0.25; d]);
        pts.push(vec![-0.5; d]);
    }
    pts
}

/// `count` frequencies in [-1/2, 1/2)^d: the special points first, then a randomly
/// shifted Halton sequence. Prefixes are stable when `count` grows.
pub fn xi_points(d: usize, count: usize, seed: u64) -> Result<Vec<TorusPoint>> {
    let mut rng = rng_for(seed, 0x100 + d as u64);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    for c in special_points(d).into_iter().take(count) {
        out.push(TorusPoint::new(c)?);
    }
    let mut i = 1u64;
    while out.len() < count {
        let c: Vec<f64> = (0..d)
            .map(|k| {
                let u = halton(i, PRIMES[k % PRIMES.len()]) + shift[k];
                u - u.floor() - 0.5
            })
            .collect();
        out.push(TorusPoint::new(c)?);
        i += 1;
    }
    Ok(out)
}

/// A random signal on [-radius, radius]^d: each site is kept with probability 0.7 and
/// gets a value uniform in [0, 1] (nonnegative) or [-1, 1] + i[-1, 1].
pub fn random_signal(rng: &mut ChaCha8Rng, d: usize, radius: i64, nonnegative: bool) -> Result<LatticeSignal> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(d as u32);
    let mut entries = Vec::new();
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0i64; d];
        for c in p.iter_mut() {
            *c = (rem % side) as i64 - radius;
            rem /= side;
        }
        if rng.gen::<f64>() >= 0.7 {
            continue;
        }
        let v = if nonnegative {
            Complex64::new(rng.gen_range(0.0..1.0), 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        entries.push((p, v));
    }
    if entries.is_empty() {
        entries.push((vec![0; d], Complex64::new(1.0, 0.0)));
    }
    LatticeSignal::from_entries(d, entries)
}

/// Random complex values for a family of the given length.
pub fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_values() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn xi_points_are_deterministic_and_nested() {
        let a = xi_points(3, 40, 7).unwrap();
        let b = xi_points(3, 80, 7).unwrap();
        assert_eq!(a[..], b[..40]);
        assert_eq!(a[0].coords(), &[0.0, 0.0, 0.0]);
        assert!(a.iter().all(|x| x.coords().iter().all(|c| (-0.5..0.5).contains(c))));
        assert_ne!(xi_points(3, 40, 8).unwrap(), a);
    }

    #[test]
    fn random_signals_are_reproducible() {
        let f = random_signal(&mut rng_for(1, 2), 2, 2, true).unwrap();
        let g = random_signal(&mut rng_for(1, 2), 2, 2, true).unwrap();
        assert_eq!(f, g);
        assert!(f.is_real_nonnegative());
        assert!(f.support_radius() <= 2);
    }
}
