//! Seeded sampling: stream splitting, uniform designs, and a rotated Halton
//! low-discrepancy sequence.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Derives an independent stream seed from `(base, stream)`.
///
/// The schedule is the SplitMix64 finalizer applied to
/// `base XOR stream · 0x9E3779B97F4A7C15` (the 64-bit golden ratio). It is a
/// fixed, platform-independent bijection-based mix, so distinct stream
/// indices give uncorrelated ChaCha seeds and reruns reproduce exactly.
pub fn split_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The crate-wide seeded RNG (ChaCha with 8 rounds).
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count × d` matrix of independent uniform draws inside the box.
pub fn seeded_uniform(domain: &BoxDomain, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if count == 0 {
        return Err(Error::input("sample count must be positive"));
    }
    let d = domain.dim();
    let mut rng = rng_from(seed);
    let mut m = DMatrix::zeros(count, d);
    for i in 0..count {
        for j in 0..d {
            let u: f64 = rng.random();
            m[(i, j)] = domain.lower()[j] + u * domain.width(j);
        }
    }
    Ok(m)
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

fn radical_inverse(base: u64, mut index: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    value
}

/// `count × d` points of a Halton sequence in the open unit cube, with a
/// seeded Cranley–Patterson rotation (a random shift modulo 1 per dimension).
///
/// Dimensions share the sequence index, so the first `q` columns of a
/// `d ≥ q`-dimensional request coincide with the `q`-dimensional request for
/// the same seed.
pub fn halton_unit(dim: usize, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    if dim == 0 || dim > PRIMES.len() {
        return Err(Error::input(format!(
            "low-discrepancy sampling supports 1..={} dimensions, got {dim}",
            PRIMES.len()
        )));
    }
    if count == 0 {
        return Err(Error::input("sample count must be positive"));
    }
    let mut rng = rng_from(seed);
    let shifts: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let mut m = DMatrix::zeros(count, dim);
    for i in 0..count {
        for j in 0..dim {
            let v = radical_inverse(PRIMES[j], (i + 1) as u64) + shifts[j];
            let v = v - v.floor();
            // Keep points strictly inside (0, 1) so inverse-CDF maps stay finite.
            m[(i, j)] = v.clamp(f64::EPSILON, 1.0 - f64::EPSILON);
        }
    }
    Ok(m)
}

/// Rotated Halton points mapped into the box.
pub fn halton_box(domain: &BoxDomain, count: usize, seed: u64) -> Result<DMatrix<f64>> {
    let unit = halton_unit(domain.dim(), count, seed)?;
    let mut m = unit;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] = domain.lower()[j] + m[(i, j)] * domain.width(j);
        }
    }
    Ok(m)
}
