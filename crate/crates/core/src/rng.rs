//! Deterministic randomness utilities.
//!
//! Two primitives live here:
//!
//! * a **counter-based cell hash** — the draw for cell `(i, j)` of a sketch
//!   is a pure function of `(seed, i, j)`, so matrices come out identical no
//!   matter the generation order or thread count;
//! * a **stream derivation** helper — independent, reproducible substreams
//!   (design, coefficients, noise, sketch, ...) keyed off one base seed.

/// Golden-ratio increment used by the SplitMix64 generator.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 step: increments by the golden-ratio constant and applies the
/// finalizer. Bijective in `z`, with strong avalanche behavior.
#[inline]
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a tag path.
///
/// Each tag is folded in with a SplitMix64 step, so `derive_seed(s, &[a, b])`
/// and `derive_seed(s, &[b, a])` are unrelated streams.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(base);
    for &t in tags {
        h = splitmix64(h ^ t.wrapping_mul(GOLDEN));
    }
    h
}

/// Uniform draw in `[0, 1)` for cell `(i, j)` of an `.. x n` matrix, as a
/// pure function of `(seed, i, j)`. Uses the top 53 bits of the hashed
/// linear cell index, so every representable value is a multiple of 2^-53.
#[inline]
pub fn cell_uniform(seed: u64, i: usize, j: usize, n: usize) -> f64 {
    let idx = (i as u64).wrapping_mul(n as u64).wrapping_add(j as u64);
    let z = splitmix64(splitmix64(seed) ^ idx.wrapping_mul(GOLDEN));
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sparse-Bernoulli sign draw for cell `(i, j)`: `+1` and `-1` each with
/// probability `1/(2s)`, `0` otherwise. At `s = 1` the cell is never zero.
#[inline]
pub fn cell_sign(seed: u64, i: usize, j: usize, n: usize, s: f64) -> i8 {
    let u = cell_uniform(seed, i, j, n);
    let half = 0.5 / s;
    if u < half {
        1
    } else if u < 2.0 * half {
        -1
    } else {
        0
    }
}
