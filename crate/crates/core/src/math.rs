//! Small numeric helpers: stable log-sum arithmetic, simplex draws, and
//! deterministic seed derivation.

use rand::Rng;

/// Stable `log(sum(exp(x)))` over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Normalize `xs` in place to sum 1. Returns the pre-normalization sum.
pub fn normalize(xs: &mut [f64]) -> f64 {
    let s: f64 = xs.iter().sum();
    if s > 0.0 {
        for x in xs.iter_mut() {
            *x /= s;
        }
    }
    s
}

/// Draw a uniform point on the probability simplex of dimension `k`
/// (flat Dirichlet) into `out`.
pub fn sample_simplex<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        // -ln(U) with U in (0, 1]; Exp(1) draws normalized to sum 1.
        let u: f64 = rng.random::<f64>();
        *x = -(1.0 - u).ln();
    }
    normalize(out);
}

/// Inverse-CDF draw from a probability vector. The vector must sum to ~1;
/// rounding slack falls to the last positive entry.
pub fn sample_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// splitmix64 finalizer; the basis of all seed derivation in this crate.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed and a stream tag. Identical inputs
/// give identical outputs on every platform, so parallel work units seeded
/// this way are reproducible regardless of scheduling.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(base ^ mix64(stream))
}

/// Fold a list of tags into one stream id (order-sensitive).
pub fn derive_seed_path(base: u64, tags: &[u64]) -> u64 {
    let mut s = base;
    for &t in tags {
        s = derive_seed(s, t);
    }
    s
}
