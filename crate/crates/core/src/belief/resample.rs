use rand::Rng;

use crate::scalar::Scalar;

/// `1 / Σ w²` for normalized weights.
pub fn effective_sample_size<S: Scalar>(weights: impl IntoIterator<Item = S>) -> S {
    let sum_sq: S = weights.into_iter().map(|w| w * w).sum();
    if sum_sq > S::zero() {
        S::one() / sum_sq
    } else {
        S::zero()
    }
}

/// Systematic resampling: one uniform offset, `n` evenly spaced pointers.
///
/// Returns the source index for each of the `n` output slots. Expected copy
/// count of index `i` is `n * w_i`.
pub fn systematic_indices<S: Scalar, R: Rng + ?Sized>(weights: &[S], n: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    if weights.is_empty() || n == 0 {
        return out;
    }
    let step = 1.0 / n as f64;
    let u0: f64 = rng.random::<f64>() * step;
    let mut cumulative = weights[0].to_f64_lossy();
    let mut i = 0;
    for k in 0..n {
        let u = u0 + k as f64 * step;
        while u > cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i].to_f64_lossy();
        }
        out.push(i);
    }
    out
}
