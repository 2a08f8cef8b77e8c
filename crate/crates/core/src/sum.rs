//! Fixed-shape pairwise reductions.
//!
//! The split points depend only on the input length, so the result is
//! bit-identical for any number of rayon workers.

const LEAF: usize = 128;
const PARALLEL_CUTOFF: usize = 1 << 15;

/// Pairwise sum of `term(i)` for `i` in `0..len`.
pub fn pairwise_sum_by<F>(len: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    sum_range(0, len, term)
}

fn sum_range<F>(lo: usize, hi: usize, term: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let len = hi - lo;
    if len <= LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        return acc;
    }
    let mid = lo + len / 2;
    if len >= PARALLEL_CUTOFF {
        let (a, b) = rayon::join(|| sum_range(lo, mid, term), || sum_range(mid, hi, term));
        a + b
    } else {
        sum_range(lo, mid, term) + sum_range(mid, hi, term)
    }
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs.len(), &|i| xs[i])
}

/// Maximum of `term(i)`; max is order independent so a plain fold suffices.
pub fn max_by<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..len).map(term).fold(0.0_f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let xs: Vec<f64> = (0..100_000).map(|i| (i % 17) as f64).collect();
        let naive: f64 = xs.iter().sum();
        assert_eq!(pairwise_sum(&xs), naive);
    }

    #[test]
    fn invariant_under_thread_count() {
        let xs: Vec<f64> = (0..200_000)
            .map(|i| ((i as f64) * 0.37).sin() * 1e-3)
            .collect();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| pairwise_sum(&xs));
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| pairwise_sum(&xs));
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
