//! Small numerical helpers shared by the other modules.

/// Pairwise (tree) summation. Deterministic for a fixed input order and
/// with O(log n) error growth instead of O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n` without allocating for small `n`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 16 {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    if n == 0 {
        return 0.0;
    }
    rec(0, n, &f)
}

/// `x^a` with the convention `0^a = 0`. Only meaningful for `a > 0`.
#[inline]
pub fn pow0(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(a)
    }
}

/// Total variation distance `½ Σ |p_i - q_i| w_i`.
pub fn total_variation(p: &[f64], q: &[f64], weights: &[f64]) -> f64 {
    0.5 * pairwise_sum_by(p.len(), |i| (p[i] - q[i]).abs() * weights[i])
}

/// Rounds to `digits` significant decimal digits. Non-finite values pass through.
pub fn round_significant(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(pairwise_sum_by(100, |i| (i + 1) as f64), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn pow0_convention() {
        assert_eq!(pow0(0.0, 0.5), 0.0);
        assert_eq!(pow0(4.0, 0.5), 2.0);
    }

    #[test]
    fn significant_rounding() {
        assert_eq!(round_significant(0.123456789012345, 12), 0.123456789012);
        assert_eq!(round_significant(f64::INFINITY, 12), f64::INFINITY);
        assert_eq!(round_significant(-1234.5678, 3), -1230.0);
    }
}
