//! One-dimensional dissection optimization on a fixed grid.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maximizes `Σ weight(t_k, t_{k+1})` over sub-dissections
/// `0 = t_0 < ... < t_m = n - 1` of the index set `0..n`.
///
/// Longest path on the DAG of grid indices, `O(n^2)` weight evaluations.
/// Returns the optimum and the maximizing dissection. For `n <= 1` the
/// optimum is zero.
pub fn max_additive_dissection<T: Scalar>(n: usize, mut weight: impl FnMut(usize, usize) -> T) -> (T, Vec<usize>) {
    if n <= 1 {
        return (T::zero(), (0..n).collect());
    }
    let mut best = vec![T::zero(); n];
    let mut prev = vec![0usize; n];
    for j in 1..n {
        let mut b = T::neg_infinity();
        let mut arg = 0;
        for i in 0..j {
            let v = best[i] + weight(i, j);
            if v > b {
                b = v;
                arg = i;
            }
        }
        best[j] = b;
        prev[j] = arg;
    }
    let mut path = vec![n - 1];
    let mut k = n - 1;
    while k != 0 {
        k = prev[k];
        path.push(k);
    }
    path.reverse();
    (best[n - 1], path)
}

/// Grid-restricted `p`-variation `sup_D (Σ |x_{t_{k+1}} - x_{t_k}|^p)^{1/p}`
/// of a real-valued sampled path.
pub fn pvar_1d<T: Scalar>(values: &[T], p: T) -> Result<T> {
    if p < T::one() || p.is_nan() {
        return Err(Error::ExponentBelowOne(p.to_f64_lossy()));
    }
    let (s, _) = max_additive_dissection(values.len(), |i, j| (values[j] - values[i]).abs().powf(p));
    Ok(s.powf(p.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_path_gives_total_increment() {
        let v = [0.0f64, 0.1, 0.5, 0.7, 2.0];
        for p in [1.0, 1.5, 2.0, 3.7] {
            assert!((pvar_1d(&v, p).unwrap() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zigzag_one_variation() {
        assert_eq!(pvar_1d(&[0.0, 1.0, 0.0, 1.0], 1.0).unwrap(), 3.0);
    }

    #[test]
    fn short_inputs() {
        assert_eq!(pvar_1d::<f64>(&[], 2.0).unwrap(), 0.0);
        assert_eq!(pvar_1d(&[4.0], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_small_exponent() {
        assert_eq!(pvar_1d(&[0.0, 1.0], 0.5), Err(Error::ExponentBelowOne(0.5)));
    }

    #[test]
    fn dissection_endpoints() {
        let (_, d) = max_additive_dissection(5, |i, j| ((j - i) as f64).powi(2));
        assert_eq!(d, vec![0, 4]);
        let (_, d) = max_additive_dissection(5, |i, j| (j - i) as f64 * 0.0 + 1.0);
        assert_eq!(d, vec![0, 1, 2, 3, 4]);
    }
}
