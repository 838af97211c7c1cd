use crate::error::Result;
use crate::scalar::Scalar;

use super::lie::LieElement;
use super::tensor::{check_dims, homogeneous_norm, log_trunc, GroupElement, TruncatedTensor};

/// Norm of level `k` of a Lie element: Frobenius norm divided by `sqrt(k!)`.
///
/// With this normalization `|[u, w]| <= |u| |w|` for `u` of level 1 and `w`
/// of level 1 or 2, and the level-2 norm coincides with the Euclidean norm
/// of the Hall coordinates.
pub fn lie_level_norm<T: Scalar>(t: &TruncatedTensor<T>, k: usize) -> T {
    let factorial = match k {
        0 | 1 => 1.0,
        2 => 2.0,
        3 => 6.0,
        _ => panic!("level {k} out of range"),
    };
    t.level_norm(k) / T::lit(factorial).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BchBound<T> {
    pub level2_lhs: T,
    pub level2_rhs: T,
    pub level3_lhs: T,
    pub level3_rhs: T,
    pub holds: bool,
}

/// Evaluates `c = log(exp(-a) ⊗ exp(b))` and compares its level-2 and level-3
/// parts against
///
/// ```text
/// |c^2| <= |b^2 - a^2| + |b^1 - a^1| |b^1| / 2
/// |c^3| <= |b^3 - a^3| + |b^2 - a^2| |b^1| / 2
///          + |b^1 - a^1| (|b^2| / 2 + |a^1|^2 / 12 + |b^1|^2 / 12)
/// ```
///
/// using [`lie_level_norm`].
pub fn bch_bound_check<T: Scalar>(a: &LieElement<T>, b: &LieElement<T>) -> Result<BchBound<T>> {
    check_dims(a.dim(), b.dim())?;
    let ta = a.to_tensor();
    let tb = b.to_tensor();
    let product = &a.scale(-T::one()).exp() * &b.exp();
    let c = log_trunc(&product);
    let diff = tb.sub(&ta)?;

    let n = |t: &TruncatedTensor<T>, k| lie_level_norm(t, k);
    let half = T::lit(0.5);
    let twelfth = T::lit(1.0 / 12.0);
    let (a1, b1, b2) = (n(&ta, 1), n(&tb, 1), n(&tb, 2));
    let (d1, d2, d3) = (n(&diff, 1), n(&diff, 2), n(&diff, 3));

    let level2_lhs = n(&c, 2);
    let level2_rhs = d2 + half * d1 * b1;
    let level3_lhs = n(&c, 3);
    let level3_rhs = d3 + half * d2 * b1 + d1 * (half * b2 + twelfth * (a1 * a1 + b1 * b1));

    // rounding slack proportional to the size of the inputs
    let scale = T::one() + ta.max_abs() + tb.max_abs();
    let tol = T::lit(64.0) * T::epsilon() * scale * scale * scale;
    let holds = level2_lhs <= level2_rhs + tol && level3_lhs <= level3_rhs + tol;
    Ok(BchBound { level2_lhs, level2_rhs, level3_lhs, level3_rhs, holds })
}

/// Ratio `‖g^{-1} h g‖ / max(‖h‖, ‖h‖^{1/3} ‖g‖^{2/3})` whose supremum is the
/// conjugation constant on the step-3 group. Returns zero when `h` is the
/// identity.
pub fn conjugation_ratio<T: Scalar>(g: &GroupElement<T>, h: &GroupElement<T>) -> Result<T> {
    check_dims(g.dim(), h.dim())?;
    let conj = &(&g.inverse() * h) * g;
    let nh = homogeneous_norm(h);
    let ng = homogeneous_norm(g);
    let denom = nh.max(nh.cbrt() * ng.powf(T::lit(2.0 / 3.0)));
    if denom == T::zero() {
        return Ok(T::zero());
    }
    Ok(homogeneous_norm(&conj) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_algebra::HallBasis;

    fn lie(d: usize, f: impl Fn(usize) -> f64) -> LieElement<f64> {
        let n = HallBasis::new(d).len();
        LieElement::new(d, (0..n).map(f).collect()).unwrap()
    }

    #[test]
    fn equal_arguments_give_zero_level2() {
        let a = lie(3, |i| (i as f64 * 0.37).sin());
        let r = bch_bound_check(&a, &a).unwrap();
        assert!(r.level2_lhs < 1e-14);
        assert_eq!(r.level2_rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn zero_b_with_level_one_a() {
        let a = lie(2, |i| if i < 2 { 1.0 + i as f64 } else { 0.0 });
        let r = bch_bound_check(&a, &LieElement::zero(2)).unwrap();
        assert!(r.level2_lhs < 1e-15);
        assert_eq!(r.level2_rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn orthogonal_level_one_pair_is_tight_in_lie_norm() {
        // c^2 = [b^1 - a^1, b^1] / 2 with b^1 - a^1 = e1 and b^1 = e2
        let a = lie(2, |i| [-1.0, 1.0, 0.0, 0.0, 0.0][i]);
        let b = lie(2, |i| [0.0, 1.0, 0.0, 0.0, 0.0][i]);
        let r = bch_bound_check(&a, &b).unwrap();
        assert!((r.level2_lhs - 0.5).abs() < 1e-15);
        assert!((r.level2_rhs - 0.5).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn conjugation_by_identity_is_norm_ratio_one() {
        let h = GroupElement::exp_vector(&[0.4f64, -0.9]);
        let r = conjugation_ratio(&GroupElement::identity(2), &h).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert_eq!(conjugation_ratio(&h, &GroupElement::identity(2)).unwrap(), 0.0);
    }
}
