use std::ops::Mul;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Element of the degree-3 truncated tensor algebra over `R^d`.
///
/// Levels are stored densely in row-major order: level 2 is `d x d`, level 3
/// is `d x d x d` with index `(i * d + j) * d + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedTensor<T> {
    dim: usize,
    level0: T,
    level1: Vec<T>,
    level2: Vec<T>,
    level3: Vec<T>,
}

impl<T: Scalar> TruncatedTensor<T> {
    pub fn new(dim: usize, level0: T, level1: Vec<T>, level2: Vec<T>, level3: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if level1.len() != dim {
            return Err(Error::DimensionMismatch { left: level1.len(), right: dim });
        }
        if level2.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: level2.len(), right: dim * dim });
        }
        if level3.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { left: level3.len(), right: dim * dim * dim });
        }
        let t = Self { dim, level0, level1, level2, level3 };
        if !t.is_finite() {
            return Err(Error::NonFinite("truncated tensor"));
        }
        Ok(t)
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            level0: T::zero(),
            level1: vec![T::zero(); dim],
            level2: vec![T::zero(); dim * dim],
            level3: vec![T::zero(); dim * dim * dim],
        }
    }

    /// The unit `1 + 0 + 0 + 0`.
    pub fn one(dim: usize) -> Self {
        let mut t = Self::zero(dim);
        t.level0 = T::one();
        t
    }

    /// Pure level-1 tensor.
    pub fn from_vector(v: &[T]) -> Self {
        let mut t = Self::zero(v.len());
        t.level1.copy_from_slice(v);
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn level0(&self) -> T {
        self.level0
    }

    #[inline]
    pub fn level1(&self) -> &[T] {
        &self.level1
    }

    #[inline]
    pub fn level2(&self) -> &[T] {
        &self.level2
    }

    #[inline]
    pub fn level3(&self) -> &[T] {
        &self.level3
    }

    #[inline]
    pub fn get2(&self, i: usize, j: usize) -> T {
        self.level2[i * self.dim + j]
    }

    #[inline]
    pub fn get3(&self, i: usize, j: usize, k: usize) -> T {
        self.level3[(i * self.dim + j) * self.dim + k]
    }

    pub fn is_finite(&self) -> bool {
        self.level0.is_finite()
            && self.level1.iter().all(|v| v.is_finite())
            && self.level2.iter().all(|v| v.is_finite())
            && self.level3.iter().all(|v| v.is_finite())
    }

    /// Frobenius norm of level `k` (k = 0..=3).
    pub fn level_norm(&self, k: usize) -> T {
        let slice: &[T] = match k {
            0 => return self.level0.abs(),
            1 => &self.level1,
            2 => &self.level2,
            3 => &self.level3,
            _ => panic!("level {k} out of range"),
        };
        slice.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Copy with levels other than `k` zeroed.
    pub fn project(&self, k: usize) -> Self {
        let mut out = Self::zero(self.dim);
        match k {
            0 => out.level0 = self.level0,
            1 => out.level1.copy_from_slice(&self.level1),
            2 => out.level2.copy_from_slice(&self.level2),
            3 => out.level3.copy_from_slice(&self.level3),
            _ => panic!("level {k} out of range"),
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, lambda: T) -> Self {
        self.map(|v| v * lambda)
    }

    /// Multiplies level `i` by `lambda^i`.
    pub fn dilate(&self, lambda: T) -> Self {
        let l2 = lambda * lambda;
        let l3 = l2 * lambda;
        Self {
            dim: self.dim,
            level0: self.level0,
            level1: self.level1.iter().map(|&v| v * lambda).collect(),
            level2: self.level2.iter().map(|&v| v * l2).collect(),
            level3: self.level3.iter().map(|&v| v * l3).collect(),
        }
    }

    /// Largest absolute entry-wise difference over all levels.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        let mut m = (self.level0 - other.level0).abs();
        for (a, b) in self
            .level1
            .iter()
            .chain(&self.level2)
            .chain(&self.level3)
            .zip(other.level1.iter().chain(&other.level2).chain(&other.level3))
        {
            m = m.max((*a - *b).abs());
        }
        m
    }

    /// Largest absolute entry over all levels.
    pub fn max_abs(&self) -> T {
        self.level1.iter().chain(&self.level2).chain(&self.level3).fold(self.level0.abs(), |m, v| m.max(v.abs()))
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            dim: self.dim,
            level0: f(self.level0),
            level1: self.level1.iter().map(|&v| f(v)).collect(),
            level2: self.level2.iter().map(|&v| f(v)).collect(),
            level3: self.level3.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        let zip = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect::<Vec<_>>();
        Ok(Self {
            dim: self.dim,
            level0: f(self.level0, other.level0),
            level1: zip(&self.level1, &other.level1),
            level2: zip(&self.level2, &other.level2),
            level3: zip(&self.level3, &other.level3),
        })
    }

    /// Truncated tensor product; callers guarantee equal dimensions.
    pub(crate) fn mul_unchecked(&self, b: &Self) -> Self {
        let d = self.dim;
        let a = self;
        let mut c = Self::zero(d);
        c.level0 = a.level0 * b.level0;
        for i in 0..d {
            c.level1[i] = a.level0 * b.level1[i] + a.level1[i] * b.level0;
        }
        for i in 0..d {
            for j in 0..d {
                let ij = i * d + j;
                c.level2[ij] = a.level0 * b.level2[ij] + a.level1[i] * b.level1[j] + a.level2[ij] * b.level0;
            }
        }
        for i in 0..d {
            let ai = a.level1[i];
            for j in 0..d {
                let aij = a.level2[i * d + j];
                for k in 0..d {
                    let ijk = (i * d + j) * d + k;
                    c.level3[ijk] = a.level0 * b.level3[ijk]
                        + ai * b.level2[j * d + k]
                        + aij * b.level1[k]
                        + a.level3[ijk] * b.level0;
                }
            }
        }
        c
    }

    /// Lie bracket `a b - b a` in the truncated algebra.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        self.mul_unchecked(other).sub(&other.mul_unchecked(self))
    }
}

#[inline]
pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: a, right: b })
    }
}

/// Truncated tensor product `a ⊗ b`.
pub fn tensor_mul<T: Scalar>(a: &TruncatedTensor<T>, b: &TruncatedTensor<T>) -> Result<TruncatedTensor<T>> {
    check_dims(a.dim, b.dim)?;
    Ok(a.mul_unchecked(b))
}

impl<T: Scalar> Mul for &TruncatedTensor<T> {
    type Output = TruncatedTensor<T>;

    /// Panics on dimension mismatch; use [`tensor_mul`] for a checked product.
    fn mul(self, rhs: Self) -> TruncatedTensor<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

/// Group-like element of the free step-3 nilpotent group: scalar part is
/// exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<T>(TruncatedTensor<T>);

impl<T: Scalar> GroupElement<T> {
    /// Wraps a tensor with unit scalar part. Group-likeness (the shuffle
    /// relations) is not enforced here; see [`GroupElement::shuffle_residual`].
    pub fn from_tensor(t: TruncatedTensor<T>) -> Result<Self> {
        if t.level0 != T::one() {
            return Err(Error::ScalarPart { expected: 1.0, found: t.level0.to_f64_lossy() });
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("group element"));
        }
        Ok(Self(t))
    }

    pub fn identity(dim: usize) -> Self {
        Self(TruncatedTensor::one(dim))
    }

    /// `exp(v)` for a pure level-1 vector, i.e. the signature of a straight
    /// segment with increment `v`.
    pub fn exp_vector(v: &[T]) -> Self {
        let d = v.len();
        let mut t = TruncatedTensor::one(d);
        let half = T::lit(0.5);
        let sixth = T::lit(1.0 / 6.0);
        t.level1.copy_from_slice(v);
        for i in 0..d {
            for j in 0..d {
                let vij = v[i] * v[j];
                t.level2[i * d + j] = half * vij;
                for k in 0..d {
                    t.level3[(i * d + j) * d + k] = sixth * vij * v[k];
                }
            }
        }
        Self(t)
    }

    #[inline]
    pub fn tensor(&self) -> &TruncatedTensor<T> {
        &self.0
    }

    pub fn into_tensor(self) -> TruncatedTensor<T> {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, b: &Self) -> Self {
        // Level 0 is exactly one on both sides.
        let d = self.dim();
        let (a, b) = (&self.0, &b.0);
        let mut c = TruncatedTensor::one(d);
        for i in 0..d {
            c.level1[i] = b.level1[i] + a.level1[i];
        }
        for i in 0..d {
            let ai = a.level1[i];
            for j in 0..d {
                let ij = i * d + j;
                c.level2[ij] = b.level2[ij] + ai * b.level1[j] + a.level2[ij];
                let aij = a.level2[ij];
                for k in 0..d {
                    let ijk = ij * d + k;
                    c.level3[ijk] = b.level3[ijk] + ai * b.level2[j * d + k] + aij * b.level1[k] + a.level3[ijk];
                }
            }
        }
        Self(c)
    }

    /// Right-multiplies in place by `exp(v)` (Chen step along a segment).
    pub fn extend_by_segment(&mut self, v: &[T]) {
        *self = self.mul_unchecked(&Self::exp_vector(v));
    }

    /// Inverse, `1 - x + x^2 - x^3` with `x = g - 1`.
    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let a = &self.0;
        let mut c = TruncatedTensor::one(d);
        for i in 0..d {
            c.level1[i] = -a.level1[i];
        }
        for i in 0..d {
            let ai = a.level1[i];
            for j in 0..d {
                let ij = i * d + j;
                let aij = a.level2[ij];
                c.level2[ij] = ai * a.level1[j] - aij;
                for k in 0..d {
                    let ijk = ij * d + k;
                    // x^2 level 3: x1 ⊗ x2 + x2 ⊗ x1; x^3 level 3: x1 ⊗ x1 ⊗ x1
                    let sq = ai * a.level2[j * d + k] + aij * a.level1[k];
                    let cube = ai * a.level1[j] * a.level1[k];
                    c.level3[ijk] = -a.level3[ijk] + sq - cube;
                }
            }
        }
        Self(c)
    }

    /// Relative residual of the shuffle relations
    /// `x^{ij} + x^{ji} = x^i x^j` and `x^i x^{jk} = x^{ijk} + x^{jik} + x^{jki}`.
    pub fn shuffle_residual(&self) -> T {
        let d = self.dim();
        let t = &self.0;
        let n1 = t.level_norm(1);
        let n2 = t.level_norm(2);
        let n3 = t.level_norm(3);
        let mut r2 = T::zero();
        for i in 0..d {
            for j in 0..d {
                r2 = r2.max((t.get2(i, j) + t.get2(j, i) - t.level1[i] * t.level1[j]).abs());
            }
        }
        let mut r3 = T::zero();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let lhs = t.level1[i] * t.get2(j, k);
                    let rhs = t.get3(i, j, k) + t.get3(j, i, k) + t.get3(j, k, i);
                    r3 = r3.max((lhs - rhs).abs());
                }
            }
        }
        let s2 = T::one().max(n1 * n1 + n2);
        let s3 = T::one().max(n1 * n2 + n3);
        (r2 / s2).max(r3 / s3)
    }

    /// Group-like within the default relative tolerance `1e-10`.
    pub fn is_group_like(&self) -> bool {
        self.shuffle_residual() <= T::lit(GROUP_LIKE_TOLERANCE)
    }

    /// `max(|π1|, |π2|^(1/2), |π3|^(1/3))` without symmetrization.
    pub fn raw_homogeneous_norm(&self) -> T {
        let t = &self.0;
        t.level_norm(1).max(t.level_norm(2).sqrt()).max(t.level_norm(3).cbrt())
    }
}

/// Relative shuffle residual accepted as group-like.
pub const GROUP_LIKE_TOLERANCE: f64 = 1e-10;

impl<T: Scalar> Mul for &GroupElement<T> {
    type Output = GroupElement<T>;

    /// Panics on dimension mismatch; use [`GroupElement::try_mul`] for a
    /// checked product.
    fn mul(self, rhs: Self) -> GroupElement<T> {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

pub fn group_inverse<T: Scalar>(g: &GroupElement<T>) -> GroupElement<T> {
    g.inverse()
}

/// Truncated exponential `1 + a + a^2/2 + a^3/6` of a tensor with zero scalar
/// part.
pub fn exp_trunc<T: Scalar>(a: &TruncatedTensor<T>) -> Result<GroupElement<T>> {
    if a.level0 != T::zero() {
        return Err(Error::ScalarPart { expected: 0.0, found: a.level0.to_f64_lossy() });
    }
    let a2 = a.mul_unchecked(a);
    let a3 = a2.mul_unchecked(a);
    let mut out = TruncatedTensor::one(a.dim);
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    for i in 0..a.dim {
        out.level1[i] = a.level1[i];
    }
    for (o, (x, y)) in out.level2.iter_mut().zip(a.level2.iter().zip(&a2.level2)) {
        *o = *x + half * *y;
    }
    for (o, ((x, y), z)) in out.level3.iter_mut().zip(a.level3.iter().zip(&a2.level3).zip(&a3.level3)) {
        *o = *x + half * *y + sixth * *z;
    }
    GroupElement::from_tensor(out)
}

/// Truncated logarithm `x - x^2/2 + x^3/3` with `x = g - 1`.
pub fn log_trunc<T: Scalar>(g: &GroupElement<T>) -> TruncatedTensor<T> {
    let mut x = g.0.clone();
    x.level0 = T::zero();
    let x2 = x.mul_unchecked(&x);
    let x3 = x2.mul_unchecked(&x);
    let half = T::lit(0.5);
    let third = T::lit(1.0 / 3.0);
    let mut out = x.clone();
    for (o, y) in out.level2.iter_mut().zip(&x2.level2) {
        *o -= half * *y;
    }
    for (o, (y, z)) in out.level3.iter_mut().zip(x2.level3.iter().zip(&x3.level3)) {
        *o += third * *z - half * *y;
    }
    out
}

/// Logarithm of an arbitrary tensor with unit scalar part.
pub fn log_tensor<T: Scalar>(t: &TruncatedTensor<T>) -> Result<TruncatedTensor<T>> {
    Ok(log_trunc(&GroupElement::from_tensor(t.clone())?))
}

/// Dilation: `π_i(δ_λ g) = λ^i π_i(g)`.
pub fn dilate<T: Scalar>(lambda: T, g: &GroupElement<T>) -> GroupElement<T> {
    GroupElement(g.0.dilate(lambda))
}

/// Symmetrized homogeneous norm `max(raw(g), raw(g^{-1}))`, with
/// `raw(g) = max_i |π_i(g)|^{1/i}` over Frobenius level norms.
///
/// This is a homogeneous norm equivalent to the Carnot–Carathéodory norm,
/// not the exact sub-Riemannian length.
pub fn homogeneous_norm<T: Scalar>(g: &GroupElement<T>) -> T {
    g.raw_homogeneous_norm().max(g.inverse().raw_homogeneous_norm())
}

/// `‖g^{-1} ⊗ h‖`.
pub fn cc_distance<T: Scalar>(g: &GroupElement<T>, h: &GroupElement<T>) -> Result<T> {
    check_dims(g.dim(), h.dim())?;
    Ok(homogeneous_norm(&g.inverse().mul_unchecked(h)))
}

/// Distance between two increments given their inverses are not cached.
#[inline]
pub(crate) fn increment_distance<T: Scalar>(a: &GroupElement<T>, b: &GroupElement<T>) -> T {
    if a == b {
        return T::zero();
    }
    homogeneous_norm(&a.inverse().mul_unchecked(b))
}
