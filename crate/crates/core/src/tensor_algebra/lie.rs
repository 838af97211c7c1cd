use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::{exp_trunc, GroupElement, TruncatedTensor, GROUP_LIKE_TOLERANCE};

/// Philip Hall basis of the step-3 free Lie algebra over `R^d`:
/// `e_i`, `[e_i, e_j]` for `i < j`, and `[e_i, [e_j, e_k]]` for `j < k`,
/// `j <= i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallBasis {
    dim: usize,
    pairs: Vec<(usize, usize)>,
    triples: Vec<(usize, usize, usize)>,
}

impl HallBasis {
    pub fn new(dim: usize) -> Self {
        let mut pairs = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                pairs.push((i, j));
            }
        }
        let mut triples = Vec::new();
        for j in 0..dim {
            for k in j + 1..dim {
                for i in j..dim {
                    triples.push((i, j, k));
                }
            }
        }
        Self { dim, pairs, triples }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(i, j)` with `i < j` for each level-2 element `[e_i, e_j]`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `(i, j, k)` for each level-3 element `[e_i, [e_j, e_k]]`.
    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    /// Total number of basis elements, `d + d(d-1)/2 + d(d^2-1)/3`.
    pub fn len(&self) -> usize {
        self.dim + self.pairs.len() + self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tensor expansion of `[e_i, [e_j, e_k]]` as `(index, sign)` terms.
    pub fn triple_expansion(&self, (i, j, k): (usize, usize, usize)) -> [(usize, f64); 4] {
        let d = self.dim;
        let idx = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
        [(idx(i, j, k), 1.0), (idx(i, k, j), -1.0), (idx(j, k, i), -1.0), (idx(k, j, i), 1.0)]
    }
}

/// Element of the step-3 free Lie algebra in Hall coordinates, ordered as
/// level 1, then [`HallBasis::pairs`], then [`HallBasis::triples`].
#[derive(Clone, Debug, PartialEq)]
pub struct LieElement<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> LieElement<T> {
    pub fn new(dim: usize, coords: Vec<T>) -> Result<Self> {
        let expected = HallBasis::new(dim).len();
        if coords.len() != expected {
            return Err(Error::DimensionMismatch { left: coords.len(), right: expected });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Lie element"));
        }
        Ok(Self { dim, coords })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, coords: vec![T::zero(); HallBasis::new(dim).len()] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn level1(&self) -> &[T] {
        &self.coords[..self.dim]
    }

    pub fn level2(&self) -> &[T] {
        let n2 = self.dim * (self.dim - 1) / 2;
        &self.coords[self.dim..self.dim + n2]
    }

    pub fn level3(&self) -> &[T] {
        let n2 = self.dim * (self.dim - 1) / 2;
        &self.coords[self.dim + n2..]
    }

    /// Coordinate on `[e_i, e_j]`, `i < j`.
    pub fn area(&self, i: usize, j: usize) -> T {
        assert!(i < j && j < self.dim);
        // pairs are enumerated row by row
        let offset = i * (2 * self.dim - i - 1) / 2 + (j - i - 1);
        self.coords[self.dim + offset]
    }

    /// Expands into the tensor algebra (scalar part zero).
    pub fn to_tensor(&self) -> TruncatedTensor<T> {
        let basis = HallBasis::new(self.dim);
        let d = self.dim;
        let mut l2 = vec![T::zero(); d * d];
        let mut l3 = vec![T::zero(); d * d * d];
        for (c, &(i, j)) in self.level2().iter().zip(basis.pairs()) {
            l2[i * d + j] += *c;
            l2[j * d + i] -= *c;
        }
        for (c, &t) in self.level3().iter().zip(basis.triples()) {
            for (idx, sign) in basis.triple_expansion(t) {
                l3[idx] += *c * T::lit(sign);
            }
        }
        TruncatedTensor::new(d, T::zero(), self.level1().to_vec(), l2, l3).expect("extents follow from the Hall basis")
    }

    pub fn exp(&self) -> GroupElement<T> {
        exp_trunc(&self.to_tensor()).expect("Lie tensors have zero scalar part")
    }

    pub fn scale(&self, lambda: T) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|&c| c * lambda).collect() }
    }
}

/// Hall coordinates of `log(sig)` from the closed-form step-3 expansion in
/// terms of the signature entries `X^i`, `X^{ij}`, `X^{ijk}`.
///
/// Level 3: on `[e_i,[e_i,e_j]]` the coefficient is
/// `X^{iij} + |X^i|^2 X^j / 12 - X^i X^{ij} / 2`; on `[e_i,[e_j,e_k]]` with
/// distinct indices it is
/// `(X^{ijk} + X^{jik} - 2X^{ikj} + X^{kij} - 2X^{jki} + X^{kji}) / 6`.
pub fn hall_log_signature<T: Scalar>(sig: &GroupElement<T>) -> Result<LieElement<T>> {
    let residual = sig.shuffle_residual();
    if residual > T::lit(GROUP_LIKE_TOLERANCE) {
        return Err(Error::NotGroupLike { residual: residual.to_f64_lossy() });
    }
    let d = sig.dim();
    let x = sig.tensor();
    let basis = HallBasis::new(d);
    let half = T::lit(0.5);
    let twelfth = T::lit(1.0 / 12.0);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);

    let mut coords = Vec::with_capacity(basis.len());
    coords.extend_from_slice(x.level1());
    for &(i, j) in basis.pairs() {
        coords.push(half * (x.get2(i, j) - x.get2(j, i)));
    }
    let repeated = |i: usize, j: usize| {
        let xi = x.level1()[i];
        x.get3(i, i, j) + twelfth * xi * xi * x.level1()[j] - half * xi * x.get2(i, j)
    };
    for &(i, j, k) in basis.triples() {
        let c = if i == j {
            repeated(i, k)
        } else if i == k {
            // [e_k,[e_j,e_k]] = -[e_k,[e_k,e_j]]
            -repeated(k, j)
        } else {
            sixth
                * (x.get3(i, j, k) + x.get3(j, i, k) - two * x.get3(i, k, j) + x.get3(k, i, j) - two * x.get3(j, k, i)
                    + x.get3(k, j, i))
        };
        coords.push(c);
    }
    LieElement::new(d, coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_algebra::log_trunc;

    #[test]
    fn basis_sizes() {
        for (d, n3) in [(1, 0), (2, 2), (3, 8), (4, 20)] {
            let b = HallBasis::new(d);
            assert_eq!(b.triples().len(), n3);
            assert_eq!(b.len(), d + d * (d - 1) / 2 + d * (d * d - 1) / 3);
        }
    }

    #[test]
    fn area_indexing() {
        let d = 4;
        let b = HallBasis::new(d);
        let coords: Vec<f64> = (0..b.len()).map(|i| i as f64).collect();
        let l = LieElement::new(d, coords).unwrap();
        for (n, &(i, j)) in b.pairs().iter().enumerate() {
            assert_eq!(l.area(i, j), (d + n) as f64);
        }
    }

    #[test]
    fn log_signature_of_identity_is_zero() {
        let l = hall_log_signature(&GroupElement::<f64>::identity(3)).unwrap();
        assert_eq!(l, LieElement::zero(3));
    }

    #[test]
    fn axis_path_area() {
        let g = &GroupElement::exp_vector(&[1.0, 0.0]) * &GroupElement::exp_vector(&[0.0, 1.0]);
        let l = hall_log_signature(&g).unwrap();
        assert_eq!(l.area(0, 1), 0.5);
        let generic = log_trunc(&g);
        assert_eq!(generic.get2(0, 1), 0.5);
        assert_eq!(generic.get2(1, 0), -0.5);
    }

    #[test]
    fn rejects_non_group_like() {
        let mut t = TruncatedTensor::<f64>::one(2);
        t = t.add(&TruncatedTensor::from_vector(&[1.0, 0.0])).unwrap();
        let g = GroupElement::from_tensor(t).unwrap();
        assert!(matches!(hall_log_signature(&g), Err(Error::NotGroupLike { .. })));
    }

    #[test]
    fn exp_of_lie_element_is_group_like() {
        let b = HallBasis::new(3);
        let coords: Vec<f64> = (0..b.len()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let l = LieElement::new(3, coords).unwrap();
        let g = l.exp();
        assert!(g.shuffle_residual() < 1e-14);
        let back = hall_log_signature(&g).unwrap();
        for (a, b) in back.coords().iter().zip(l.coords()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }
}
