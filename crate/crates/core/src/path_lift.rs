//! Piecewise-linear paths, their step-3 lifts and homogeneous path metrics.
//!
//! All metrics are suprema over the stored grid. Paths being compared must
//! share the same grid; use [`PiecewisePath::refine`] to move a path onto a
//! finer common grid first.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor_algebra::{homogeneous_norm, increment_distance, GroupElement};
use crate::variation_1d::max_additive_dissection;

/// At least two points, strictly increasing from 0 to 1.
pub fn validate_times<T: Scalar>(times: &[T]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidGrid("need at least two times".into()));
    }
    if times[0] != T::zero() || *times.last().unwrap() != T::one() {
        return Err(Error::InvalidGrid("grid must start at 0 and end at 1".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Uniform grid `{k / 2^level}`.
pub fn dyadic_grid<T: Scalar>(level: u32) -> Vec<T> {
    let n = 1usize << level;
    let nt = T::from_usize(n).unwrap();
    (0..=n).map(|k| T::from_usize(k).unwrap() / nt).collect()
}

/// Piecewise-linear path in `R^d` on a dissection of `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePath<T> {
    dim: usize,
    times: Vec<T>,
    points: Vec<T>,
}

impl<T: Scalar> PiecewisePath<T> {
    pub fn new(times: Vec<T>, points: Vec<Vec<T>>) -> Result<Self> {
        if points.len() != times.len() {
            return Err(Error::DimensionMismatch { left: points.len(), right: times.len() });
        }
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidParameter("path dimension must be positive".into()));
        }
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { left: bad.len(), right: dim });
        }
        Self::from_flat(dim, times, points.into_iter().flatten().collect())
    }

    /// `points` holds `times.len()` rows of length `dim`.
    pub fn from_flat(dim: usize, times: Vec<T>, points: Vec<T>) -> Result<Self> {
        validate_times(&times)?;
        if dim == 0 || points.len() != dim * times.len() {
            return Err(Error::DimensionMismatch { left: points.len(), right: dim * times.len() });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("path"));
        }
        Ok(Self { dim, times, points })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn times(&self) -> &[T] {
        &self.times
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `c` sampled on the grid.
    pub fn component(&self, c: usize) -> Vec<T> {
        (0..self.len()).map(|i| self.points[i * self.dim + c]).collect()
    }

    /// Evaluates by linear interpolation at any `t` in `[0, 1]`.
    pub fn eval(&self, t: T) -> Vec<T> {
        let k = match self.times.binary_search_by(|s| s.partial_cmp(&t).expect("finite times")) {
            Ok(k) => return self.point(k).to_vec(),
            Err(k) => k.clamp(1, self.len() - 1),
        };
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let lambda = (t - t0) / (t1 - t0);
        self.point(k - 1).iter().zip(self.point(k)).map(|(&a, &b)| a + lambda * (b - a)).collect()
    }

    /// The same path on a grid containing every current breakpoint.
    pub fn refine(&self, new_times: &[T]) -> Result<Self> {
        validate_times(new_times)?;
        let mut it = new_times.iter().peekable();
        for t in &self.times {
            loop {
                match it.next() {
                    Some(s) if s == t => break,
                    Some(s) if s < t => continue,
                    _ => return Err(Error::InvalidGrid("refinement must contain the original grid".into())),
                }
            }
        }
        let points = new_times.iter().flat_map(|&t| self.eval(t)).collect();
        Self::from_flat(self.dim, new_times.to_vec(), points)
    }

    /// Restriction to the grid indices in `indices` (strictly increasing,
    /// first 0 and last `len - 1`).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let times = indices
            .iter()
            .map(|&i| self.times.get(i).copied().ok_or_else(|| Error::InvalidGrid(format!("index {i} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        let points = indices.iter().flat_map(|&i| self.point(i).to_vec()).collect();
        Self::from_flat(self.dim, times, points)
    }

    /// Step-3 lift by Chen concatenation of segment exponentials.
    pub fn lift_s3(&self) -> GroupPath<T> {
        lift_s3(self)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.times[i].to_string()];
            row.extend(self.point(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let dim = header.len().saturating_sub(1);
        let expected = std::iter::once("t".to_string()).chain((1..=dim).map(|i| format!("x{i}")));
        if dim == 0 || !header.iter().map(str::trim).eq(expected) {
            return Err(Error::Csv(format!("expected header t,x1,...,xd, found {:?}", header)));
        }
        let mut times = Vec::new();
        let mut points = Vec::new();
        for record in r.records() {
            let record = record?;
            let mut fields = record
                .iter()
                .map(|f| f.trim().parse::<T>().map_err(|_| Error::Csv(format!("cannot parse {f:?} as a number"))));
            times.push(fields.next().ok_or_else(|| Error::Csv("empty row".into()))??);
            for v in fields {
                points.push(v?);
            }
        }
        Self::from_flat(dim, times, points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref()).map_err(|e| Error::Csv(e.to_string()))?;
        Self::read_csv(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path.as_ref()).map_err(|e| Error::Csv(e.to_string()))?;
        self.write_csv(f)
    }
}

/// Group-valued path on a grid, starting at the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupPath<T> {
    times: Vec<T>,
    values: Vec<GroupElement<T>>,
}

impl<T: Scalar> GroupPath<T> {
    pub fn new(times: Vec<T>, values: Vec<GroupElement<T>>) -> Result<Self> {
        validate_times(&times)?;
        if values.len() != times.len() {
            return Err(Error::DimensionMismatch { left: values.len(), right: times.len() });
        }
        let dim = values[0].dim();
        if let Some(v) = values.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch { left: v.dim(), right: dim });
        }
        if values[0] != GroupElement::identity(dim) {
            return Err(Error::InvalidParameter("group path must start at the identity".into()));
        }
        Ok(Self { times, values })
    }

    /// The constant path at the identity.
    pub fn constant(times: Vec<T>, dim: usize) -> Result<Self> {
        let n = times.len();
        Self::new(times, vec![GroupElement::identity(dim); n])
    }

    #[inline]
    pub fn times(&self) -> &[T] {
        &self.times
    }

    #[inline]
    pub fn values(&self) -> &[GroupElement<T>] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn last(&self) -> &GroupElement<T> {
        self.values.last().expect("non-empty group path")
    }

    /// `x_{t_i}^{-1} ⊗ x_{t_j}` by grid index.
    pub fn increment_at(&self, i: usize, j: usize) -> GroupElement<T> {
        &self.values[i].inverse() * &self.values[j]
    }

    /// `x_s^{-1} ⊗ x_t` for grid times `s <= t`.
    pub fn increment(&self, s: T, t: T) -> Result<GroupElement<T>> {
        let i = self.index_of(s)?;
        let j = self.index_of(t)?;
        if i > j {
            return Err(Error::InvalidParameter("increment requires s <= t".into()));
        }
        Ok(self.increment_at(i, j))
    }

    fn index_of(&self, t: T) -> Result<usize> {
        self.times.iter().position(|&s| s == t).ok_or(Error::OffGrid(t.to_f64_lossy()))
    }

    /// Restriction to grid indices (strictly increasing, including both
    /// endpoints); values are re-based so the first is the identity.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let first_inv = self.values[indices[0]].inverse();
        let times = indices.iter().map(|&i| self.times[i]).collect();
        let values = indices.iter().map(|&i| &first_inv * &self.values[i]).collect();
        Self::new(times, values)
    }

    fn inverses(&self) -> Vec<GroupElement<T>> {
        self.values.iter().map(GroupElement::inverse).collect()
    }

    /// `‖x‖_∞ = max_t ‖x_t‖`.
    pub fn sup_norm(&self) -> T {
        self.values.iter().map(homogeneous_norm).fold(T::zero(), T::max)
    }

    pub fn holder_norm(&self, alpha: T) -> T {
        let inv = self.inverses();
        let mut m = T::zero();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let inc = &inv[i] * &self.values[j];
                m = m.max(homogeneous_norm(&inc) / (self.times[j] - self.times[i]).powf(alpha));
            }
        }
        m
    }

    /// Homogeneous `p`-variation norm over sub-dissections of the grid.
    pub fn pvar_norm(&self, p: T) -> Result<T> {
        check_exponent(p)?;
        let inv = self.inverses();
        let (s, _) = max_additive_dissection(self.len(), |i, j| homogeneous_norm(&(&inv[i] * &self.values[j])).powf(p));
        Ok(s.powf(p.recip()))
    }
}

fn check_exponent<T: Scalar>(p: T) -> Result<()> {
    if p < T::one() || p.is_nan() {
        Err(Error::ExponentBelowOne(p.to_f64_lossy()))
    } else {
        Ok(())
    }
}

/// `values[k] = exp(Δx_1) ⊗ ... ⊗ exp(Δx_k)`.
pub fn lift_s3<T: Scalar>(path: &PiecewisePath<T>) -> GroupPath<T> {
    let d = path.dim();
    let mut values = Vec::with_capacity(path.len());
    let mut current = GroupElement::identity(d);
    values.push(current.clone());
    let mut delta = vec![T::zero(); d];
    for k in 1..path.len() {
        for (c, (a, b)) in delta.iter_mut().zip(path.point(k - 1).iter().zip(path.point(k))) {
            *c = *b - *a;
        }
        current.extend_by_segment(&delta);
        values.push(current.clone());
    }
    GroupPath { times: path.times().to_vec(), values }
}

/// Increment of the lift of `path` over grid indices `i..=j`, computed
/// directly from the segments (no inversion).
pub fn segment_signature<T: Scalar>(path: &PiecewisePath<T>, i: usize, j: usize) -> GroupElement<T> {
    let d = path.dim();
    let mut g = GroupElement::identity(d);
    let mut delta = vec![T::zero(); d];
    for k in i + 1..=j {
        for (c, (a, b)) in delta.iter_mut().zip(path.point(k - 1).iter().zip(path.point(k))) {
            *c = *b - *a;
        }
        g.extend_by_segment(&delta);
    }
    g
}

fn check_grids<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>) -> Result<()> {
    if x.times != y.times {
        return Err(Error::GridMismatch);
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    Ok(())
}

/// `d_∞(x, y) = max_t d(x_t, y_t)`.
pub fn dist_inf<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>) -> Result<T> {
    check_grids(x, y)?;
    Ok(x.values.iter().zip(&y.values).map(|(a, b)| increment_distance(a, b)).fold(T::zero(), T::max))
}

/// Scans all grid pairs `i < j` and returns `max f(i, j, d(x_{ij}, y_{ij}))`.
fn pair_scan<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>, f: impl Fn(usize, usize, T) -> T) -> T {
    let xi = x.inverses();
    let yi = y.inverses();
    let mut m = T::zero();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let a = &xi[i] * &x.values[j];
            let b = &yi[i] * &y.values[j];
            m = m.max(f(i, j, increment_distance(&a, &b)));
        }
    }
    m
}

/// `d_0(x, y) = max_{s<t} d(x_{s,t}, y_{s,t})`.
pub fn dist_0<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>) -> Result<T> {
    check_grids(x, y)?;
    Ok(pair_scan(x, y, |_, _, d| d))
}

/// `d_{α-Höl}(x, y) = max_{s<t} d(x_{s,t}, y_{s,t}) / |t - s|^α`.
pub fn holder_dist<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>, alpha: T) -> Result<T> {
    check_grids(x, y)?;
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::InvalidParameter(format!("Hölder exponent {alpha} not in (0, 1]")));
    }
    let t = &x.times;
    Ok(pair_scan(x, y, |i, j, d| d / (t[j] - t[i]).powf(alpha)))
}

pub fn holder_norm<T: Scalar>(x: &GroupPath<T>, alpha: T) -> T {
    x.holder_norm(alpha)
}

/// `d_{p-var}(x, y) = sup_D (Σ d(x_{t_k,t_{k+1}}, y_{t_k,t_{k+1}})^p)^{1/p}`.
pub fn pvar_dist<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>, p: T) -> Result<T> {
    check_grids(x, y)?;
    check_exponent(p)?;
    let xi = x.inverses();
    let yi = y.inverses();
    let (s, _) = max_additive_dissection(x.len(), |i, j| {
        let a = &xi[i] * &x.values[j];
        let b = &yi[i] * &y.values[j];
        increment_distance(&a, &b).powf(p)
    });
    Ok(s.powf(p.recip()))
}

pub fn pvar_norm<T: Scalar>(x: &GroupPath<T>, p: T) -> Result<T> {
    x.pvar_norm(p)
}

/// `d_0(x, y) / max(d_∞, d_∞^{1/3} (‖x‖_∞ + ‖y‖_∞)^{2/3})`; the supremum of
/// this ratio is the constant in the local 1/3-Hölder equivalence of `d_0`
/// and `d_∞`. Zero when the paths coincide.
pub fn d0_dinf_ratio<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>) -> Result<T> {
    let d0 = dist_0(x, y)?;
    let dinf = dist_inf(x, y)?;
    let denom = dinf.max(dinf.cbrt() * (x.sup_norm() + y.sup_norm()).powf(T::lit(2.0 / 3.0)));
    Ok(if denom == T::zero() { T::zero() } else { d0 / denom })
}

/// `d_{α'-Höl}(x, y) / ((‖x‖_α ∨ ‖y‖_α)^{α'/α} d_0^{1-α'/α})` for
/// `α' < α`; bounded by a constant depending on the exponents only.
pub fn interpolation_ratio<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>, alpha: T, alpha_low: T) -> Result<T> {
    if !(alpha_low < alpha) {
        return Err(Error::InvalidParameter("interpolation needs α' < α".into()));
    }
    let lhs = holder_dist(x, y, alpha_low)?;
    let theta = alpha_low / alpha;
    let big = x.holder_norm(alpha).max(y.holder_norm(alpha));
    let denom = big.powf(theta) * dist_0(x, y)?.powf(T::one() - theta);
    Ok(if denom == T::zero() { T::zero() } else { lhs / denom })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_algebra::hall_log_signature;

    fn path(times: &[f64], pts: &[&[f64]]) -> PiecewisePath<f64> {
        PiecewisePath::new(times.to_vec(), pts.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(PiecewisePath::new(vec![0.0, 0.5], vec![vec![0.0], vec![1.0]]).is_err());
        assert!(PiecewisePath::new(vec![0.0, 0.5, 0.5, 1.0], vec![vec![0.0]; 4]).is_err());
        assert!(PiecewisePath::new(vec![0.0, 1.0], vec![vec![0.0]]).is_err());
    }

    #[test]
    fn constant_path_lifts_to_identity() {
        let p = path(&[0.0, 0.3, 1.0], &[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let g = p.lift_s3();
        assert!(g.values().iter().all(|v| *v == GroupElement::identity(2)));
        assert_eq!(g.holder_norm(0.5), 0.0);
    }

    #[test]
    fn straight_segment_has_no_area() {
        let p = path(&[0.0, 1.0], &[&[0.0, 0.0], &[1.0, 1.0]]);
        let g = p.lift_s3();
        assert_eq!(g.last().tensor().level2(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(hall_log_signature(g.last()).unwrap().area(0, 1), 0.0);
    }

    #[test]
    fn l_shaped_path_area() {
        let p = path(&[0.0, 0.5, 1.0], &[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]);
        let l = hall_log_signature(p.lift_s3().last()).unwrap();
        assert_eq!(l.area(0, 1), 0.5);
    }

    #[test]
    fn increments_and_off_grid() {
        let p = path(&[0.0, 0.5, 1.0], &[&[0.0], &[1.0], &[-1.0]]);
        let g = p.lift_s3();
        assert_eq!(g.increment(0.0, 1.0).unwrap(), *g.last());
        assert_eq!(g.increment(0.5, 0.5).unwrap(), GroupElement::identity(1));
        assert_eq!(g.increment(0.0, 0.25), Err(Error::OffGrid(0.25)));
    }

    #[test]
    fn holder_norm_of_line() {
        let p = path(&[0.0, 0.25, 1.0], &[&[0.0, 0.0], &[0.75, 1.0], &[3.0, 4.0]]);
        let g = p.lift_s3();
        assert!((g.holder_norm(1.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn pvar_norm_of_monotone_path() {
        let p = path(&[0.0, 0.2, 0.6, 1.0], &[&[0.0], &[0.5], &[0.7], &[2.0]]);
        assert!((p.lift_s3().pvar_norm(1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(p.lift_s3().pvar_norm(0.9), Err(Error::ExponentBelowOne(_))));
    }

    #[test]
    fn self_distances_vanish() {
        let p = path(&[0.0, 0.5, 1.0], &[&[0.0, 1.0], &[1.0, -1.0], &[0.3, 0.2]]);
        let g = p.lift_s3();
        assert_eq!(dist_inf(&g, &g).unwrap(), 0.0);
        assert_eq!(dist_0(&g, &g).unwrap(), 0.0);
        assert_eq!(holder_dist(&g, &g, 0.4).unwrap(), 0.0);
        assert_eq!(pvar_dist(&g, &g, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = path(&[0.0, 1.0], &[&[0.0], &[1.0]]).lift_s3();
        let b = path(&[0.0, 0.5, 1.0], &[&[0.0], &[1.0], &[0.0]]).lift_s3();
        assert_eq!(dist_inf(&a, &b), Err(Error::GridMismatch));
    }

    #[test]
    fn refine_and_restrict() {
        let p = path(&[0.0, 0.5, 1.0], &[&[0.0], &[1.0], &[0.0]]);
        let r = p.refine(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(r.component(0), vec![0.0, 0.5, 1.0, 0.5, 0.0]);
        assert_eq!(r.restrict(&[0, 2, 4]).unwrap(), p);
        assert!(p.refine(&[0.0, 0.25, 1.0]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let p = path(&[0.0, 0.1, 1.0], &[&[0.1, -2.5e-7], &[1.0 / 3.0, 2.0], &[5.0, 0.0]]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2\n"));
        assert_eq!(PiecewisePath::<f64>::read_csv(&buf[..]).unwrap(), p);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let text = "time,x1\n0,0\n1,1\n";
        assert!(matches!(PiecewisePath::<f64>::read_csv(text.as_bytes()), Err(Error::Csv(_))));
    }

    #[test]
    fn dyadic_grid_endpoints() {
        let g: Vec<f64> = dyadic_grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[4], 0.5);
        assert_eq!(*g.last().unwrap(), 1.0);
    }
}
