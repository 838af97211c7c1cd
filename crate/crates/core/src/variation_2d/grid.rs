use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real-valued function sampled on a product grid `s_grid x t_grid`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction2D<T> {
    s_grid: Vec<T>,
    t_grid: Vec<T>,
    /// row-major, `values[i * t_grid.len() + j] = f(s_i, t_j)`
    values: Vec<T>,
}

/// Grid-aligned rectangle `[s_grid[s0], s_grid[s1]] x [t_grid[t0], t_grid[t1]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridRect {
    pub s0: usize,
    pub s1: usize,
    pub t0: usize,
    pub t1: usize,
}

impl GridRect {
    pub fn new(s0: usize, s1: usize, t0: usize, t1: usize) -> Self {
        assert!(s0 <= s1 && t0 <= t1, "rectangle corners out of order");
        Self { s0, s1, t0, t1 }
    }

    /// `[a, b]^2`.
    pub fn square(a: usize, b: usize) -> Self {
        Self::new(a, b, a, b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.s0 == self.s1 || self.t0 == self.t1
    }

    pub fn s_intervals(&self) -> usize {
        self.s1 - self.s0
    }

    pub fn t_intervals(&self) -> usize {
        self.t1 - self.t0
    }
}

fn check_grid<T: Scalar>(g: &[T], name: &str) -> Result<()> {
    if g.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

impl<T: Scalar> GridFunction2D<T> {
    pub fn new(s_grid: Vec<T>, t_grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        check_grid(&s_grid, "s")?;
        check_grid(&t_grid, "t")?;
        if values.len() != s_grid.len() * t_grid.len() {
            return Err(Error::DimensionMismatch { left: values.len(), right: s_grid.len() * t_grid.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        Ok(Self { s_grid, t_grid, values })
    }

    pub fn from_fn(s_grid: Vec<T>, t_grid: Vec<T>, f: impl Fn(T, T) -> T) -> Result<Self> {
        let values = s_grid.iter().flat_map(|&s| t_grid.iter().map(move |&t| (s, t))).map(|(s, t)| f(s, t)).collect();
        Self::new(s_grid, t_grid, values)
    }

    /// `(s, t) -> g(s) h(t)`.
    pub fn separable(s_grid: Vec<T>, g: &[T], t_grid: Vec<T>, h: &[T]) -> Result<Self> {
        if g.len() != s_grid.len() || h.len() != t_grid.len() {
            return Err(Error::DimensionMismatch { left: g.len(), right: s_grid.len() });
        }
        let values = g.iter().flat_map(|&a| h.iter().map(move |&b| a * b)).collect();
        Self::new(s_grid, t_grid, values)
    }

    #[inline]
    pub fn s_grid(&self) -> &[T] {
        &self.s_grid
    }

    #[inline]
    pub fn t_grid(&self) -> &[T] {
        &self.t_grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.t_grid.len() + j]
    }

    pub fn full_rect(&self) -> GridRect {
        GridRect::new(0, self.s_grid.len() - 1, 0, self.t_grid.len() - 1)
    }

    pub fn has_common_grid(&self) -> bool {
        self.s_grid == self.t_grid
    }

    /// `f(s,u) + f(t,v) - f(s,v) - f(t,u)` for grid indices.
    #[inline]
    pub fn rect_increment_idx(&self, s: usize, t: usize, u: usize, v: usize) -> T {
        (self.at(t, v) - self.at(s, v)) - (self.at(t, u) - self.at(s, u))
    }

    pub fn rect_increment_of(&self, r: GridRect) -> T {
        self.rect_increment_idx(r.s0, r.s1, r.t0, r.t1)
    }

    /// Rectangular increment at grid times `s <= t`, `u <= v`.
    pub fn rect_increment(&self, s: T, t: T, u: T, v: T) -> Result<T> {
        let find = |g: &[T], x: T| g.iter().position(|&y| y == x).ok_or(Error::OffGrid(x.to_f64_lossy()));
        let (i0, i1) = (find(&self.s_grid, s)?, find(&self.s_grid, t)?);
        let (j0, j1) = (find(&self.t_grid, u)?, find(&self.t_grid, v)?);
        if i0 > i1 || j0 > j1 {
            return Err(Error::InvalidParameter("rectangle corners out of order".into()));
        }
        Ok(self.rect_increment_idx(i0, i1, j0, j1))
    }

    /// Restriction to `rect` with the values on its lower edges subtracted,
    /// so the result vanishes on `s = s0` and `t = t0` while keeping every
    /// rectangular increment.
    pub fn edge_normalized(&self, rect: GridRect) -> Self {
        let s_grid = self.s_grid[rect.s0..=rect.s1].to_vec();
        let t_grid = self.t_grid[rect.t0..=rect.t1].to_vec();
        let mut values = Vec::with_capacity(s_grid.len() * t_grid.len());
        for i in rect.s0..=rect.s1 {
            for j in rect.t0..=rect.t1 {
                values.push(self.rect_increment_idx(rect.s0, i, rect.t0, j));
            }
        }
        Self { s_grid, t_grid, values }
    }

    /// Restriction to `rect` without normalization.
    pub fn sub_grid(&self, rect: GridRect) -> Self {
        let s_grid = self.s_grid[rect.s0..=rect.s1].to_vec();
        let t_grid = self.t_grid[rect.t0..=rect.t1].to_vec();
        let mut values = Vec::with_capacity(s_grid.len() * t_grid.len());
        for i in rect.s0..=rect.s1 {
            for j in rect.t0..=rect.t1 {
                values.push(self.at(i, j));
            }
        }
        Self { s_grid, t_grid, values }
    }

    /// Bilinear interpolation; constant extrapolation outside the grid.
    pub fn interpolate(&self, s: T, t: T) -> T {
        let (i, a) = locate(&self.s_grid, s);
        let (j, b) = locate(&self.t_grid, t);
        let i1 = (i + 1).min(self.s_grid.len() - 1);
        let j1 = (j + 1).min(self.t_grid.len() - 1);
        let one = T::one();
        (one - a) * (one - b) * self.at(i, j)
            + a * (one - b) * self.at(i1, j)
            + (one - a) * b * self.at(i, j1)
            + a * b * self.at(i1, j1)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// CSV layout: first row `s\t,t_0,...,t_m`; each further row
    /// `s_i,f(s_i,t_0),...,f(s_i,t_m)`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["s\\t".to_string()];
        header.extend(self.t_grid.iter().map(|t| t.to_string()));
        w.write_record(&header)?;
        for (i, s) in self.s_grid.iter().enumerate() {
            let mut row = vec![s.to_string()];
            row.extend((0..self.t_grid.len()).map(|j| self.at(i, j).to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let parse = |f: &str| f.trim().parse::<T>().map_err(|_| Error::Csv(format!("cannot parse {f:?}")));
        let mut records = r.records();
        let header = records.next().ok_or_else(|| Error::Csv("empty input".into()))??;
        let t_grid = header.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
        let mut s_grid = Vec::new();
        let mut values = Vec::new();
        for rec in records {
            let rec = rec?;
            let mut it = rec.iter();
            s_grid.push(parse(it.next().ok_or_else(|| Error::Csv("empty row".into()))?)?);
            for f in it {
                values.push(parse(f)?);
            }
        }
        Self::new(s_grid, t_grid, values)
    }
}

/// Index of the cell containing `x` and the local coordinate in `[0, 1]`.
fn locate<T: Scalar>(grid: &[T], x: T) -> (usize, T) {
    if grid.len() == 1 || x <= grid[0] {
        return (0, T::zero());
    }
    let last = grid.len() - 1;
    if x >= grid[last] {
        return (last, T::zero());
    }
    let k = grid.partition_point(|&g| g <= x) - 1;
    (k, (x - grid[k]) / (grid[k + 1] - grid[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn degenerate_rectangle_is_zero() {
        let f = GridFunction2D::from_fn(grid(4), grid(4), |s, t| (s * 3.0).sin() * t.exp()).unwrap();
        assert_eq!(f.rect_increment_idx(2, 2, 0, 4), 0.0);
        assert_eq!(f.rect_increment_idx(0, 4, 3, 3), 0.0);
    }

    #[test]
    fn brownian_covariance_overlap() {
        let f = GridFunction2D::from_fn(grid(4), grid(4), f64::min).unwrap();
        assert_eq!(f.rect_increment(0.0, 0.5, 0.25, 0.75).unwrap(), 0.25);
        assert_eq!(f.rect_increment(0.0, 0.3, 0.25, 0.75), Err(Error::OffGrid(0.3)));
    }

    #[test]
    fn separable_increment_factorizes() {
        let g = [0.0, 1.0, 3.0, 2.0, 5.0];
        let h = [1.0, -1.0, 0.5, 0.0, 2.0];
        let f = GridFunction2D::separable(grid(4), &g, grid(4), &h).unwrap();
        for (s, t, u, v) in [(0, 2, 1, 4), (1, 3, 0, 2), (0, 4, 0, 4)] {
            assert_eq!(f.rect_increment_idx(s, t, u, v), (g[t] - g[s]) * (h[v] - h[u]));
        }
    }

    #[test]
    fn edge_normalized_vanishes_on_lower_edges() {
        let f = GridFunction2D::from_fn(grid(5), grid(5), |s, t| s * s + t + s * t).unwrap();
        let r = GridRect::new(1, 4, 2, 5);
        let e = f.edge_normalized(r);
        for i in 0..4 {
            assert_eq!(e.at(i, 0), 0.0);
        }
        for j in 0..4 {
            assert_eq!(e.at(0, j), 0.0);
        }
        assert!((e.rect_increment_of(e.full_rect()) - f.rect_increment_of(r)).abs() < 1e-15);
    }

    #[test]
    fn bilinear_interpolation_reproduces_nodes_and_bilinear_functions() {
        let f = GridFunction2D::from_fn(grid(3), grid(2), |s, t| 1.0 + 2.0 * s - t + 4.0 * s * t).unwrap();
        assert_eq!(f.interpolate(1.0 / 3.0, 0.5), f.at(1, 1));
        let x = f.interpolate(0.4, 0.7);
        assert!((x - (1.0 + 0.8 - 0.7 + 4.0 * 0.28)).abs() < 1e-14);
    }

    #[test]
    fn csv_roundtrip() {
        let f = GridFunction2D::from_fn(vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 1.0], |s, t| s - 3.0 * t).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(GridFunction2D::<f64>::read_csv(&buf[..]).unwrap(), f);
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(GridFunction2D::new(vec![0.0, 0.0], vec![1.0], vec![0.0, 0.0]).is_err());
    }
}
