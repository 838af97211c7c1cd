use rayon::prelude::*;

use super::grid::{GridFunction2D, GridRect};
use super::rho::{rho_variation_with, RhoVariation, VariationMode, VariationOptions};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// Something that can be evaluated at arbitrary points of the plane.
pub trait Surface<T> {
    fn eval(&self, s: T, t: T) -> T;
}

impl<T: Scalar> Surface<T> for GridFunction2D<T> {
    fn eval(&self, s: T, t: T) -> T {
        self.interpolate(s, t)
    }
}

impl<T, F: Fn(T, T) -> T> Surface<T> for F {
    fn eval(&self, s: T, t: T) -> T {
        self(s, t)
    }
}

/// Riemann–Stieltjes sums on successive dyadic refinements.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct YoungIntegral<T> {
    /// Sum at the finest level.
    pub value: T,
    /// `sums[l]`: every base cell split into `2^l x 2^l` sub-cells.
    pub sums: Vec<T>,
    /// `|sums[l] - sums[l-1]|`.
    pub differences: Vec<T>,
    pub converged: bool,
}

pub const DEFAULT_REFINEMENT_LEVELS: usize = 4;

fn refine_nodes<T: Scalar>(base: &[T], level: usize) -> Vec<T> {
    let k = 1usize << level;
    let mut out = Vec::with_capacity((base.len() - 1) * k + 1);
    for w in base.windows(2) {
        for m in 0..k {
            out.push(w[0] + (w[1] - w[0]) * T::lit(m as f64 / k as f64));
        }
    }
    out.push(*base.last().expect("non-empty grid"));
    out
}

/// `Σ f(s_i, t_j) g([s_i, s_{i+1}] x [t_j, t_{j+1}])` with left-lower corner
/// evaluation, on `levels + 1` dyadic refinements of the node grids.
pub fn young_refinement<T: Scalar>(
    f: &(impl Surface<T> + Sync),
    g: &(impl Surface<T> + Sync),
    s_nodes: &[T],
    t_nodes: &[T],
    levels: usize,
) -> Result<YoungIntegral<T>> {
    if s_nodes.len() < 2 || t_nodes.len() < 2 {
        return Err(Error::InvalidGrid("need at least one cell per axis".into()));
    }
    let sums: Vec<T> = (0..=levels)
        .map(|level| {
            let s = refine_nodes(s_nodes, level);
            let t = refine_nodes(t_nodes, level);
            let rows: Vec<T> = (0..s.len() - 1)
                .into_par_iter()
                .map(|i| {
                    let (g0, g1): (Vec<T>, Vec<T>) =
                        t.iter().map(|&tj| (g.eval(s[i], tj), g.eval(s[i + 1], tj))).unzip();
                    compensated_sum(
                        (0..t.len() - 1).map(|j| f.eval(s[i], t[j]) * (g1[j + 1] - g0[j + 1] - g1[j] + g0[j])),
                    )
                })
                .collect();
            compensated_sum(rows)
        })
        .collect();
    let differences: Vec<T> = sums.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let scale = sums.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let converged = match differences.last() {
        None => true,
        Some(&last) => {
            last <= T::lit(1e-6) * scale || (differences.len() >= 2 && differences.windows(2).all(|w| w[1] < w[0]))
        }
    };
    Ok(YoungIntegral { value: *sums.last().expect("at least one level"), sums, differences, converged })
}

/// 2D Young integral of sampled functions over `rect`, values at refined
/// points by bilinear interpolation.
pub fn young_integral_2d<T: Scalar>(
    f: &GridFunction2D<T>,
    g: &GridFunction2D<T>,
    rect: GridRect,
    levels: usize,
) -> Result<YoungIntegral<T>> {
    if f.s_grid() != g.s_grid() || f.t_grid() != g.t_grid() {
        return Err(Error::GridMismatch);
    }
    if rect.s1 >= f.s_grid().len() || rect.t1 >= f.t_grid().len() {
        return Err(Error::InvalidParameter(format!("rectangle {rect:?} outside the grid")));
    }
    if rect.is_degenerate() {
        return Ok(YoungIntegral { value: T::zero(), sums: vec![T::zero()], differences: vec![], converged: true });
    }
    young_refinement(f, g, &f.s_grid()[rect.s0..=rect.s1], &f.t_grid()[rect.t0..=rect.t1], levels)
}

/// Riemann zeta for real `x > 1` by Euler–Maclaurin after twenty explicit terms.
pub fn riemann_zeta(x: f64) -> f64 {
    assert!(x > 1.0, "zeta needs x > 1");
    let n = 20.0f64;
    let head: f64 = (1..20).map(|k| (k as f64).powf(-x)).sum();
    let nx = n.powf(-x);
    head + n.powf(1.0 - x) / (x - 1.0) + 0.5 * nx + x * nx / (12.0 * n)
        - x * (x + 1.0) * (x + 2.0) * nx / (720.0 * n.powi(3))
        + x * (x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0) * nx / (30240.0 * n.powi(5))
}

/// `(1 + zeta(1/p + 1/q))^2`.
pub fn young_constant(p: f64, q: f64) -> Result<f64> {
    if p < 1.0 || q < 1.0 || 1.0 / p + 1.0 / q <= 1.0 {
        return Err(Error::YoungExponents { p, q });
    }
    Ok((1.0 + riemann_zeta(1.0 / p + 1.0 / q)).powi(2))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct YoungBoundCheck<T> {
    pub integral: YoungIntegral<T>,
    pub integrand_variation: RhoVariation<T>,
    pub integrator_variation: RhoVariation<T>,
    pub constant: f64,
    pub bound: T,
    pub holds: bool,
    /// Both variations exact, so `bound` is the true grid bound rather than
    /// a lower estimate of it.
    pub certified: bool,
}

/// `|∫ f dg| <= C_{p,q} |f|_{q-var} |g|_{p-var}` over `rect`, with `f`
/// normalized to vanish on the lower edges of `rect`.
pub fn young_bound_check<T: Scalar>(
    f: &GridFunction2D<T>,
    g: &GridFunction2D<T>,
    rect: GridRect,
    q: T,
    p: T,
) -> Result<YoungBoundCheck<T>> {
    let constant = young_constant(p.to_f64_lossy(), q.to_f64_lossy())?;
    let fe = f.edge_normalized(rect);
    let gs = g.sub_grid(rect);
    let integral = young_integral_2d(&fe, &gs, fe.full_rect(), DEFAULT_REFINEMENT_LEVELS)?;
    let opts = VariationOptions::default();
    let fv = rho_variation_with(&fe, q, fe.full_rect(), VariationMode::Auto, &opts)?;
    let gv = rho_variation_with(&gs, p, gs.full_rect(), VariationMode::Auto, &opts)?;
    let bound = T::lit(constant) * fv.value * gv.value;
    let tol = T::lit(64.0) * T::epsilon() * (bound + integral.value.abs());
    Ok(YoungBoundCheck {
        holds: integral.value.abs() <= bound + tol,
        certified: fv.is_exact() && gv.is_exact(),
        integral,
        integrand_variation: fv,
        integrator_variation: gv,
        constant,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_values() {
        assert!((riemann_zeta(2.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(4.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((riemann_zeta(1.1) - 10.584448464950810).abs() < 1e-9);
    }

    #[test]
    fn young_constant_rejects_bad_exponents() {
        assert_eq!(young_constant(2.0, 2.0), Err(Error::YoungExponents { p: 2.0, q: 2.0 }));
        assert!(young_constant(1.5, 1.5).is_ok());
    }

    #[test]
    fn product_measure_gives_lebesgue_integral() {
        let v = young_refinement(&|_: f64, _: f64| 1.0, &|s: f64, t: f64| s * t, &[0.0, 1.0], &[0.0, 1.0], 4).unwrap();
        assert!((v.value - 1.0).abs() < 1e-14);
        let v =
            young_refinement(&|s: f64, t: f64| s + t, &|s: f64, t: f64| s * t, &[0.0, 1.0], &[0.0, 1.0], 8).unwrap();
        // left-corner sums converge to 1 from below
        assert!((v.value - 1.0).abs() < 2.0 / 256.0);
        assert!(v.converged);
    }

    #[test]
    fn brownian_against_brownian() {
        let v = young_refinement(&f64::min, &f64::min, &[0.0, 1.0], &[0.0, 1.0], 10).unwrap();
        assert!((v.value - (0.5 - 2f64.powi(-11))).abs() < 1e-12);
        assert!(v.converged);
    }

    #[test]
    fn zero_integrand() {
        let f = GridFunction2D::from_fn(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0], |_, _| 0.0).unwrap();
        let g = GridFunction2D::from_fn(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0], f64::min).unwrap();
        let v = young_integral_2d(&f, &g, f.full_rect(), 4).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.converged);
        assert!(young_bound_check(&f, &g, f.full_rect(), 1.0, 1.0).unwrap().holds);
    }

    #[test]
    fn bound_check_on_brownian_grid() {
        let grid: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let r = GridFunction2D::from_fn(grid.clone(), grid, f64::min).unwrap();
        let c = young_bound_check(&r, &r, r.full_rect(), 1.0, 1.0).unwrap();
        assert!(c.holds && c.certified);
        assert!((c.integrand_variation.value - 1.0).abs() < 1e-14);
    }
}
