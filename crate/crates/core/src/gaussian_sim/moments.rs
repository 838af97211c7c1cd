use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::SampleEnsemble;
use crate::covariance_models::CovarianceKernel;
use crate::error::{Error, Result};
use crate::stats::{regression_slope, MCEstimate};
use crate::variation_2d::{
    control_from_variation, young_constant, young_refinement, GridFunction2D, GridRect, YoungIntegral,
};

/// `Σ_{k<l} a_k b_l + ½ Σ_k a_k b_k`: the `(i,j)` level-2 iterated integral
/// of a piecewise-linear path with increments `a` (component `i`) and `b`.
pub fn level2_iterated(a: &[f64], b: &[f64]) -> f64 {
    let mut prefix = 0.0;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += y * (prefix + 0.5 * x);
        prefix += x;
    }
    acc
}

pub(crate) fn increments(x: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    x[lo..=hi].windows(2).map(|w| w[1] - w[0]).collect()
}

/// Covariance matrix of the grid increments of a kernel.
pub fn increment_covariance_matrix(k: &CovarianceKernel, grid: &[f64]) -> DMatrix<f64> {
    let m = grid.len() - 1;
    DMatrix::from_fn(m, m, |i, j| k.increment_covariance(grid[i], grid[i + 1], grid[j], grid[j + 1]))
}

/// `E (a^T M b)^2 = Σ_{kl} (A M B)_{kl} M_{kl}` for independent centred
/// Gaussian vectors with covariances `A` and `B`.
pub fn bilinear_second_moment(a: &DMatrix<f64>, m: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let amb = a * m * b;
    amb.iter().zip(m.iter()).map(|(x, y)| x * y).sum()
}

/// Coefficients of the level-2 iterated integral: ones above the diagonal,
/// `½` on it.
pub fn level2_coefficients(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |k, l| match k.cmp(&l) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 0.0,
    })
}

/// Exact `E |X^{ij}_{s,t}|^2` for the piecewise-linear interpolation of two
/// independent components on `grid[lo..=hi]`.
pub fn discrete_level2_moment(ki: &CovarianceKernel, kj: &CovarianceKernel, grid: &[f64]) -> f64 {
    let a = increment_covariance_matrix(ki, grid);
    let b = increment_covariance_matrix(kj, grid);
    bilinear_second_moment(&a, &level2_coefficients(grid.len() - 1), &b)
}

/// `∫_{[s,t]^2} R_i(s,u; s,v) dR_j(u,v)` by dyadic refinement.
pub fn level2_young_value(
    ki: &CovarianceKernel,
    kj: &CovarianceKernel,
    s: f64,
    t: f64,
    levels: usize,
) -> Result<YoungIntegral<f64>> {
    let f = |u: f64, v: f64| ki.increment_covariance(s, u, s, v);
    young_refinement(&f, kj, &[s, t], &[s, t], levels)
}

#[derive(Clone, Debug, Serialize)]
pub struct Level2VarianceReport {
    pub components: (usize, usize),
    pub interval: (f64, f64),
    pub grid_points: usize,
    pub monte_carlo: MCEstimate,
    pub young_value: f64,
    pub young_differences: Vec<f64>,
    /// Exact expectation of the Monte Carlo estimator on its grid.
    pub discrete_value: f64,
    pub band: f64,
    pub pass: bool,
}

/// Monte Carlo `E |X^{ij}_{s,t}|^2` against the 2D Young integral
/// `∫ R_i dR_j`; tolerance `3 stderr + |discrete - young| + extra_band`.
pub fn level2_variance_check(
    ens: &SampleEnsemble,
    i: usize,
    j: usize,
    lo: usize,
    hi: usize,
    extra_band: f64,
) -> Result<Level2VarianceReport> {
    if i == j || i >= ens.dim() || j >= ens.dim() {
        return Err(Error::InvalidParameter("need two distinct components".into()));
    }
    let grid = ens.grid();
    if lo > hi || hi >= grid.len() {
        return Err(Error::InvalidParameter("interval outside the grid".into()));
    }
    let values: Vec<f64> = (0..ens.len())
        .into_par_iter()
        .map(|n| {
            let a = increments(ens.component(n, i), lo, hi);
            let b = increments(ens.component(n, j), lo, hi);
            level2_iterated(&a, &b).powi(2)
        })
        .collect();
    let monte_carlo = MCEstimate::from_samples(&values);
    let (ki, kj) = (&ens.spec().kernels()[i], &ens.spec().kernels()[j]);
    let (young_value, young_differences, discrete_value) = if lo == hi {
        (0.0, vec![], 0.0)
    } else {
        let y = level2_young_value(ki, kj, grid[lo], grid[hi], 10)?;
        (y.value, y.differences, discrete_level2_moment(ki, kj, &grid[lo..=hi]))
    };
    let band = (discrete_value - young_value).abs() + extra_band;
    Ok(Level2VarianceReport {
        components: (i, j),
        interval: (grid[lo], grid[hi]),
        grid_points: hi - lo + 1,
        pass: monte_carlo.agrees_with(young_value, 3.0, band),
        monte_carlo,
        young_value,
        young_differences,
        discrete_value,
        band,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WordMoments {
    pub word: Vec<usize>,
    /// Per interval: second moment estimate.
    pub moments: Vec<MCEstimate>,
    /// `moment / ω^{len/ρ}` per interval.
    pub constants: Vec<f64>,
    pub max_constant: f64,
    /// Log-log slope of the moment against the interval length.
    pub length_slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelBoundsReport {
    pub rho: f64,
    pub intervals: Vec<(f64, f64)>,
    /// `max_c |R_c|^rho_{rho-var; [s,t]^2}` per interval.
    pub control: Vec<f64>,
    pub control_exact: Vec<bool>,
    pub words: Vec<WordMoments>,
}

/// Second moments of the lift coordinates for the words `(i)`, `(i,j)`,
/// `(i,i,j)` and, when `d >= 3`, `(i,j,k)`, over the intervals
/// `[grid[lo], grid[hi]]`, against powers of the covariance control.
pub fn level_bounds_check(ens: &SampleEnsemble, rho: f64, intervals: &[(usize, usize)]) -> Result<LevelBoundsReport> {
    let d = ens.dim();
    if d < 2 {
        return Err(Error::InvalidParameter("need at least two components".into()));
    }
    let grid = ens.grid();
    let mut words = vec![vec![0], vec![0, 1], vec![0, 0, 1]];
    if d >= 3 {
        words.push(vec![0, 1, 2]);
    }
    let covs = ens.spec().kernels().iter().map(|k| k.on_grid(grid)).collect::<Result<Vec<GridFunction2D<f64>>>>()?;
    let controls = covs.iter().map(|f| control_from_variation(f, rho)).collect::<Result<Vec<_>>>()?;
    let mut control = Vec::new();
    let mut control_exact = Vec::new();
    for &(lo, hi) in intervals {
        let (mut w, mut ex) = (0.0f64, true);
        for c in &controls {
            let (v, e) = c.eval_flagged(GridRect::square(lo, hi));
            w = w.max(v);
            ex &= e;
        }
        control.push(w);
        control_exact.push(ex);
    }
    // per sample, per interval, per word
    let coords: Vec<Vec<Vec<f64>>> = (0..ens.len())
        .into_par_iter()
        .map(|n| {
            let lift = ens.path(n).lift_s3();
            intervals
                .iter()
                .map(|&(lo, hi)| {
                    let g = lift.increment_at(lo, hi);
                    let t = g.tensor();
                    words
                        .iter()
                        .map(|w| match w.as_slice() {
                            [a] => t.level1()[*a],
                            [a, b] => t.get2(*a, *b),
                            [a, b, c] => t.get3(*a, *b, *c),
                            _ => unreachable!(),
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let words = words
        .iter()
        .enumerate()
        .map(|(wi, w)| {
            let moments: Vec<MCEstimate> = (0..intervals.len())
                .map(|ii| MCEstimate::from_samples(&coords.iter().map(|c| c[ii][wi].powi(2)).collect::<Vec<_>>()))
                .collect();
            let constants: Vec<f64> = moments
                .iter()
                .zip(&control)
                .map(|(m, &om)| if om > 0.0 { m.mean / om.powf(w.len() as f64 / rho) } else { 0.0 })
                .collect();
            let xs: Vec<f64> = intervals.iter().map(|&(lo, hi)| (grid[hi] - grid[lo]).log2()).collect();
            let ys: Vec<f64> = moments.iter().map(|m| m.mean.max(f64::MIN_POSITIVE).log2()).collect();
            WordMoments {
                word: w.clone(),
                max_constant: constants.iter().copied().fold(0.0, f64::max),
                length_slope: if intervals.len() >= 2 { regression_slope(&xs, &ys) } else { f64::NAN },
                moments,
                constants,
            }
        })
        .collect();
    Ok(LevelBoundsReport {
        rho,
        intervals: intervals.iter().map(|&(lo, hi)| (grid[lo], grid[hi])).collect(),
        control,
        control_exact,
        words,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct YoungWienerReport {
    pub monte_carlo: MCEstimate,
    pub young_value: f64,
    pub discrete_value: f64,
    pub band: f64,
    pub pass: bool,
    /// `C_{rho,q} |f|^2_{q-var} |R|_{rho-var}` on the grid.
    pub upper_bound: f64,
    pub bound_holds: bool,
}

/// Variance of the left-point sums `Σ f(t_k) X_{t_k, t_{k+1}}` for a
/// one-dimensional ensemble against `∫ f(u) f(v) dR(u,v)`.
pub fn young_wiener_check(ens: &SampleEnsemble, f: &[f64], q: f64, rho: f64) -> Result<YoungWienerReport> {
    let constant = young_constant(rho, q)?;
    let grid = ens.grid();
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch { left: f.len(), right: grid.len() });
    }
    let values: Vec<f64> = (0..ens.len())
        .into_par_iter()
        .map(|n| {
            let x = ens.component(n, 0);
            let s: f64 = x.windows(2).zip(f).map(|(w, fk)| fk * (w[1] - w[0])).sum();
            s * s
        })
        .collect();
    let monte_carlo = MCEstimate::from_samples(&values);
    let k = &ens.spec().kernels()[0];
    let ff = GridFunction2D::separable(grid.to_vec(), f, grid.to_vec(), f)?;
    let young = young_refinement(&ff, k, grid, grid, 2)?;
    let a = increment_covariance_matrix(k, grid);
    let fl = nalgebra::DVector::from_column_slice(&f[..f.len() - 1]);
    let discrete_value = (fl.transpose() * a * &fl)[(0, 0)];
    let band = (discrete_value - young.value).abs() + 1e-3;
    let fvar = crate::variation_1d::pvar_1d(f, q)?;
    let f_sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // at most 64 intervals; a sub-grid only lowers the bound
    let step = (grid.len() - 1).div_ceil(64);
    let mut coarse: Vec<f64> = grid.iter().step_by(step).copied().collect();
    if coarse.last() != grid.last() {
        coarse.push(grid[grid.len() - 1]);
    }
    let r = k.on_grid(&coarse)?;
    let rvar = crate::variation_2d::rho_variation_with(
        &r,
        rho,
        r.full_rect(),
        crate::variation_2d::VariationMode::Auto,
        &crate::variation_2d::VariationOptions::default(),
    )?;
    // the estimate is stated for f vanishing at the start; add the sup term otherwise
    let upper_bound = constant * (fvar + f_sup).powi(2) * rvar.value;
    Ok(YoungWienerReport {
        pass: monte_carlo.agrees_with(young.value, 3.0, band),
        bound_holds: monte_carlo.mean <= upper_bound,
        monte_carlo,
        young_value: young.value,
        discrete_value,
        band,
        upper_bound,
    })
}

/// `(u, v) -> Ê(X_{s,u} Y_{s,u} X_{s,v} Y_{s,v})` for components `i`, `j`
/// with `s = grid[lo]`, on `grid[lo..=hi]`.
pub fn product_moment_surface(
    ens: &SampleEnsemble,
    i: usize,
    j: usize,
    lo: usize,
    hi: usize,
) -> Result<GridFunction2D<f64>> {
    let grid = &ens.grid()[lo..=hi];
    let m = grid.len();
    let mut acc = vec![0.0; m * m];
    for n in 0..ens.len() {
        let x = ens.component(n, i);
        let y = ens.component(n, j);
        let prod: Vec<f64> = (lo..=hi).map(|k| (x[k] - x[lo]) * (y[k] - y[lo])).collect();
        for u in 0..m {
            for v in 0..m {
                acc[u * m + v] += prod[u] * prod[v];
            }
        }
    }
    let nn = ens.len() as f64;
    GridFunction2D::new(grid.to_vec(), grid.to_vec(), acc.into_iter().map(|v| v / nn).collect())
}
