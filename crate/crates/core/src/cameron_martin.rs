//! Finite-rank Cameron–Martin elements `h(t) = Σ z_k R(t_k, t)` and their
//! variation embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::covariance_models::{fbm_cov, gram_matrix_unchecked, CovarianceKernel};
use crate::error::{Error, Result};
use crate::variation_2d::{rho_variation_with, GridRect, RhoVariation, VariationMode, VariationOptions};

pub use crate::variation_1d::pvar_1d;

/// `h = E(Z X_·)` with `Z = Σ z_k X_{t_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CMElement {
    kernel: CovarianceKernel,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CMElement {
    pub fn new(kernel: CovarianceKernel, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch { left: nodes.len(), right: weights.len() });
        }
        if nodes.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Cameron-Martin element"));
        }
        if nodes.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidGrid("nodes must lie in [0, 1]".into()));
        }
        Ok(Self { kernel, nodes, weights })
    }

    pub fn kernel(&self) -> &CovarianceKernel {
        &self.kernel
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn values_on(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| cm_eval(self, t)).collect()
    }
}

pub fn cm_eval(h: &CMElement, t: f64) -> f64 {
    h.nodes.iter().zip(&h.weights).map(|(&tk, &z)| z * h.kernel.eval(tk, t)).sum()
}

/// `⟨h, h'⟩ = z^T Gram z'`; both elements must share the kernel.
pub fn cm_inner(h: &CMElement, g: &CMElement) -> Result<f64> {
    if h.kernel != g.kernel {
        return Err(Error::KernelMismatch);
    }
    let mut acc = 0.0;
    for (&s, &a) in h.nodes.iter().zip(&h.weights) {
        for (&t, &b) in g.nodes.iter().zip(&g.weights) {
            acc += a * b * h.kernel.eval(s, t);
        }
    }
    Ok(acc)
}

/// `z^T Gram z`, clamped at zero against rounding.
pub fn cm_norm_squared(h: &CMElement) -> f64 {
    let gram = gram_matrix_unchecked(&h.kernel, &h.nodes);
    let z = nalgebra::DVector::from_column_slice(&h.weights);
    (z.transpose() * gram * &z)[(0, 0)].max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingCheck {
    /// `|h|_{rho-var; [s,t]}` on the grid.
    pub lhs: f64,
    /// `sqrt<h,h> * sqrt(|R|_{rho-var; [s,t]^2})` on the same grid.
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    /// 2D side computed exactly; otherwise it is a lower bound and the
    /// check is only consistent, not proved.
    pub proved: bool,
}

/// Compares both sides of the Cameron–Martin variation embedding over the
/// grid interval `grid[i0] .. grid[i1]`.
pub fn embedding_check(h: &CMElement, grid: &[f64], i0: usize, i1: usize, rho: f64) -> Result<EmbeddingCheck> {
    let v = kernel_variation(&h.kernel, grid, i0, i1, rho)?;
    embedding_check_against(h, grid, i0, i1, &v)
}

/// `|R|_{rho-var}` over `[grid[i0], grid[i1]]^2`, shared by all elements of
/// one kernel.
pub fn kernel_variation(
    k: &CovarianceKernel,
    grid: &[f64],
    i0: usize,
    i1: usize,
    rho: f64,
) -> Result<RhoVariation<f64>> {
    if i0 > i1 || i1 >= grid.len() {
        return Err(Error::InvalidParameter("interval outside the grid".into()));
    }
    let r = k.on_grid(grid)?;
    rho_variation_with(&r, rho, GridRect::square(i0, i1), VariationMode::Auto, &VariationOptions::default())
}

/// [`embedding_check`] with the kernel's variation precomputed.
pub fn embedding_check_against(
    h: &CMElement,
    grid: &[f64],
    i0: usize,
    i1: usize,
    variation: &RhoVariation<f64>,
) -> Result<EmbeddingCheck> {
    if i0 > i1 || i1 >= grid.len() {
        return Err(Error::InvalidParameter("interval outside the grid".into()));
    }
    let lhs = pvar_1d(&h.values_on(&grid[i0..=i1]), variation.rho)?;
    let rhs = cm_norm_squared(h).sqrt() * variation.value.sqrt();
    let tol = 1e-12 * (1.0 + rhs);
    Ok(EmbeddingCheck { lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs + tol, proved: variation.is_exact() })
}

/// Random elements with `1..=max_nodes` uniform nodes in `(0, 1]` and
/// standard normal weights.
pub fn random_elements(k: &CovarianceKernel, count: usize, max_nodes: usize, seed: u64) -> Result<Vec<CMElement>> {
    if max_nodes == 0 {
        return Err(Error::InvalidParameter("need at least one node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=max_nodes);
            let nodes: Vec<f64> = (0..m).map(|_| 1.0 - rng.random::<f64>()).collect();
            let weights: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            CMElement::new(k.clone(), nodes, weights)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FbmIncrementElementCheck {
    pub hurst: f64,
    /// `(interval length, |h|_{1/(2H)-var} / length^{2H})` per dyadic interval.
    pub ratios: Vec<(f64, f64)>,
    pub constant: f64,
    pub spread: f64,
}

/// For `h = E(B^H_· B^H_{s,t})` over dyadic intervals `[s,t]` of levels
/// `0..levels`, the ratio `|h|_{1/(2H)-var; [s,t]} / |t-s|^{2H}`, each
/// interval sampled with `points` subintervals.
pub fn fbm_increment_element_check(hurst: f64, levels: u32, points: usize) -> Result<FbmIncrementElementCheck> {
    let k = fbm_cov(hurst)?;
    let rho = if hurst < 0.5 { 1.0 / (2.0 * hurst) } else { 1.0 };
    let mut ratios = Vec::new();
    for j in 0..levels {
        let len = 0.5f64.powi(j as i32);
        for i in 0..(1usize << j) {
            let (s, t) = (i as f64 * len, (i + 1) as f64 * len);
            let h = CMElement::new(k.clone(), vec![s, t], vec![-1.0, 1.0])?;
            let grid: Vec<f64> = (0..=points).map(|m| s + (t - s) * m as f64 / points as f64).collect();
            ratios.push((len, pvar_1d(&h.values_on(&grid), rho)? / len.powf(2.0 * hurst)));
        }
    }
    let hi = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let lo = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(FbmIncrementElementCheck { hurst, ratios, constant: hi, spread: hi / lo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance_models::{bm_cov, dyadic_points};

    #[test]
    fn zero_weights() {
        let h = CMElement::new(bm_cov(), vec![0.3, 0.8], vec![0.0, 0.0]).unwrap();
        assert_eq!(cm_eval(&h, 0.5), 0.0);
        assert_eq!(cm_inner(&h, &h).unwrap(), 0.0);
    }

    #[test]
    fn unit_slope_path() {
        let h = CMElement::new(bm_cov(), vec![1.0], vec![1.0]).unwrap();
        assert_eq!(cm_eval(&h, 0.4), 0.4);
        assert_eq!(cm_inner(&h, &h).unwrap(), 1.0);
        let grid = dyadic_points(4);
        let c = embedding_check(&h, &grid, 0, 16, 1.0).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-12 && (c.rhs - 1.0).abs() < 1e-12);
        assert!(c.holds && c.proved);
    }

    #[test]
    fn kernel_mismatch() {
        let a = CMElement::new(bm_cov(), vec![1.0], vec![1.0]).unwrap();
        let b = CMElement::new(fbm_cov(0.3).unwrap(), vec![1.0], vec![1.0]).unwrap();
        assert_eq!(cm_inner(&a, &b), Err(Error::KernelMismatch));
    }

    #[test]
    fn inner_product_symmetric() {
        let k = fbm_cov(0.4).unwrap();
        let a = CMElement::new(k.clone(), vec![0.2, 0.9], vec![1.5, -0.5]).unwrap();
        let b = CMElement::new(k, vec![0.5], vec![2.0]).unwrap();
        assert!((cm_inner(&a, &b).unwrap() - cm_inner(&b, &a).unwrap()).abs() < 1e-15);
        assert!((cm_inner(&a, &a).unwrap() - cm_norm_squared(&a)).abs() < 1e-14);
    }

    #[test]
    fn fbm_increment_element_scales() {
        let c = fbm_increment_element_check(0.4, 3, 16).unwrap();
        assert!(c.spread < 1.0 + 1e-9, "{c:?}");
    }
}
