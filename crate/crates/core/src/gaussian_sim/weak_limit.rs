use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::ensemble::SampleEnsemble;
use super::moments::{bilinear_second_moment, increment_covariance_matrix, level2_coefficients, level2_iterated};
use crate::covariance_models::{bm_cov, dyadic_points, fbm_cov, kernel_sup_distance, CovarianceKernel, ProcessSpec};
use crate::error::{Error, Result};
use crate::stats::{quantile, MCEstimate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakLimitFunctional {
    /// `E |X^{1,2}_{0,1}|^2`, Brownian value `1/2`.
    Level2,
    /// `E |A_{0,1}|^2` for the Lévy area, Brownian value `1/4`.
    Area,
    /// Upper decile of `X^1_{0,1/2}`, Brownian value `Φ^{-1}(0.9) / √2`.
    Quantile,
}

const QUANTILE_LEVEL: f64 = 0.9;

impl WeakLimitFunctional {
    pub fn brownian_value(self) -> f64 {
        match self {
            WeakLimitFunctional::Level2 => 0.5,
            WeakLimitFunctional::Area => 0.25,
            WeakLimitFunctional::Quantile => {
                Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal").inverse_cdf(QUANTILE_LEVEL)
            }
        }
    }

    fn coefficients(self, m: usize) -> Option<nalgebra::DMatrix<f64>> {
        let c = level2_coefficients(m);
        match self {
            WeakLimitFunctional::Level2 => Some(c),
            WeakLimitFunctional::Area => Some((&c - c.transpose()) * 0.5),
            WeakLimitFunctional::Quantile => None,
        }
    }

    /// Exact expectation on the grid for moment functionals.
    fn discrete_value(self, k: &CovarianceKernel, grid: &[f64]) -> Option<f64> {
        let m = self.coefficients(grid.len() - 1)?;
        let a = increment_covariance_matrix(k, grid);
        Some(bilinear_second_moment(&a, &m, &a))
    }

    fn per_sample(self, ens: &SampleEnsemble, i: usize) -> f64 {
        let x = ens.component(i, 0);
        match self {
            WeakLimitFunctional::Quantile => x[(x.len() - 1) / 2] - x[0],
            _ => {
                let y = ens.component(i, 1);
                let a: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
                let b: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
                let v = if self == WeakLimitFunctional::Level2 {
                    level2_iterated(&a, &b)
                } else {
                    0.5 * (level2_iterated(&a, &b) - level2_iterated(&b, &a))
                };
                v * v
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakLimitRow {
    pub hurst: f64,
    pub estimate: MCEstimate,
    /// Exact expectation of the estimator on the simulation grid.
    pub discrete_value: Option<f64>,
    pub gap: f64,
    /// `|R^H - R_BM|_∞` on the dyadic grid of level 6.
    pub covariance_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakLimitReport {
    pub functional: WeakLimitFunctional,
    pub brownian_value: f64,
    pub grid_points: usize,
    /// Common normals across the ladder plus, for moment functionals, the
    /// Brownian sample with its exact grid mean as control variate.
    pub variance_reduction: String,
    pub rows: Vec<WeakLimitRow>,
    pub gaps_decreasing: bool,
    pub covariance_gaps_decreasing: bool,
    pub final_gap: f64,
}

/// Statistics of planar fBM lifts along a Hurst ladder, compared with
/// their Brownian values.
pub fn weak_limit_fbm(
    ladder: &[f64],
    functional: WeakLimitFunctional,
    level: u32,
    samples: usize,
    seed: u64,
) -> Result<WeakLimitReport> {
    if ladder.is_empty() || ladder.iter().any(|&h| !(h > 0.25 && h < 1.0)) {
        return Err(Error::InvalidParameter("Hurst ladder must lie in (1/4, 1)".into()));
    }
    let grid = dyadic_points(level);
    let coarse = dyadic_points(6);
    let brownian = SampleEnsemble::sample(&ProcessSpec::iid(bm_cov(), 2)?, &grid, samples, seed)?;
    let control_mean = functional.discrete_value(&bm_cov(), &grid);
    let brownian_values: Vec<f64> = (0..samples).into_par_iter().map(|i| functional.per_sample(&brownian, i)).collect();
    let target = functional.brownian_value();
    let rows = ladder
        .iter()
        .map(|&h| {
            let k = fbm_cov(h)?;
            let ens = SampleEnsemble::sample(&ProcessSpec::iid(k.clone(), 2)?, &grid, samples, seed)?;
            let raw: Vec<f64> = (0..samples).into_par_iter().map(|i| functional.per_sample(&ens, i)).collect();
            let estimate = match control_mean {
                Some(mu) => {
                    let adjusted: Vec<f64> = raw.iter().zip(&brownian_values).map(|(x, b)| x - (b - mu)).collect();
                    MCEstimate::from_samples(&adjusted)
                }
                None => {
                    let sd = 0.5f64.powf(h);
                    let z = Normal::new(0.0, sd).expect("valid normal");
                    let qv = quantile(&raw, QUANTILE_LEVEL);
                    let se = (QUANTILE_LEVEL * (1.0 - QUANTILE_LEVEL) / samples as f64).sqrt()
                        / z.pdf(z.inverse_cdf(QUANTILE_LEVEL));
                    MCEstimate { mean: qv, stderr: se, samples }
                }
            };
            Ok(WeakLimitRow {
                hurst: h,
                gap: (estimate.mean - target).abs(),
                estimate,
                discrete_value: functional.discrete_value(&k, &grid),
                covariance_gap: kernel_sup_distance(&k, &bm_cov(), &coarse),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakLimitReport {
        functional,
        brownian_value: target,
        grid_points: grid.len(),
        variance_reduction: if control_mean.is_some() {
            "common random numbers; Brownian control variate with exact grid mean, coefficient 1".into()
        } else {
            "common random numbers".into()
        },
        gaps_decreasing: rows.windows(2).all(|r| r[1].gap < r[0].gap),
        covariance_gaps_decreasing: rows.windows(2).all(|r| r[1].covariance_gap <= r[0].covariance_gap),
        final_gap: rows.last().map_or(f64::NAN, |r| r.gap),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_point_matches_control() {
        let r = weak_limit_fbm(&[0.5], WeakLimitFunctional::Level2, 4, 50, 3).unwrap();
        let row = &r.rows[0];
        // the control variate cancels the Brownian fluctuation exactly
        assert!(row.estimate.stderr < 1e-12);
        assert!((row.estimate.mean - (0.5 - 0.25 / 16.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ladder() {
        assert!(weak_limit_fbm(&[0.2, 0.5], WeakLimitFunctional::Area, 3, 4, 1).is_err());
    }

    #[test]
    fn quantile_target() {
        assert!((WeakLimitFunctional::Quantile.brownian_value() - 1.2815515655446004 / 2f64.sqrt()).abs() < 1e-9);
    }
}
