use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::SampleEnsemble;
use crate::covariance_models::{dyadic_points, gram_matrix_unchecked, ProcessSpec};
use crate::error::{Error, Result};
use crate::path_lift::{holder_dist, pvar_dist};
use crate::stats::{regression_slope, MCEstimate};

#[derive(Clone, Debug, Serialize)]
pub struct DyadicConvergenceReport {
    pub p: f64,
    pub reference_level: u32,
    pub levels: Vec<u32>,
    /// `d_{1/p-Höl}(S_3(X^{D_n}), reference)` per level.
    pub distances: Vec<MCEstimate>,
    /// `sqrt(E d^2)` per level.
    pub l2: Vec<f64>,
    /// Fitted log2-slope of the mean distance against the level.
    pub mean_slope: f64,
    pub l2_slope: f64,
}

/// Hölder distance between lifts of the dyadic interpolations of level
/// `first..=last` and the lift on the reference grid of level `last + 1`.
pub fn dyadic_convergence(
    spec: &ProcessSpec,
    p: f64,
    first: u32,
    last: u32,
    samples: usize,
    seed: u64,
) -> Result<DyadicConvergenceReport> {
    if first > last || p <= 2.0 * spec.rho() {
        return Err(Error::InvalidParameter(format!("need first <= last and p > 2 rho, got p = {p}")));
    }
    let reference_level = last + 1;
    let fine = dyadic_points(reference_level);
    let ens = SampleEnsemble::sample(spec, &fine, samples, seed)?;
    let levels: Vec<u32> = (first..=last).collect();
    let alpha = 1.0 / p;
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let path = ens.path(i);
            let reference = path.lift_s3();
            levels
                .iter()
                .map(|&n| {
                    let step = 1usize << (reference_level - n);
                    let idx: Vec<usize> = (0..fine.len()).step_by(step).collect();
                    let approx = path.restrict(&idx).and_then(|c| c.refine(&fine)).expect("dyadic sub-grid");
                    holder_dist(&approx.lift_s3(), &reference, alpha).expect("same grid")
                })
                .collect()
        })
        .collect();
    let distances: Vec<MCEstimate> = (0..levels.len())
        .map(|l| MCEstimate::from_samples(&per_sample.iter().map(|d| d[l]).collect::<Vec<_>>()))
        .collect();
    let l2: Vec<f64> = (0..levels.len())
        .map(|l| MCEstimate::from_samples(&per_sample.iter().map(|d| d[l] * d[l]).collect::<Vec<_>>()).mean.sqrt())
        .collect();
    let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    let slope = |v: &[f64]| {
        if v.len() < 2 {
            f64::NAN
        } else {
            regression_slope(&xs, &v.iter().map(|x| x.log2()).collect::<Vec<_>>())
        }
    };
    Ok(DyadicConvergenceReport {
        p,
        reference_level,
        levels,
        mean_slope: slope(&distances.iter().map(|d| d.mean).collect::<Vec<_>>()),
        l2_slope: slope(&l2),
        distances,
        l2,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationRow {
    pub eps: f64,
    /// `|R_{X-Y}|_∞ = eps^2 |R_W|_∞` on the grid.
    pub covariance_gap: f64,
    pub distance: MCEstimate,
    pub l2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub p: f64,
    pub rows: Vec<PerturbationRow>,
    pub strictly_decreasing: bool,
    /// Log-log slope of the mean distance against the covariance gap.
    pub theta_hat: f64,
}

/// `d_{p-var}` between the lifts of `X` and `Y = X + eps W`, `W` an
/// independent copy of `X`, along a ladder of `eps`.
pub fn perturbation_continuity(
    spec: &ProcessSpec,
    eps_ladder: &[f64],
    p: f64,
    grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<PerturbationReport> {
    if p <= 2.0 * spec.rho() {
        return Err(Error::InvalidParameter(format!("need p > 2 rho, got p = {p}")));
    }
    let x = SampleEnsemble::sample_channel(spec, grid, samples, seed, 0)?;
    let w = SampleEnsemble::sample_channel(spec, grid, samples, seed, 1)?;
    let w_sup = spec
        .kernels()
        .iter()
        .map(|k| gram_matrix_unchecked(k, grid).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0, f64::max);
    let x_lifts = super::ensemble::lift_ensemble(&x);
    let rows = eps_ladder
        .iter()
        .map(|&eps| {
            let y = x.perturbed(&w, eps)?;
            let d: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| pvar_dist(&x_lifts[i], &y.path(i).lift_s3(), p).expect("same grid"))
                .collect();
            let sq: Vec<f64> = d.iter().map(|v| v * v).collect();
            Ok(PerturbationRow {
                eps,
                covariance_gap: eps * eps * w_sup,
                distance: MCEstimate::from_samples(&d),
                l2: MCEstimate::from_samples(&sq).mean.sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = rows.windows(2).all(|r| r[1].distance.mean < r[0].distance.mean);
    let fit: Vec<&PerturbationRow> = rows.iter().filter(|r| r.covariance_gap > 0.0 && r.distance.mean > 0.0).collect();
    let theta_hat = if fit.len() >= 2 {
        let xs: Vec<f64> = fit.iter().map(|r| r.covariance_gap.ln()).collect();
        let ys: Vec<f64> = fit.iter().map(|r| r.distance.mean.ln()).collect();
        regression_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(PerturbationReport { p, rows, strictly_decreasing, theta_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance_models::bm_cov;

    #[test]
    fn zero_perturbation_gives_zero_distance() {
        let spec = ProcessSpec::iid(bm_cov(), 2).unwrap();
        let r = perturbation_continuity(&spec, &[0.0, 0.1], 2.5, &dyadic_points(3), 8, 4).unwrap();
        assert_eq!(r.rows[0].distance.mean, 0.0);
        assert!(r.rows[1].distance.mean > 0.0);
    }

    #[test]
    fn small_convergence_run() {
        let spec = ProcessSpec::iid(bm_cov(), 2).unwrap();
        let r = dyadic_convergence(&spec, 2.5, 1, 3, 8, 5).unwrap();
        assert_eq!(r.levels, vec![1, 2, 3]);
        assert!(r.distances.iter().all(|d| d.mean > 0.0));
        assert!(dyadic_convergence(&spec, 2.0, 1, 3, 8, 5).is_err());
    }
}
