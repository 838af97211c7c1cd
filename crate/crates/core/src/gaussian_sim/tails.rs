use rayon::prelude::*;
use serde::Serialize;

use super::ensemble::SampleEnsemble;
use crate::error::Result;
use crate::regularity_analysis::{chaos_ratio_check, ChaosRatioReport};
use crate::stats::{quantile, regression_slope, MCEstimate};
use crate::tensor_algebra::{hall_log_signature, GroupElement};

#[derive(Clone, Debug, Serialize)]
pub struct FerniqueReport {
    pub p: f64,
    pub norm: MCEstimate,
    /// `(λ, P(‖X‖ > λ))` at the fitted thresholds.
    pub tail: Vec<(f64, f64)>,
    /// Slope of `log P(‖X‖ > λ)` against `λ^2`.
    pub tail_slope: f64,
    pub eta_hat: f64,
    pub chaos: Vec<ChaosRatioReport>,
    /// All norms vanish (zero kernel).
    pub degenerate: bool,
}

pub const TAIL_QUANTILES: [f64; 9] = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99, 0.995];
pub const CHAOS_MOMENTS: [u32; 3] = [4, 6, 8];

/// Empirical tail of `‖S_3(X)‖_{p-var}` and hypercontractivity ratios of
/// the log-signature coordinates over `[0, 1]`.
pub fn fernique_tail(ens: &SampleEnsemble, p: f64) -> Result<FerniqueReport> {
    let per_sample: Vec<(f64, [f64; 3])> = (0..ens.len())
        .into_par_iter()
        .map(|i| {
            let lift = ens.path(i).lift_s3();
            Ok((lift.pvar_norm(p)?, chaos_coordinates(lift.last())?))
        })
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
    let n = norms.len() as f64;
    let degenerate = norms.iter().all(|&v| v == 0.0);
    let mut tail = Vec::new();
    if !degenerate {
        for &q in &TAIL_QUANTILES {
            let lambda = quantile(&norms, q);
            let count = norms.iter().filter(|&&v| v > lambda).count();
            if count > 0 {
                tail.push((lambda, count as f64 / n));
            }
        }
    }
    let tail_slope = if tail.len() >= 2 {
        let xs: Vec<f64> = tail.iter().map(|t| t.0 * t.0).collect();
        let ys: Vec<f64> = tail.iter().map(|t| t.1.ln()).collect();
        regression_slope(&xs, &ys)
    } else {
        f64::NEG_INFINITY
    };
    let coords: Vec<[f64; 3]> = per_sample.iter().map(|s| s.1).collect();
    let chaos = chaos_ratios(&coords, &CHAOS_MOMENTS);
    Ok(FerniqueReport {
        p,
        norm: MCEstimate::from_samples(&norms),
        tail,
        eta_hat: -tail_slope,
        tail_slope,
        chaos,
        degenerate,
    })
}


/// One Hall coordinate per level of `log S_3(X)_{0,1}`: `x^1`, the area
/// `A^{12}` and the first bracket of level three (zero when `d = 1`).
pub fn chaos_coordinates(g: &GroupElement<f64>) -> Result<[f64; 3]> {
    let log = hall_log_signature(g)?;
    let area = if g.dim() >= 2 { log.area(0, 1) } else { 0.0 };
    let bracket = log.level3().first().copied().unwrap_or(0.0);
    Ok([log.level1()[0], area, bracket])
}

/// Coordinates of every sample's lift over `[0, 1]`.
pub fn ensemble_chaos_coordinates(ens: &SampleEnsemble) -> Result<Vec<[f64; 3]>> {
    (0..ens.len()).into_par_iter().map(|i| chaos_coordinates(ens.path(i).lift_s3().last())).collect()
}

/// Hypercontractivity ratios for each level and moment, skipping levels
/// whose coordinate vanishes identically.
pub fn chaos_ratios(coords: &[[f64; 3]], moments: &[u32]) -> Vec<ChaosRatioReport> {
    let mut out = Vec::new();
    for level in 1..=3usize {
        let z: Vec<f64> = coords.iter().map(|c| c[level - 1]).collect();
        for &q in moments {
            let c = chaos_ratio_check(&z, level, q);
            if !c.degenerate {
                out.push(c);
            }
        }
    }
    out
}
