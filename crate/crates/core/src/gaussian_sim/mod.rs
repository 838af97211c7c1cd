//! Seeded simulation of Gaussian processes on grids, their step-3 lifts
//! and Monte Carlo checks.

mod convergence;
mod ensemble;
mod moments;
mod tails;
mod weak_limit;

pub use convergence::{
    dyadic_convergence, perturbation_continuity, DyadicConvergenceReport, PerturbationReport, PerturbationRow,
};
pub use ensemble::{interpolation_covariance_gap, lift_ensemble, GramFactor, SampleEnsemble, CLIPPED_MASS_TOLERANCE};
pub use moments::{
    bilinear_second_moment, discrete_level2_moment, increment_covariance_matrix, level2_coefficients, level2_iterated,
    level2_variance_check, level2_young_value, level_bounds_check, product_moment_surface, young_wiener_check,
    Level2VarianceReport, LevelBoundsReport, WordMoments, YoungWienerReport,
};
pub use tails::{
    chaos_coordinates, chaos_ratios, ensemble_chaos_coordinates, fernique_tail, FerniqueReport, CHAOS_MOMENTS,
    TAIL_QUANTILES,
};
pub use weak_limit::{weak_limit_fbm, WeakLimitFunctional, WeakLimitReport, WeakLimitRow};

pub use crate::stats::MCEstimate;
