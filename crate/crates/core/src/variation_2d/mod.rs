//! Rectangular increments, 2D `rho`-variation, 2D controls and the 2D
//! Young integral.

mod control;
mod grid;
mod rho;
mod young;

pub use control::{control_from_variation, Control2D, SplitAxis};
pub use grid::{GridFunction2D, GridRect};
pub use rho::{
    rho_prime_limit_check, rho_variation, rho_variation_with, BoundKind, RhoPrimeTable, RhoVariation, VariationMode,
    VariationOptions,
};
pub use young::{
    riemann_zeta, young_bound_check, young_constant, young_integral_2d, young_refinement, Surface, YoungBoundCheck,
    YoungIntegral, DEFAULT_REFINEMENT_LEVELS,
};
