//! Truncated signatures, 2D variation of covariances and lifted Gaussian
//! processes.

pub mod cameron_martin;
pub mod covariance_models;
pub mod error;
pub mod gaussian_sim;
pub mod path_lift;
pub mod regularity_analysis;
pub mod scalar;
pub mod stats;
pub mod tensor_algebra;
pub mod variation_1d;
pub mod variation_2d;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = tensor_algebra::TruncatedTensor<f64>;
pub type Group = tensor_algebra::GroupElement<f64>;
pub type Lie = tensor_algebra::LieElement<f64>;
pub type Path = path_lift::PiecewisePath<f64>;
pub type LiftedPath = path_lift::GroupPath<f64>;
pub type Grid2D = variation_2d::GridFunction2D<f64>;

pub type Tensor32 = tensor_algebra::TruncatedTensor<f32>;
pub type Group32 = tensor_algebra::GroupElement<f32>;
pub type Lie32 = tensor_algebra::LieElement<f32>;
pub type Path32 = path_lift::PiecewisePath<f32>;
pub type LiftedPath32 = path_lift::GroupPath<f32>;
pub type Grid2D32 = variation_2d::GridFunction2D<f32>;
