//! Truncated tensor algebra `T^3(R^d)`, the free step-3 nilpotent group and
//! Hall coordinates on its Lie algebra.

mod bch;
mod lie;
mod tensor;

pub use bch::{bch_bound_check, conjugation_ratio, lie_level_norm, BchBound};
pub use lie::{hall_log_signature, HallBasis, LieElement};
pub(crate) use tensor::increment_distance;
pub use tensor::{
    cc_distance, dilate, exp_trunc, group_inverse, homogeneous_norm, log_tensor, log_trunc, tensor_mul, GroupElement,
    TruncatedTensor, GROUP_LIKE_TOLERANCE,
};
