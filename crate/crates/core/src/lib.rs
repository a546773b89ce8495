//! Positive-solution branches of the one-dimensional Emden–Fowler problem
//! with the logarithmic Kirchhoff coefficient
//!
//! ```text
//! −log(a‖u'‖₂² + b‖u‖₂² + 1) u'' = λ u^p  on (0, 1),   u(0) = u(1) = 0.
//! ```
//!
//! Every solution is a multiple of the ground profile `W_p` of `−W'' = W^p`,
//! so the branch structure reduces to the scalar equation
//! `log(dt + 1) / t^((p−1)/2) = λ ‖W_p‖₂^(1−p)` in `t = ‖u‖₂²`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; reference
// constants are quoted at the precision they were computed to.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod quadrature;
pub mod roots;
pub mod special_integrals;
pub mod emden_fowler;
pub mod scalar_map;
pub mod asymptotics;
pub mod reduction;
pub mod oracle_bvp;
pub mod cli;

pub use error::{Error, Result};
