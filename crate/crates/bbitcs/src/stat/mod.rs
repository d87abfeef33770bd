//! Numeric foundation: Gaussian special functions, seed-stable random
//! streams and small dense linear algebra.

pub mod linalg;
pub mod rng;
pub mod special;

pub use linalg::{
    dot, norm2, spd_solve, spd_sqrt, symmetric_eigen, truncated_svd, LinalgError, Matrix, Svd,
};
pub use rng::{mix_seed, RandomStream};
pub use special::{
    erf, erfc, erfc_inv, normal_cdf, normal_interval_prob, normal_pdf, normal_quantile,
    SpecialError,
};
