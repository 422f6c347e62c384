//! Linear algebra, distribution functions and random streams.

mod linalg;
mod rng;
mod special;

pub use linalg::{
    dot, norm, sym_eigen, sym_inverse, sym_inverse_with, sym_pseudoinverse, sym_rank, Cholesky,
    EigenDecomposition, SymMatrix, DEFAULT_COND_THRESHOLD, MAX_JACOBI_DIM,
};
pub(crate) use linalg::pseudoinverse_from;
pub(crate) use special::normal_isf_ln;
pub use rng::{
    random_spd, rng_multivariate_normal, rng_standard_normal, rng_uniform, MultivariateNormal,
    RngStream, StreamRng,
};
pub use special::{
    chi_cdf, chi_quantile, chi_sf, std_normal_cdf, std_normal_isf, std_normal_log_sf,
    std_normal_quantile, std_normal_sf, truncated_normal_cdf, truncated_normal_sf,
};
