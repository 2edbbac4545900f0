//! The deconvolution estimator `f̂_n(x) = (|Λ| b)^{-1} Σ_i g_n((x − Y_i)/b)`,
//! with `g_n(z) = (2π)^{-1} ∫ e^{-itz} φ_K(t) / φ_θ(t/b) dt`.

mod estimator;
mod gn;
mod kernel;

pub use estimator::{
    empirical_cf, estimate_cf_form, estimate_direct, DensityEstimate, EstimateMeta, EstimatorForm,
    TABULATION_THRESHOLD,
};
pub use gn::{GnTable, GN_NODES, GN_SELF_CHECK_NODES, Z_DIRECT_MAX};
pub use kernel::DeconvKernel;
