//! Monte Carlo experiments: replicate simulation, centering and
//! standardization, and the statistical verdicts built on them.
//!
//! Statistics are centered at the replicate mean of `f̂_n(x)`, not at the
//! true density: the limit theorems concern `f̂_n − E f̂_n`.

mod config;
mod run;
mod stats;

pub use config::{
    Admissibility, CheckReport, Checks, Experiment, ExperimentConfig, Theorem, MIN_REPLICATES, SCHEMA_VERSION,
};
pub use run::{
    bias_curve, convolved_density, joint_diagonality, quadrature_mean, run_experiment, run_validated,
    variance_scaling_curve, BiasRow, CltReport, DiagonalityVerdict, FySource, PointSummary, RegionReport,
    Verdict, DEFAULT_FY_SAMPLE_SITES,
};
pub use stats::{correlation_matrix, kolmogorov_tail, ks_normality, mean, variance, KsResult, KS_MIN_SAMPLES};
