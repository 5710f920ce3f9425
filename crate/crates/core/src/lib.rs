//! AR(1) processes driven by long-memory Gaussian noise: exact simulation,
//! the second-moment estimator of the autoregressive coefficient, and the
//! quantities governing its limit theorems.

pub mod ar1;
pub mod asymptotics;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod gaussian_sim;
pub mod moments;
pub mod rng;
pub mod special;

pub use ar1::{coupled_paths, decompose_check, generate_x_path, generate_y_path, Ar1Model, XPathSampler, YPathSampler};
pub use asymptotics::{
    asclt_log_average, berry_esseen_rate, breuer_major_vn, dtv_fourth_moment_bound, normalized_error,
    running_estimates, RateBranch, RateCurve,
};
pub use covariance::{cov_arfima, cov_fgn, duality_constant, CovarianceModel, NoiseKind};
pub use error::{LmarError, Result};
pub use experiments::{ks_distance, run_experiment, ExperimentConfig, ExperimentKind, ExperimentResult};
pub use gaussian_sim::{plan_embedding, sample_stationary, sample_stationary_fallback, EmbeddingPlan, PathKind, SamplePath};
pub use moments::{MomentContext, TruncationPolicy};
