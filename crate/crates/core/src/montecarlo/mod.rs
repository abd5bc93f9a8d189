//! Replicated simulation-estimation experiments and distributional checks of
//! the limit theorems.

pub mod experiment;
pub mod ks;
pub mod verify;

pub use experiment::{
    run_experiment, run_experiment_with_noise, CheckName, ExcludedReplication, ExperimentConfig, ExperimentReport,
    HorizonSummary, NoiseSource, Provenance, ReplicationRow, SCHEMA_VERSION,
};
pub use ks::{kolmogorov_survival, ks_one_sample, ks_two_sample, normal_cdf, KsResult, MIN_SAMPLES};
pub use verify::{verify_samples, verify_theorem, Verdict, VerifyInput, VerifyOptions};
