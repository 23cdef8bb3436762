//! Run configuration, atomic outputs, the cutoff sweep and self-checks.

pub mod config;
pub mod cutoff;
pub mod output;
pub mod verify;

pub use config::{
    parse_value, set_key, CoalesceSettings, EstimateKind, EstimateSettings, ExperimentConfig, KRule, MixExactSettings,
    ProfileSource, Replicas, SimulateSettings, SpectrumSettings, VerifySettings,
};
pub use cutoff::{run_cutoff_profile, CutoffReport, CutoffRow, ALL_STARTS_LIMIT, CUTOFF_HEADERS};
pub use output::{atomic_write, config_hash, csv_bytes, fmt_f64, git_revision, write_csv, Manifest, RunOutput};
pub use verify::{run_verify, CheckResult, Suite, VerifyReport};
