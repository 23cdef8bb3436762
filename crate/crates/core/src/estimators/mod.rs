//! Monte Carlo estimators. Every result carries its replica count, standard
//! error and seed, and rerunning with the same seed reproduces it exactly.

mod area;
mod bracket;
mod coupling;
mod covariance;
mod heat;
mod wilson;

pub use area::{area_supermartingale_audit, AreaFunctional, AreaParams, AreaReport, AreaRow, DecayCheck};
pub use bracket::{bracket_variance, BracketReport};
pub use coupling::CoalescenceSample;
pub use covariance::{
    two_phase_covariance_audit, two_phase_moments, CovarianceMode, CovarianceReport, DEFAULT_COVARIANCE_BUDGET,
};
pub use heat::{heat_envelope, heat_mean_check, HeatReport};
pub use wilson::{
    two_phase_marginals, uniform_grid, wilson_lower_estimate, wilson_trajectories, ThresholdRule, WilsonParams,
    WilsonReport, WilsonRow, WilsonStart, WilsonStatistic,
};
