//! Lower and upper mixing-time estimates along a ladder of system sizes.

use std::f64::consts::PI;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, RunOutput};
use crate::config::binomial;
use crate::error::{Error, Result};
use crate::estimators::{wilson_lower_estimate, CoalescenceSample, WilsonParams};
use crate::exact::{build_chain_with_budget, mix_exact, Starts, DEFAULT_TOL};
use crate::rng::derive_seed;
use crate::spectral::{solve_extended, spectral_gap};

/// Exact curves use every start up to this many states, the two extremal
/// starts above it.
pub const ALL_STARTS_LIMIT: u128 = 2_000;

#[derive(Clone, Debug, Serialize)]
pub struct CutoffRow {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub lambda1: f64,
    pub lambda_bar: f64,
    pub lower: f64,
    pub lower_resolution: f64,
    pub lower_flagged: bool,
    pub upper: f64,
    pub upper_censored: usize,
    /// log k/(2λ_1).
    pub predicted_gap: f64,
    /// N² log k/(2π²).
    pub predicted_scaling: f64,
    pub exact_tmix: Option<f64>,
    pub wilson_seed: u64,
    pub coalescence_seed: u64,
}

impl CutoffRow {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }

    pub fn brackets_prediction(&self) -> bool {
        self.lower <= self.predicted_scaling && self.predicted_scaling <= self.upper
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutoffReport {
    pub rows: Vec<CutoffRow>,
}

impl CutoffReport {
    /// For each ε, upper/lower never increases along the ladder.
    pub fn ratio_nonincreasing(&self) -> bool {
        let mut eps: Vec<f64> = self.rows.iter().map(|r| r.eps).collect();
        eps.dedup();
        eps.iter().all(|&e| {
            let ratios: Vec<f64> = self.rows.iter().filter(|r| r.eps == e).map(CutoffRow::ratio).collect();
            ratios.windows(2).all(|w| w[1] <= w[0])
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.rows.iter().flat_map(|r| [r.wilson_seed, r.coalescence_seed]).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

pub const CUTOFF_HEADERS: [&str; 14] = [
    "n",
    "k",
    "eps",
    "lambda1",
    "lambda_bar",
    "lower",
    "lower_resolution",
    "lower_flagged",
    "upper",
    "upper_censored",
    "predicted_gap",
    "predicted_scaling",
    "exact_tmix",
    "ratio",
];

fn csv_row(r: &CutoffRow) -> Vec<String> {
    vec![
        r.n.to_string(),
        r.k.to_string(),
        fmt_f64(r.eps),
        fmt_f64(r.lambda1),
        fmt_f64(r.lambda_bar),
        fmt_f64(r.lower),
        fmt_f64(r.lower_resolution),
        r.lower_flagged.to_string(),
        fmt_f64(r.upper),
        r.upper_censored.to_string(),
        fmt_f64(r.predicted_gap),
        fmt_f64(r.predicted_scaling),
        r.exact_tmix.map(fmt_f64).unwrap_or_default(),
        fmt_f64(r.ratio()),
    ]
}

/// Run the ladder. With `out`, `cutoff.csv` is rewritten after every N so a
/// failure keeps the rows already finished.
pub fn run_cutoff_profile(cfg: &ExperimentConfig, mut out: Option<&mut RunOutput>) -> Result<CutoffReport> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_ladder {
        let p = cfg.profile.build(n)?;
        let k = cfg.k_rule.k(n);
        if k < 2 {
            return Err(Error::param(format!("the cutoff study needs k >= 2, got k = {k} at N = {n}")));
        }
        let lambda1 = spectral_gap(&p)?;
        let lambda_bar = solve_extended(&p, cfg.delta)?.lambda_bar;
        let log_k = (k as f64).ln();
        let wilson_seed = derive_seed(cfg.seed, 2 * n as u64);
        let coalescence_seed = derive_seed(cfg.seed, 2 * n as u64 + 1);
        let sample = CoalescenceSample::run(&p, k, cfg.replicas.coalescence, coalescence_seed, None)?;
        let exact = if binomial(n, k) <= cfg.state_budget as u128 {
            let chain = build_chain_with_budget(&p, k, cfg.state_budget)?;
            let starts = if binomial(n, k) <= ALL_STARTS_LIMIT { Starts::All } else { Starts::ExtremalOnly };
            Some(mix_exact(&chain, &cfg.eps, starts, 200, DEFAULT_TOL)?)
        } else {
            None
        };
        for (j, &eps) in cfg.eps.iter().enumerate() {
            let params = WilsonParams::new(&p, k, eps, cfg.replicas.wilson, wilson_seed)?;
            let w = wilson_lower_estimate(&p, k, &params)?;
            rows.push(CutoffRow {
                n,
                k,
                eps,
                lambda1,
                lambda_bar,
                lower: w.estimate,
                lower_resolution: w.resolution,
                lower_flagged: w.flagged,
                upper: sample.upper_quantile(eps)?,
                upper_censored: sample.censored(),
                predicted_gap: log_k / (2.0 * lambda1),
                predicted_scaling: (n * n) as f64 * log_k / (2.0 * PI * PI),
                exact_tmix: exact.as_ref().map(|e| e.mixing[j].1),
                wilson_seed,
                coalescence_seed,
            });
        }
        if let Some(o) = out.as_deref_mut() {
            o.csv("cutoff.csv", &CUTOFF_HEADERS, rows.iter().map(csv_row))?;
        }
    }
    Ok(CutoffReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::parse_value;

    #[test]
    fn small_ladder_brackets_exact() {
        let cfg = ExperimentConfig::load(
            None,
            &[
                ("n_ladder".into(), parse_value("[8]")),
                ("replicas.wilson".into(), parse_value("400")),
                ("replicas.coalescence".into(), parse_value("400")),
                ("profile".into(), parse_value(r#"{"kind":"homogeneous"}"#)),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut out = RunOutput::new(dir.path()).unwrap();
        let rep = run_cutoff_profile(&cfg, Some(&mut out)).unwrap();
        let r = &rep.rows[0];
        let exact = r.exact_tmix.unwrap();
        assert!(r.lower <= exact && exact <= r.upper, "{r:?}");
        assert!(dir.path().join("cutoff.csv").exists());
    }
}
