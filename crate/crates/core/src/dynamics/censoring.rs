use std::collections::HashSet;

use serde::Serialize;

use crate::config::skeleton_columns;
use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;
use crate::spectral::solve_extended;

/// Blocked centers: whole columns and individual (column, level) pairs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BlockedSet {
    pub columns: Vec<usize>,
    pub centers: HashSet<(usize, usize)>,
}

impl BlockedSet {
    pub fn columns(columns: Vec<usize>) -> Self {
        Self { columns, centers: HashSet::new() }
    }

    pub fn contains(&self, x: usize, level: usize) -> bool {
        self.columns.contains(&x) || self.centers.contains(&(x, level))
    }
}

/// Piecewise-constant blocked sets on right-open time intervals.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CensoringScheme {
    intervals: Vec<(f64, f64, BlockedSet)>,
}

impl CensoringScheme {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Add `blocked` on [start, end). Intervals must not overlap.
    pub fn with_interval(mut self, start: f64, end: f64, blocked: BlockedSet) -> Result<Self> {
        if !(start < end) {
            return Err(Error::param(format!("censoring interval [{start}, {end}) is empty")));
        }
        if self.intervals.iter().any(|(a, b, _)| start < *b && *a < end) {
            return Err(Error::param("censoring intervals overlap"));
        }
        self.intervals.push((start, end, blocked));
        self.intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(self)
    }

    /// Block every center of every column on [0, horizon).
    pub fn block_everything(n: usize, horizon: f64) -> Self {
        Self::empty().with_interval(0.0, horizon, BlockedSet::columns((1..n).collect())).expect("single interval")
    }

    /// Block the skeleton columns ⌈iδN⌉ during [t_{δ/2}, t_δ).
    pub fn skeleton(p: &ConductanceProfile, k: usize, delta: f64) -> Result<Self> {
        let ext = solve_extended(p, delta)?;
        let log_k = (k.max(2) as f64).ln();
        let t_half = (1.0 + delta / 2.0) / (2.0 * ext.lambda_bar) * log_k;
        let t_delta = (1.0 + delta) / (2.0 * ext.lambda_bar) * log_k;
        let cols = skeleton_columns(p.n_sites(), delta)?;
        Self::empty().with_interval(t_half, t_delta, BlockedSet::columns(cols))
    }

    pub fn intervals(&self) -> &[(f64, f64, BlockedSet)] {
        &self.intervals
    }

    pub fn is_blocked(&self, t: f64, x: usize, level: usize) -> bool {
        self.intervals.iter().any(|(a, b, set)| *a <= t && t < *b && set.contains(x, level))
    }
}
