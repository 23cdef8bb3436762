//! Upper bounds from coalescence of the extremal trajectories.
//!
//! d(t) ≤ P[T > t] for the coalescence time T of the maximal and minimal
//! trajectories, so the (1−ε)-quantile of T bounds t_mix(ε) from above.

use serde::Serialize;

use crate::dynamics::{default_max_time, run_coalescence, CoalescenceMode, CoalescenceRecord};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::profile::ConductanceProfile;
use crate::stats::{proportion, Estimate, MeanVar};

#[derive(Clone, Debug, Serialize)]
pub struct CoalescenceSample {
    pub seed: u64,
    pub max_time: f64,
    pub records: Vec<CoalescenceRecord>,
}

impl CoalescenceSample {
    pub fn run(p: &ConductanceProfile, k: usize, replicas: usize, seed: u64, max_time: Option<f64>) -> Result<Self> {
        if replicas == 0 {
            return Err(Error::param("at least one replica is needed"));
        }
        let max_time = match max_time {
            Some(t) => t,
            None => default_max_time(p, k)?,
        };
        let records = map_indexed(replicas, |r| run_coalescence(p, k, CoalescenceMode::TopBottom, max_time, seed, r as u64));
        Ok(Self { seed, max_time, records: records.into_iter().collect::<Result<_>>()? })
    }

    pub fn replicas(&self) -> usize {
        self.records.len()
    }

    pub fn censored(&self) -> usize {
        self.records.iter().filter(|r| r.censored).count()
    }

    /// Empirical P[T > t].
    pub fn survival(&self, t: f64) -> Estimate {
        proportion(self.records.iter().filter(|r| r.t > t).count() as u64, self.records.len() as u64)
    }

    pub fn mean(&self) -> Estimate {
        self.records.iter().map(|r| r.t).collect::<MeanVar>().estimate()
    }

    /// Smallest sample time t with empirical P[T > t] ≤ ε. Fails when that
    /// order statistic was censored.
    pub fn upper_quantile(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("eps = {eps} outside (0, 1)")));
        }
        let mut times: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        times.sort_by(f64::total_cmp);
        let m = times.len();
        // Need #{T > t} ≤ ε m, i.e. t ≥ the (m − ⌊εm⌋)-th order statistic.
        let idx = m - (eps * m as f64).floor() as usize - 1;
        let q = times[idx];
        if q >= self.max_time {
            return Err(Error::Bracket(format!(
                "the (1-{eps}) quantile is censored at {}; raise max_time",
                self.max_time
            )));
        }
        Ok(q)
    }
}
