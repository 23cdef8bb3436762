use serde::Serialize;

use super::clock::ClockMode;
use super::ensemble::CoupledEnsemble;
use crate::config::{Configuration, Extremal};
use crate::error::Result;
use crate::profile::ConductanceProfile;
use crate::rng::{self, Purpose};
use crate::spectral::spectral_gap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoalescenceMode {
    TopBottom,
    TopVsStationary,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct CoalescenceRecord {
    /// min(T, max_time) for the ∧ and ∨ trajectories.
    pub t: f64,
    /// Coalescence of ∧ with the stationary trajectory, if tracked.
    pub t1: Option<f64>,
    /// Coalescence of ∨ with the stationary trajectory, if tracked.
    pub t2: Option<f64>,
    pub censored: bool,
    pub event_count: u64,
}

/// 20 · (1/λ_1) · log max(k, 2).
pub fn default_max_time(p: &ConductanceProfile, k: usize) -> Result<f64> {
    Ok(20.0 / spectral_gap(p)? * (k.max(2) as f64).ln())
}

/// One coalescence run for replica `replica` of `seed`.
pub fn run_coalescence(
    p: &ConductanceProfile,
    k: usize,
    mode: CoalescenceMode,
    max_time: f64,
    seed: u64,
    replica: u64,
) -> Result<CoalescenceRecord> {
    let n = p.n_sites();
    let mut starts = vec![Configuration::extremal(n, k, Extremal::Max)?, Configuration::extremal(n, k, Extremal::Min)?];
    if mode == CoalescenceMode::TopVsStationary {
        starts.push(Configuration::uniform(n, k, &mut rng::stream(seed, Purpose::Stationary, replica)));
    }
    let mut e = CoupledEnsemble::new(p, &starts, ClockMode::PerColumn, rng::stream(seed, Purpose::Clock, replica))?;
    let main = e.track_pair(0, 1);
    let side = if mode == CoalescenceMode::TopVsStationary { Some((e.track_pair(0, 2), e.track_pair(1, 2))) } else { None };
    let mut t1 = side.and_then(|(a, _)| (e.mismatch(a) == 0).then_some(0.0));
    let mut t2 = side.and_then(|(_, b)| (e.mismatch(b) == 0).then_some(0.0));
    if e.mismatch(main) == 0 {
        return Ok(CoalescenceRecord { t: 0.0, t1: side.map(|_| 0.0), t2: side.map(|_| 0.0), censored: false, event_count: 0 });
    }
    while let Some(out) = e.step(max_time)? {
        if !out.any_flip() {
            continue;
        }
        if let Some((a, b)) = side {
            if t1.is_none() && e.mismatch(a) == 0 {
                t1 = Some(out.ring.t);
            }
            if t2.is_none() && e.mismatch(b) == 0 {
                t2 = Some(out.ring.t);
            }
        }
        if e.mismatch(main) == 0 {
            return Ok(CoalescenceRecord { t: out.ring.t, t1, t2, censored: false, event_count: e.rings() });
        }
    }
    Ok(CoalescenceRecord { t: max_time, t1, t2, censored: true, event_count: e.rings() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_k_zero() {
        let p = ConductanceProfile::homogeneous(5).unwrap();
        let r = run_coalescence(&p, 0, CoalescenceMode::TopBottom, 10.0, 1, 0).unwrap();
        assert_eq!(r.t, 0.0);
        assert!(!r.censored);
    }

    #[test]
    fn stationary_times_bounded_by_t() {
        let p = ConductanceProfile::homogeneous(10).unwrap();
        for rep in 0..20 {
            let r = run_coalescence(&p, 5, CoalescenceMode::TopVsStationary, 1e4, 3, rep).unwrap();
            assert!(!r.censored);
            let (a, b) = (r.t1.unwrap(), r.t2.unwrap());
            assert!(a <= r.t && b <= r.t);
            assert_eq!(r.t, a.max(b));
        }
    }
}
