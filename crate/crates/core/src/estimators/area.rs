//! Weighted area between the maximal trajectory and an equilibrium one.
//!
//! With Ḡ(x) = G(x) − G(x+1) > 0 from the embedded segment, F(ξ) = Σ h^ξ(x)Ḡ(x)
//! and A_t = [F(η_t^∧) − F(η_t^μ)]/δ̄_min. Under the monotone coupling A_t ≥ 0,
//! it vanishes exactly at coalescence, and e^{λ̄_1 t}A_t is a supermartingale.

use serde::Serialize;

use crate::config::{Configuration, Extremal, HeightFunction};
use crate::dynamics::{ClockMode, CoupledEnsemble, Member};
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::profile::ConductanceProfile;
use crate::rng::{stream, Purpose};
use crate::spectral::{solve_extended, ExtendedEigenData};
use crate::stats::{proportion, Estimate, MeanVar};

#[derive(Clone, Debug, Serialize)]
pub struct AreaParams {
    pub delta: f64,
    /// Defaults to t_δ = (1+δ) log k/(2λ̄_1).
    pub horizon: Option<f64>,
    pub grid_points: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Exponent ε in the run-length level N k^{-1} (log N)^{1+ε}.
    pub q_eps: f64,
    pub stationary_samples: usize,
    pub sigmas: f64,
}

impl AreaParams {
    pub fn new(replicas: usize, seed: u64) -> Self {
        Self {
            delta: 0.5,
            horizon: None,
            grid_points: 10,
            replicas,
            seed,
            q_eps: 1.0,
            stationary_samples: replicas,
            sigmas: 3.0,
        }
    }
}

/// The area functional for one profile.
#[derive(Clone, Debug, Serialize)]
pub struct AreaFunctional {
    pub ext: ExtendedEigenData,
}

impl AreaFunctional {
    pub fn new(p: &ConductanceProfile, delta: f64) -> Result<Self> {
        Ok(Self { ext: solve_extended(p, delta)? })
    }

    /// Σ_{x=1}^{N−1} h(x)Ḡ(x), with heights given scaled by N.
    pub fn weighted_area(&self, n: usize, scaled: &[i64]) -> f64 {
        self.ext.g_bar.iter().enumerate().map(|(i, w)| w * scaled[i + 1] as f64).sum::<f64>() / n as f64
    }

    pub fn area(&self, n: usize, top: &[i64], other: &[i64]) -> f64 {
        (self.weighted_area(n, top) - self.weighted_area(n, other)) / self.ext.delta_min
    }

    /// H = max_x Ḡ(x)[h^top(x) − h^other(x)].
    pub fn height_gap(&self, n: usize, top: &[i64], other: &[i64]) -> f64 {
        self.ext
            .g_bar
            .iter()
            .enumerate()
            .map(|(i, w)| w * (top[i + 1] - other[i + 1]) as f64 / n as f64)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaRow {
    pub t: f64,
    pub area: Estimate,
    pub height_gap: Estimate,
    pub coalesced: Estimate,
}

/// E[A_t] − e^{−λ̄_1(t−s)}E[A_s] from paired replicas.
#[derive(Clone, Debug, Serialize)]
pub struct DecayCheck {
    pub s: f64,
    pub t: f64,
    pub excess: f64,
    pub stderr: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaReport {
    pub lambda_bar: f64,
    pub delta_min: f64,
    pub horizon: f64,
    pub rows: Vec<AreaRow>,
    pub decay: Vec<DecayCheck>,
    /// Smallest A seen right after any event, over all replicas.
    pub min_area: f64,
    /// A = 0 exactly when the two members agree, at every event.
    pub zero_iff_coalesced: bool,
    pub q_level: f64,
    /// Fraction of equilibrium samples with longest monotone run above `q_level`.
    pub q_exceedance: Estimate,
    pub q_mean: Estimate,
    pub replicas: usize,
    pub seed: u64,
}

impl AreaReport {
    pub fn supermartingale_ok(&self) -> bool {
        self.decay.iter().all(|d| d.ok)
    }
}

struct ReplicaTrace {
    area: Vec<f64>,
    gap: Vec<f64>,
    coalesced: Vec<bool>,
    min_area: f64,
    zero_iff: bool,
}

fn heights(m: &Member) -> &[i64] {
    m.scaled_heights()
}

pub fn area_supermartingale_audit(p: &ConductanceProfile, k: usize, params: &AreaParams) -> Result<AreaReport> {
    let n = p.n_sites();
    if k == 0 || k >= n {
        return Err(Error::param(format!("k = {k} outside 1..N-1")));
    }
    if params.grid_points == 0 || params.replicas < 2 {
        return Err(Error::param("need a nonempty grid and at least two replicas"));
    }
    let func = AreaFunctional::new(p, params.delta)?;
    let lambda_bar = func.ext.lambda_bar;
    let log_k = (k.max(2) as f64).ln();
    let horizon = params.horizon.unwrap_or((1.0 + params.delta) * log_k / (2.0 * lambda_bar));
    if !(horizon > 0.0) {
        return Err(Error::param("horizon must be positive"));
    }
    let grid: Vec<f64> =
        std::iter::once(0.0).chain((1..=params.grid_points).map(|i| horizon * i as f64 / params.grid_points as f64)).collect();
    let top = Configuration::extremal(n, k, Extremal::Max)?;
    let g_bar = &func.ext.g_bar;
    let scale = g_bar.iter().fold(0.0f64, |a, &v| a.max(v)) * n as f64 / func.ext.delta_min;
    let tol = 1e-9 * scale.max(1.0);

    let traces: Vec<Result<ReplicaTrace>> = map_indexed(params.replicas, |r| {
        let r = r as u64;
        let eq = Configuration::uniform(n, k, &mut stream(params.seed, Purpose::Stationary, r));
        let mut e = CoupledEnsemble::new(p, &[top.clone(), eq], ClockMode::PerColumn, stream(params.seed, Purpose::Clock, r))?;
        let pair = e.track_pair(0, 1);
        let mut area = func.area(n, heights(e.member(0)), heights(e.member(1)));
        let mut trace = ReplicaTrace {
            area: Vec::with_capacity(grid.len()),
            gap: Vec::with_capacity(grid.len()),
            coalesced: Vec::with_capacity(grid.len()),
            min_area: area,
            zero_iff: true,
        };
        for &t in &grid {
            if e.mismatch(pair) != 0 {
                while let Some(out) = e.step(t)? {
                    if !out.any_flip() {
                        continue;
                    }
                    let x = out.ring.x;
                    let dir = if out.ring.up { 1.0 } else { -1.0 };
                    let w = g_bar[x - 1] / func.ext.delta_min * dir;
                    if out.flipped(0) {
                        area += w;
                    }
                    if out.flipped(1) {
                        area -= w;
                    }
                    trace.min_area = trace.min_area.min(area);
                    let merged = e.mismatch(pair) == 0;
                    if merged != (area.abs() <= tol) {
                        trace.zero_iff = false;
                    }
                    if merged {
                        area = 0.0;
                        break;
                    }
                }
            }
            let (a, b) = (heights(e.member(0)), heights(e.member(1)));
            let merged = e.mismatch(pair) == 0;
            if merged {
                trace.area.push(0.0);
                trace.gap.push(0.0);
            } else {
                // Re-anchor the running sum to the exact value.
                area = func.area(n, a, b);
                trace.area.push(area);
                trace.gap.push(func.height_gap(n, a, b));
            }
            trace.coalesced.push(merged);
        }
        Ok(trace)
    });
    let traces = traces.into_iter().collect::<Result<Vec<_>>>()?;

    let rows: Vec<AreaRow> = grid
        .iter()
        .enumerate()
        .map(|(j, &t)| AreaRow {
            t,
            area: traces.iter().map(|tr| tr.area[j]).collect::<MeanVar>().estimate(),
            height_gap: traces.iter().map(|tr| tr.gap[j]).collect::<MeanVar>().estimate(),
            coalesced: proportion(traces.iter().filter(|tr| tr.coalesced[j]).count() as u64, traces.len() as u64),
        })
        .collect();
    let decay = (1..grid.len())
        .map(|j| {
            let (s, t) = (grid[j - 1], grid[j]);
            let factor = (-lambda_bar * (t - s)).exp();
            let diff: MeanVar = traces.iter().map(|tr| tr.area[j] - factor * tr.area[j - 1]).collect();
            let est = diff.estimate();
            DecayCheck { s, t, excess: est.value, stderr: est.stderr, ok: est.value <= params.sigmas * est.stderr }
        })
        .collect();

    let q_level = n as f64 / k as f64 * (n as f64).ln().powf(1.0 + params.q_eps);
    let q_values: Vec<f64> = map_indexed(params.stationary_samples, |r| {
        let c = Configuration::uniform(n, k, &mut stream(params.seed, Purpose::Audit, r as u64));
        HeightFunction::of(&c).max_monotone_run().q as f64
    });
    let exceed = q_values.iter().filter(|&&q| q > q_level).count() as u64;

    Ok(AreaReport {
        lambda_bar,
        delta_min: func.ext.delta_min,
        horizon,
        rows,
        decay,
        min_area: traces.iter().map(|t| t.min_area).fold(f64::INFINITY, f64::min),
        zero_iff_coalesced: traces.iter().all(|t| t.zero_iff),
        q_level,
        q_exceedance: proportion(exceed, q_values.len() as u64),
        q_mean: q_values.into_iter().collect::<MeanVar>().estimate(),
        replicas: params.replicas,
        seed: params.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_members_have_zero_area() {
        let p = ConductanceProfile::homogeneous(10).unwrap();
        let f = AreaFunctional::new(&p, 0.5).unwrap();
        let h = HeightFunction::of(&Configuration::parse("1010011000").unwrap());
        assert_eq!(f.area(10, h.scaled(), h.scaled()), 0.0);
        assert_eq!(f.height_gap(10, h.scaled(), h.scaled()), 0.0);
    }

    #[test]
    fn small_audit_is_consistent() {
        let p = ConductanceProfile::from_resistances(vec![0.8, 1.3, 1.0, 0.6, 1.4, 1.2, 0.9, 1.1, 1.0, 0.7, 1.0]).unwrap();
        let mut params = AreaParams::new(300, 4);
        params.grid_points = 6;
        let r = area_supermartingale_audit(&p, 6, &params).unwrap();
        assert!(r.min_area >= -1e-9);
        assert!(r.zero_iff_coalesced);
        assert!(r.rows[0].area.value > 0.0);
        assert!(r.supermartingale_ok(), "{:?}", r.decay);
    }
}
