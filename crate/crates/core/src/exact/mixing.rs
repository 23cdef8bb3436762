//! Total-variation curves and mixing times.

use serde::{Deserialize, Serialize};

use super::chain::ChainMatrix;
use super::uniformize::{propagate, propagate_piecewise};
use crate::config::{binomial, skeleton_columns, Configuration, Extremal};
use crate::error::{Error, Result};
use crate::par;
use crate::profile::ConductanceProfile;
use crate::spectral::solve_extended;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Starts {
    All,
    ExtremalOnly,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingCurve {
    pub times: Vec<f64>,
    pub d: Vec<f64>,
    pub starts: Starts,
    /// Index of the maximizing start at each time.
    pub worst_start: Vec<usize>,
    pub tol: f64,
}

/// ‖p − μ‖_TV against the uniform measure.
pub fn tv_to_uniform(p: &[f64]) -> f64 {
    let u = 1.0 / p.len() as f64;
    0.5 * p.iter().map(|x| (x - u).abs()).sum::<f64>()
}

/// Indices of ∧ and ∨.
pub fn extremal_starts(chain: &ChainMatrix) -> Vec<usize> {
    let mut out = Vec::new();
    for which in [Extremal::Max, Extremal::Min] {
        let cfg = Configuration::extremal(chain.n(), chain.k(), which).expect("k <= N in a built chain");
        let i = chain.index_of(&cfg).expect("extremal state belongs to the chain");
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

fn start_indices(chain: &ChainMatrix, starts: Starts) -> Vec<usize> {
    match starts {
        Starts::All => (0..chain.len()).collect(),
        Starts::ExtremalOnly => extremal_starts(chain),
    }
}

/// TV curves for each start along the grid.
fn curves_per_start(chain: &ChainMatrix, starts: &[usize], grid: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let step_tol = tol / grid.len().max(1) as f64;
    par::map_indexed(starts.len(), |s| {
        let mut p = vec![0.0; chain.len()];
        p[starts[s]] = 1.0;
        let mut t = 0.0;
        grid.iter()
            .map(|&g| {
                p = propagate(chain.generator(), &p, g - t, step_tol);
                t = g;
                tv_to_uniform(&p)
            })
            .collect()
    })
}

pub fn tv_curve(chain: &ChainMatrix, starts: Starts, grid: &[f64], tol: f64) -> Result<MixingCurve> {
    if grid.iter().any(|t| *t < 0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("time grid must be increasing and nonnegative"));
    }
    let idx = start_indices(chain, starts);
    let per = curves_per_start(chain, &idx, grid, tol);
    let mut d = Vec::with_capacity(grid.len());
    let mut worst_start = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let (s, v) = per.iter().enumerate().map(|(s, c)| (s, c[j])).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        d.push(v);
        worst_start.push(idx[s]);
    }
    Ok(MixingCurve { times: grid.to_vec(), d, starts, worst_start, tol })
}

/// First time d(t) ≤ ε, refined by bisection between bracketing grid points.
pub fn mixing_time(chain: &ChainMatrix, curve: &MixingCurve, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("epsilon = {eps} outside (0, 1)")));
    }
    let j = curve
        .d
        .iter()
        .position(|&v| v <= eps)
        .ok_or_else(|| Error::Bracket(format!("curve never reaches epsilon = {eps}; extend the grid")))?;
    if j == 0 {
        if curve.times[0] == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Bracket(format!("d({}) already below epsilon = {eps}", curve.times[0])));
    }
    let (t0, t1) = (curve.times[j - 1], curve.times[j]);
    let idx = start_indices(chain, curve.starts);
    let tol = curve.tol.min(1e-12);
    let base: Vec<Vec<f64>> = par::map_indexed(idx.len(), |s| {
        let mut p = vec![0.0; chain.len()];
        p[idx[s]] = 1.0;
        propagate(chain.generator(), &p, t0, tol)
    });
    let d_at = |t: f64| -> f64 {
        par::map_indexed(base.len(), |s| tv_to_uniform(&propagate(chain.generator(), &base[s], t - t0, tol)))
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (mut lo, mut hi) = (t0, t1);
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if d_at(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// (1/gap)·log(1/2ε) and (1/gap)·log(|Ω|/2ε).
pub fn sandwich(gap: f64, n: usize, k: usize, eps: f64) -> (f64, f64) {
    let states = binomial(n, k) as f64;
    ((1.0 / (2.0 * eps)).ln() / gap, (states / (2.0 * eps)).ln() / gap)
}

/// Exact TV curve and mixing times for several ε.
#[derive(Clone, Debug, Serialize)]
pub struct ExactMixing {
    pub n: usize,
    pub k: usize,
    pub gap: f64,
    pub curve: MixingCurve,
    /// (ε, t_mix(ε), lower sandwich, upper sandwich).
    pub mixing: Vec<(f64, f64, f64, f64)>,
}

/// Curve on `points` equally spaced times from 0 to 1.25 times the largest
/// upper sandwich value, then t_mix(ε) for each ε by bisection.
pub fn mix_exact(chain: &ChainMatrix, eps: &[f64], starts: Starts, points: usize, tol: f64) -> Result<ExactMixing> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::param("every epsilon must lie in (0, 1)"));
    }
    if points < 2 {
        return Err(Error::param("need at least two grid points"));
    }
    let gap = super::gap::gap_of(chain)?;
    let (n, k) = (chain.n(), chain.k());
    let horizon = eps.iter().map(|&e| sandwich(gap, n, k, e).1).fold(0.0, f64::max) * 1.25;
    let grid: Vec<f64> = (0..points).map(|i| horizon * i as f64 / (points - 1) as f64).collect();
    let curve = tv_curve(chain, starts, &grid, tol)?;
    let mixing = eps
        .iter()
        .map(|&e| {
            let (lo, hi) = sandwich(gap, n, k, e);
            Ok((e, mixing_time(chain, &curve, e)?, lo, hi))
        })
        .collect::<Result<_>>()?;
    Ok(ExactMixing { n, k, gap, curve, mixing })
}

/// Exact comparison of the censored and uncensored ∧-chains at t_δ.
#[derive(Clone, Debug, Serialize)]
pub struct CensoredComparison {
    pub t_half: f64,
    pub t_delta: f64,
    pub blocked_columns: Vec<usize>,
    pub tv_censored: f64,
    pub tv_uncensored: f64,
}

/// Censor the skeleton columns ⌈iδN⌉ during [t_{δ/2}, t_δ), with
/// t_δ = (1+δ)/(2λ̄1)·log k and λ̄1 the gap of the δ-extended segment.
pub fn censored_tv_at(p: &ConductanceProfile, k: usize, delta: f64, tol: f64) -> Result<CensoredComparison> {
    let n = p.n_sites();
    if k < 2 {
        return Err(Error::param("censoring times need k >= 2 so that log k > 0"));
    }
    let ext = solve_extended(p, delta)?;
    let log_k = (k as f64).ln();
    let t_half = (1.0 + delta / 2.0) / (2.0 * ext.lambda_bar) * log_k;
    let t_delta = (1.0 + delta) / (2.0 * ext.lambda_bar) * log_k;
    let blocked = skeleton_columns(n, delta)?;
    let free = super::build_chain(p, k)?;
    let censored = ChainMatrix::with_blocked_edges(p, k, &blocked)?;
    let start = free.point_mass(&Configuration::extremal(n, k, Extremal::Max)?)?;
    let plain = propagate(free.generator(), &start, t_delta, tol);
    let cens = propagate_piecewise(
        &[(free.generator(), t_half), (censored.generator(), t_delta - t_half)],
        &start,
        tol,
    );
    Ok(CensoredComparison {
        t_half,
        t_delta,
        blocked_columns: blocked,
        tv_censored: tv_to_uniform(&cens),
        tv_uncensored: tv_to_uniform(&plain),
    })
}
