//! Lower bounds on the mixing time from the principal eigenfunction.
//!
//! f(ξ) = Σ ξ(x) g_1(x) satisfies E[f(η_t)] = e^{−λ_1 t} E[f(η_0)] and has
//! mean zero under the uniform measure. When the distributions of f from a
//! start and from equilibrium are separated at level ℓ, the difference of the
//! two exceedance probabilities bounds the TV distance from below.

use serde::Serialize;

use crate::config::{Configuration, Extremal};
use crate::dynamics::MarkovPath;
use crate::error::{Error, Result};
use crate::par::{map_indexed, map_owned};
use crate::profile::ConductanceProfile;
use crate::rng::{stream, Purpose, StreamRng};
use crate::spectral::{solve_neumann, Normalization};
use crate::stats::{proportion, Estimate, MeanVar};

/// f(ξ) = Σ ξ(x) g_1(x), with g_1(1) = 1.
#[derive(Clone, Debug, Serialize)]
pub struct WilsonStatistic {
    g: Vec<f64>,
    lambda1: f64,
}

impl WilsonStatistic {
    pub fn new(p: &ConductanceProfile) -> Result<Self> {
        let sys = solve_neumann(p, 1, Normalization::FirstSite)?;
        Ok(Self { g: sys.eigenfunction(1).to_vec(), lambda1: sys.eigenvalue(1) })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// g_1 indexed from site 1.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn value(&self, occ: &[u8]) -> f64 {
        occ.iter().zip(&self.g).filter(|(o, _)| **o == 1).map(|(_, g)| g).sum()
    }

    pub fn of(&self, cfg: &Configuration) -> f64 {
        cfg.positions().iter().map(|&x| self.g[x - 1]).sum()
    }

    /// Σ_x P[ξ(x) = 1] g_1(x) for a law with the given one-site marginals.
    pub fn mean_under(&self, marginals: &[f64]) -> f64 {
        marginals.iter().zip(&self.g).map(|(m, g)| m * g).sum()
    }
}

/// Initial law of the non-equilibrium side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilsonStart {
    /// Point mass at the maximal configuration (particles packed on the left).
    Maximal,
    /// Uniform 2k-subset with only the k leftmost particles kept.
    TwoPhase,
}

impl WilsonStart {
    /// Maximal start when k ≥ fraction·N, two-phase below.
    pub fn for_density(n: usize, k: usize, fraction: f64) -> Self {
        if k as f64 >= fraction * n as f64 {
            Self::Maximal
        } else {
            Self::TwoPhase
        }
    }

    pub fn sample(self, n: usize, k: usize, seed: u64, replica: u64) -> Result<Configuration> {
        match self {
            Self::Maximal => Configuration::extremal(n, k, Extremal::Max),
            Self::TwoPhase => {
                if 2 * k > n {
                    return Err(Error::param("the two-phase start needs 2k <= N"));
                }
                Ok(Configuration::two_phase(n, k, &mut stream(seed, Purpose::TwoPhase, replica)))
            }
        }
    }

    /// One-site marginals of the start.
    pub fn marginals(self, n: usize, k: usize) -> Result<Vec<f64>> {
        match self {
            Self::Maximal => Ok((1..=n).map(|x| if x <= k { 1.0 } else { 0.0 }).collect()),
            Self::TwoPhase => {
                if 2 * k > n {
                    return Err(Error::param("the two-phase start needs 2k <= N"));
                }
                Ok(two_phase_marginals(n, k))
            }
        }
    }
}

/// P[ξ(x) = 1] under the two-phase law: x is occupied in the 2k-subset and at
/// most k−1 of the 2k points lie to its left.
pub fn two_phase_marginals(n: usize, k: usize) -> Vec<f64> {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_choose = |a: usize, b: usize| ln_fact[a] - ln_fact[b] - ln_fact[a - b];
    let m = 2 * k;
    let total = ln_choose(n, m);
    (1..=n)
        .map(|x| {
            let (left, right) = (x - 1, n - x);
            (0..k)
                .filter(|&j| j <= left && m - 1 - j <= right)
                .map(|j| (ln_choose(left, j) + ln_choose(right, m - 1 - j) - total).exp())
                .sum()
        })
        .collect()
}

/// How the separation level ℓ is chosen at each grid time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Halfway between E[f(η_t)] = e^{−λ_1 t}E[f(η_0)] and the equilibrium mean 0.
    Midway,
    /// 4√(N/ε) for the maximal start, e^{c/2}√k/2 for the two-phase start.
    Asymptotic { c_eps: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct WilsonParams {
    pub eps: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Increasing positive times.
    pub grid: Vec<f64>,
    /// `None` picks the start from the density switch.
    pub start: Option<WilsonStart>,
    /// k/N below which the two-phase start is used.
    pub sparse_fraction: f64,
    pub threshold: ThresholdRule,
    /// Certification margin in standard errors.
    pub sigmas: f64,
    /// Stop after this many consecutive grid times whose separation is more
    /// than `sigmas` standard errors below the target. `None` runs the grid.
    pub patience: Option<usize>,
}

impl WilsonParams {
    /// Grid with spacing `step_factor/λ_1` up to log(k)/λ_1.
    pub fn new(p: &ConductanceProfile, k: usize, eps: f64, replicas: usize, seed: u64) -> Result<Self> {
        let lambda1 = crate::spectral::spectral_gap(p)?;
        Ok(Self {
            eps,
            replicas,
            seed,
            grid: uniform_grid(lambda1, k, 0.02),
            start: None,
            sparse_fraction: 1.0 / 64.0,
            threshold: ThresholdRule::Midway,
            sigmas: 3.0,
            patience: Some(25),
        })
    }
}

/// Times j·step/λ_1 for j ≥ 1 up to log(max(k,2))/λ_1.
pub fn uniform_grid(lambda1: f64, k: usize, step_factor: f64) -> Vec<f64> {
    let end = (k.max(2) as f64).ln();
    let count = (end / step_factor).ceil() as usize;
    (1..=count).map(|j| (j as f64 * step_factor).min(end) / lambda1).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WilsonRow {
    pub t: f64,
    pub threshold: f64,
    pub exact_mean: f64,
    pub mc_mean: Estimate,
    pub p_start: Estimate,
    pub p_stationary: Estimate,
    pub separation: f64,
    pub separation_stderr: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WilsonReport {
    /// Largest certified grid time; 0 when nothing is certified.
    pub estimate: f64,
    /// Spacing of the grid around the estimate.
    pub resolution: f64,
    /// TV level that was certified, max(ε, 1−ε).
    pub target: f64,
    pub start: WilsonStart,
    pub lambda1: f64,
    pub start_mean: f64,
    pub replicas: usize,
    pub seed: u64,
    /// No grid time reached the target at the requested margin.
    pub flagged: bool,
    /// Rows cover the grid only up to the last processed time.
    pub rows: Vec<WilsonRow>,
}

/// Sample f along independent trajectories at each grid time.
pub fn wilson_trajectories(
    p: &ConductanceProfile,
    stat: &WilsonStatistic,
    k: usize,
    start: WilsonStart,
    grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut paths = WilsonPaths::new(p, k, start, replicas, seed)?;
    let columns: Vec<Vec<f64>> = grid.iter().map(|&t| paths.advance(stat, t)).collect();
    Ok((0..replicas).map(|r| columns.iter().map(|c| c[r]).collect()).collect())
}

/// Replica trajectories advanced together through a time grid.
struct WilsonPaths {
    paths: Vec<(MarkovPath, StreamRng)>,
}

impl WilsonPaths {
    fn new(p: &ConductanceProfile, k: usize, start: WilsonStart, replicas: usize, seed: u64) -> Result<Self> {
        let n = p.n_sites();
        let paths = (0..replicas)
            .map(|r| {
                let cfg = start.sample(n, k, seed, r as u64)?;
                Ok((MarkovPath::new(p, &cfg), stream(seed, Purpose::Markov, r as u64)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { paths })
    }

    /// Advance every replica to `t` and return f per replica.
    fn advance(&mut self, stat: &WilsonStatistic, t: f64) -> Vec<f64> {
        let paths = std::mem::take(&mut self.paths);
        let out: Vec<((MarkovPath, StreamRng), f64)> = map_owned(paths, |(mut path, mut rng)| {
            path.advance(t, &mut rng, |_, _, _| {});
            let f = stat.value(path.occupancy());
            ((path, rng), f)
        });
        let (paths, values) = out.into_iter().unzip();
        self.paths = paths;
        values
    }
}

pub fn wilson_lower_estimate(p: &ConductanceProfile, k: usize, params: &WilsonParams) -> Result<WilsonReport> {
    let n = p.n_sites();
    if k < 2 || k >= n {
        return Err(Error::param(format!("the Wilson estimate needs 2 <= k < N, got k = {k}")));
    }
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(Error::param(format!("eps = {} outside (0, 1)", params.eps)));
    }
    if params.replicas < 2 {
        return Err(Error::param("at least two replicas are needed"));
    }
    if params.grid.is_empty() || params.grid[0] <= 0.0 || params.grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("the time grid must be positive and increasing"));
    }
    let stat = WilsonStatistic::new(p)?;
    let start = params.start.unwrap_or_else(|| WilsonStart::for_density(n, k, params.sparse_fraction));
    let start_mean = stat.mean_under(&start.marginals(n, k)?);
    let mut paths = WilsonPaths::new(p, k, start, params.replicas, params.seed)?;
    let stationary: Vec<f64> = map_indexed(params.replicas, |r| {
        stat.of(&Configuration::uniform(n, k, &mut stream(params.seed, Purpose::Stationary, r as u64)))
    });
    let target = params.eps.max(1.0 - params.eps);
    let reps = params.replicas as u64;
    let mut rows: Vec<WilsonRow> = Vec::new();
    let mut hopeless = 0;
    for &t in &params.grid {
        let values = paths.advance(&stat, t);
        let exact_mean = (-stat.lambda1 * t).exp() * start_mean;
        let threshold = match params.threshold {
            ThresholdRule::Midway => exact_mean / 2.0,
            ThresholdRule::Asymptotic { c_eps } => match start {
                WilsonStart::Maximal => 4.0 * (n as f64 / params.eps).sqrt(),
                WilsonStart::TwoPhase => (c_eps / 2.0).exp() * (k as f64).sqrt() / 2.0,
            },
        };
        let mc_mean: MeanVar = values.iter().copied().collect();
        let p_start = proportion(values.iter().filter(|&&f| f >= threshold).count() as u64, reps);
        let p_stationary = proportion(stationary.iter().filter(|&&f| f >= threshold).count() as u64, reps);
        let separation = p_start.value - p_stationary.value;
        let separation_stderr = p_start.stderr.hypot(p_stationary.stderr);
        let certified = separation - params.sigmas * separation_stderr >= target;
        rows.push(WilsonRow {
            t,
            threshold,
            exact_mean,
            mc_mean: mc_mean.estimate(),
            p_start,
            p_stationary,
            separation,
            separation_stderr,
            certified,
        });
        // Stop once the separation has stayed clearly below the target.
        hopeless = if separation + params.sigmas * separation_stderr < target { hopeless + 1 } else { 0 };
        if params.patience.is_some_and(|limit| hopeless >= limit) {
            break;
        }
    }
    let best = rows.iter().rposition(|r| r.certified);
    let estimate = best.map_or(0.0, |i| rows[i].t);
    let resolution = match best {
        Some(i) if i + 1 < params.grid.len() => params.grid[i + 1] - params.grid[i],
        Some(i) if i > 0 => rows[i].t - rows[i - 1].t,
        _ => params.grid[0],
    };
    Ok(WilsonReport {
        estimate,
        resolution,
        target,
        start,
        lambda1: stat.lambda1,
        start_mean,
        replicas: params.replicas,
        seed: params.seed,
        flagged: best.is_none(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::enumerate_masks;

    #[test]
    fn two_phase_marginals_match_enumeration() {
        let (n, k) = (9, 2);
        let masks = enumerate_masks(n, 2 * k);
        let mut counts = vec![0.0; n];
        for m in &masks {
            let kept = Configuration::from_mask(n, *m).positions().into_iter().take(k);
            for x in kept {
                counts[x - 1] += 1.0;
            }
        }
        let exact = two_phase_marginals(n, k);
        for (c, e) in counts.iter().zip(&exact) {
            assert!((c / masks.len() as f64 - e).abs() < 1e-12);
        }
        assert!((exact.iter().sum::<f64>() - k as f64).abs() < 1e-12);
    }

    #[test]
    fn statistic_has_zero_stationary_mean() {
        let p = ConductanceProfile::from_resistances(vec![0.6, 1.8, 1.0, 0.9, 1.3, 0.7]).unwrap();
        let s = WilsonStatistic::new(&p).unwrap();
        assert!(s.g().iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(s.g()[0], 1.0);
    }

    #[test]
    fn reproducible_with_seed() {
        let p = ConductanceProfile::homogeneous(12).unwrap();
        let mut params = WilsonParams::new(&p, 6, 0.25, 200, 9).unwrap();
        params.grid.truncate(20);
        let a = wilson_lower_estimate(&p, 6, &params).unwrap();
        let b = wilson_lower_estimate(&p, 6, &params).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.rows[7].mc_mean, b.rows[7].mc_mean);
    }
}
