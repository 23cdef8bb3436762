//! Second moment of the martingale M_t = e^{λ_1(t−t_0)} f(η_t) − e^{−λ_1 t_0} f(η_0).
//!
//! A jump across edge (x, x+1) at time s moves M by e^{λ_1(s−t_0)}|g(x+1) − g(x)|,
//! so the sum of squared jumps up to t_0 has mean E[M_{t_0}²]. Its compensator
//! integrates e^{2λ_1(s−t_0)} Σ_x η̄_s(x) c(x)(g(x+1) − g(x))², where η̄(x) is the
//! indicator that the two ends of the edge differ. Replacing c·|Δg| by 2π/N
//! gives the coarser bound with weights (4π²/N²) r(x).

use std::f64::consts::PI;

use serde::Serialize;

use super::wilson::{WilsonStart, WilsonStatistic};
use crate::dynamics::MarkovPath;
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::profile::ConductanceProfile;
use crate::rng::{stream, Purpose};
use crate::stats::{Estimate, MeanVar};

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    pub t0: f64,
    pub start: WilsonStart,
    /// Mean of the summed squared jumps.
    pub bracket: Estimate,
    /// Mean of (F(t_0, η_{t_0}) − F(0, η_0))².
    pub direct: Estimate,
    /// Compensator with the exact increments c(x)(Δg)².
    pub compensator: Estimate,
    /// Compensator with (4π²/N²) r(x) in place of c(x)(Δg)².
    pub bound: Estimate,
    /// The same with η̄ ≤ 1: (4π²/N²) Σr (1 − e^{−2λ_1 t_0})/(2λ_1).
    pub crude_bound: f64,
    pub seed: u64,
}

/// ∫_a^b e^{2λ(s−t_0)} ds.
fn weight(lambda: f64, t0: f64, a: f64, b: f64) -> f64 {
    ((2.0 * lambda * (b - t0)).exp() - (2.0 * lambda * (a - t0)).exp()) / (2.0 * lambda)
}

pub fn bracket_variance(
    p: &ConductanceProfile,
    k: usize,
    t0: f64,
    start: WilsonStart,
    replicas: usize,
    seed: u64,
) -> Result<BracketReport> {
    let n = p.n_sites();
    if !(t0 >= 0.0 && t0.is_finite()) {
        return Err(Error::param(format!("t0 = {t0} must be finite and nonnegative")));
    }
    if k == 0 || k >= n || replicas < 2 {
        return Err(Error::param("bracket needs 1 <= k < N and at least two replicas"));
    }
    let stat = WilsonStatistic::new(p)?;
    let lambda = stat.lambda1();
    let g = stat.g();
    // Per-edge weights indexed by edge x − 1.
    let exact_w: Vec<f64> = (1..n).map(|x| p.rate(x) * (g[x] - g[x - 1]).powi(2)).collect();
    let coarse = 4.0 * PI * PI / (n * n) as f64;
    let coarse_w: Vec<f64> = (1..n).map(|x| coarse * p.resistance(x)).collect();
    let starts = (0..replicas).map(|r| start.sample(n, k, seed, r as u64)).collect::<Result<Vec<_>>>()?;

    let per_replica: Vec<[f64; 4]> = map_indexed(replicas, |r| {
        let mut path = MarkovPath::new(p, &starts[r]);
        let f0 = stat.value(path.occupancy());
        let occ = path.occupancy();
        let differs = |o: &[u8], e: usize| (o[e] != o[e + 1]) as u8 as f64;
        let mut s_exact: f64 = (0..n - 1).map(|e| differs(occ, e) * exact_w[e]).sum();
        let mut s_coarse: f64 = (0..n - 1).map(|e| differs(occ, e) * coarse_w[e]).sum();
        let (mut i_exact, mut i_coarse, mut jumps, mut last) = (0.0, 0.0, 0.0, 0.0);
        let mut rng = stream(seed, Purpose::Markov, r as u64);
        path.advance(t0, &mut rng, |t, x, o| {
            let w = weight(lambda, t0, last, t);
            i_exact += w * s_exact;
            i_coarse += w * s_coarse;
            last = t;
            jumps += (2.0 * lambda * (t - t0)).exp() * (g[x] - g[x - 1]).powi(2);
            // The swapped edge still differs and both neighbours toggled.
            for e in [x.wrapping_sub(2), x] {
                if e < n - 1 {
                    let now = differs(o, e);
                    s_exact += (2.0 * now - 1.0) * exact_w[e];
                    s_coarse += (2.0 * now - 1.0) * coarse_w[e];
                }
            }
        });
        let w = weight(lambda, t0, last, t0);
        i_exact += w * s_exact;
        i_coarse += w * s_coarse;
        let f1 = stat.value(path.occupancy());
        let m = f1 - (-lambda * t0).exp() * f0;
        [jumps, m * m, i_exact, i_coarse]
    });
    let col = |j: usize| per_replica.iter().map(|v| v[j]).collect::<MeanVar>().estimate();
    let total_r: f64 = p.resistances().iter().sum();
    Ok(BracketReport {
        t0,
        start,
        bracket: col(0),
        direct: col(1),
        compensator: col(2),
        bound: col(3),
        crude_bound: coarse * total_r * (1.0 - (-2.0 * lambda * t0).exp()) / (2.0 * lambda),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_is_zero() {
        let p = ConductanceProfile::homogeneous(8).unwrap();
        let r = bracket_variance(&p, 4, 0.0, WilsonStart::Maximal, 10, 1).unwrap();
        assert_eq!(r.bracket.value, 0.0);
        assert_eq!(r.direct.value, 0.0);
        assert_eq!(r.bound.value, 0.0);
    }

    #[test]
    fn compensator_matches_jumps() {
        let p = ConductanceProfile::from_resistances(vec![0.7, 1.4, 1.0, 0.8, 1.2, 1.1, 0.9]).unwrap();
        let r = bracket_variance(&p, 4, 3.0, WilsonStart::Maximal, 4000, 5).unwrap();
        let se = r.bracket.stderr.hypot(r.compensator.stderr);
        assert!((r.bracket.value - r.compensator.value).abs() < 4.0 * se, "{r:?}");
        let se = r.direct.stderr.hypot(r.compensator.stderr);
        assert!((r.direct.value - r.compensator.value).abs() < 4.0 * se, "{r:?}");
    }
}
