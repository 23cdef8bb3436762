//! Mean height from the maximal start against the spectral heat solution.

use serde::Serialize;

use crate::config::{Configuration, Extremal, HeightFunction};
use crate::dynamics::MarkovPath;
use crate::error::{Error, Result};
use crate::par::map_indexed;
use crate::profile::{check_assumptions, AssumptionParams, ConductanceProfile};
use crate::rng::{stream, Purpose};
use crate::spectral::HeatSolver;
use crate::stats::MeanVar;

#[derive(Clone, Debug, Serialize)]
pub struct HeatReport {
    pub t: f64,
    pub kappa1: f64,
    pub spectral: Vec<f64>,
    pub mc_mean: Vec<f64>,
    pub mc_stderr: Vec<f64>,
    pub max_abs_dev: f64,
    /// max_x |deviation|/stderr over sites with positive stderr.
    pub max_z: f64,
    /// Every site within `sigmas` standard errors; sites with zero spread must match to 1e−9.
    pub agree: bool,
    pub envelope: f64,
    pub max_mean: f64,
    pub envelope_ok: bool,
    pub replicas: usize,
    pub seed: u64,
}

/// 2^6 Ῡ^{−1/2}(K_0+1) k e^{−κ_1 t} with K_0 = ⌈(2 + 3/ϱ)^{1/2}⌉. Ῡ is the
/// smaller of the minimal resistance and the reference level in `params`.
pub fn heat_envelope(p: &ConductanceProfile, k: usize, kappa1: f64, t: f64, params: &AssumptionParams) -> Result<f64> {
    let rep = check_assumptions(p, k, params)?;
    let upsilon = rep.min_resistance.min(rep.upsilon_bar_reference);
    let k0 = (2.0 + 3.0 / params.rho).sqrt().ceil();
    Ok(64.0 / upsilon.sqrt() * (k0 + 1.0) * k as f64 * (-kappa1 * t).exp())
}

pub fn heat_mean_check(
    p: &ConductanceProfile,
    k: usize,
    t: f64,
    replicas: usize,
    seed: u64,
    sigmas: f64,
    params: &AssumptionParams,
) -> Result<HeatReport> {
    let n = p.n_sites();
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param(format!("t = {t} must be finite and nonnegative")));
    }
    if k == 0 || k >= n || replicas < 2 {
        return Err(Error::param("heat check needs 1 <= k < N and at least two replicas"));
    }
    let top = Configuration::extremal(n, k, Extremal::Max)?;
    let solver = HeatSolver::new(p)?;
    let spectral = solver.solve(&HeightFunction::of(&top), t);
    let finals: Vec<Vec<f64>> = map_indexed(replicas, |r| {
        let mut path = MarkovPath::new(p, &top);
        path.advance(t, &mut stream(seed, Purpose::Markov, r as u64), |_, _, _| {});
        HeightFunction::of(&path.config()).values()
    });
    let stats: Vec<MeanVar> = (0..=n).map(|x| finals.iter().map(|h| h[x]).collect()).collect();
    let mc_mean: Vec<f64> = stats.iter().map(MeanVar::mean).collect();
    let mc_stderr: Vec<f64> = stats.iter().map(MeanVar::stderr).collect();
    let mut max_abs_dev: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut agree = true;
    for x in 0..=n {
        let dev = (mc_mean[x] - spectral[x]).abs();
        max_abs_dev = max_abs_dev.max(dev);
        if mc_stderr[x] > 0.0 {
            let z = dev / mc_stderr[x];
            max_z = max_z.max(z);
            agree &= z <= sigmas;
        } else {
            agree &= dev <= 1e-9;
        }
    }
    let kappa1 = solver.kappa1();
    let envelope = heat_envelope(p, k, kappa1, t, params)?;
    let max_mean = spectral.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(HeatReport {
        t,
        kappa1,
        spectral,
        mc_mean,
        mc_stderr,
        max_abs_dev,
        max_z,
        agree,
        envelope,
        max_mean,
        envelope_ok: max_mean <= envelope,
        replicas,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_is_exact() {
        let p = ConductanceProfile::from_resistances(vec![1.2, 0.8, 1.0, 1.1, 0.9]).unwrap();
        let r = heat_mean_check(&p, 3, 0.0, 10, 1, 4.0, &AssumptionParams::default()).unwrap();
        assert!(r.agree);
        assert!(r.max_abs_dev < 1e-9);
    }
}
