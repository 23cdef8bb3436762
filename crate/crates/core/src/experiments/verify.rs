//! Self-check suites over every module's invariants.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, Extremal, HeightFunction};
use crate::dynamics::{run_coalescence, ClockMode, CoalescenceMode, CoupledEnsemble};
use crate::error::{Error, Result};
use crate::estimators::{
    area_supermartingale_audit, bracket_variance, heat_mean_check, two_phase_covariance_audit, wilson_trajectories,
    AreaParams, CovarianceMode, WilsonStart, WilsonStatistic, DEFAULT_COVARIANCE_BUDGET,
};
use crate::exact::{
    build_chain, censored_tv_at, gap_of, lift_eigenfunction, mix_exact, propagate, two_particle_check, Starts,
    DEFAULT_TOL,
};
use crate::profile::{build_profile, AssumptionParams, ConductanceProfile, ProfileFile, ProfileSpec};
use crate::rng::{derive_seed, stream, Purpose};
use crate::spectral::{solve_dirichlet, solve_extended, solve_neumann, HeatSolver, Method, Normalization};
use crate::stats::{proportion, MeanVar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Fast,
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub module: &'static str,
    pub property: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Rows of (check, module, property, status).
    pub fn coverage(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| {
                vec![
                    c.name.to_string(),
                    c.module.to_string(),
                    c.property.to_string(),
                    if c.passed { "pass" } else { "FAIL" }.to_string(),
                ]
            })
            .collect()
    }
}

struct Ctx {
    full: bool,
    seed: u64,
    profile: Option<ProfileFile>,
}

type Outcome = Result<(bool, String)>;

struct Check {
    name: &'static str,
    module: &'static str,
    property: &'static str,
    run: fn(&Ctx) -> Outcome,
}

const CHECKS: &[Check] = &[
    Check {
        name: "profile-validation",
        module: "conductance-env",
        property: "resistances are positive and finite; bad entries are reported by index",
        run: check_profile,
    },
    Check {
        name: "homogeneous-spectrum",
        module: "spectral-core",
        property: "homogeneous eigenvalues equal 2(1 - cos(i pi/N)) for both boundary problems",
        run: check_homogeneous_spectrum,
    },
    Check {
        name: "shooting-vs-dense",
        module: "spectral-core",
        property: "angle-count bisection reproduces the dense eigenvalues",
        run: check_shooting,
    },
    Check {
        name: "extended-identity",
        module: "spectral-core",
        property: "min weighted gradient of the embedded eigenfunction equals lambda-bar times min partial sum",
        run: check_extended,
    },
    Check {
        name: "gap-independent-of-k",
        module: "exact-chain",
        property: "spectral gap of the k-particle chain equals the one-particle gap",
        run: check_gap,
    },
    Check {
        name: "lifted-eigenfunctions",
        module: "exact-chain",
        property: "sums of one-particle eigenfunctions are eigenfunctions of the k-particle generator",
        run: check_lift,
    },
    Check {
        name: "two-particle-basis",
        module: "exact-chain",
        property: "antisymmetric products are orthogonal eigenfunctions of the merging chain",
        run: check_two_particle,
    },
    Check {
        name: "heat-oracle",
        module: "exact-chain",
        property: "mean height from the maximal start solves the discrete heat equation",
        run: check_heat_exact,
    },
    Check {
        name: "mixing-sandwich",
        module: "exact-chain",
        property: "log(1/2e)/gap <= t_mix(e) <= log(|states|/2e)/gap",
        run: check_sandwich,
    },
    Check {
        name: "censoring-inequality",
        module: "exact-chain",
        property: "censoring the skeleton columns does not bring the maximal chain closer to equilibrium",
        run: check_censoring,
    },
    Check {
        name: "monotone-coupling",
        module: "coupling-dynamics",
        property: "the grand coupling preserves the height order and merged paths stay merged",
        run: check_monotone,
    },
    Check {
        name: "coupling-bound",
        module: "coupling-dynamics",
        property: "exact TV distance is at most the empirical non-coalescence probability",
        run: check_coupling_bound,
    },
    Check {
        name: "wilson-mean-law",
        module: "mc-estimators",
        property: "the mean of the eigenfunction statistic decays as exp(-lambda_1 t)",
        run: check_wilson_mean,
    },
    Check {
        name: "heat-monte-carlo",
        module: "mc-estimators",
        property: "Monte Carlo mean heights agree with the spectral heat solution",
        run: check_heat_mc,
    },
    Check {
        name: "bracket-bound",
        module: "mc-estimators",
        property: "the martingale second moment stays below its integrated bracket bound",
        run: check_bracket,
    },
    Check {
        name: "two-phase-covariance",
        module: "mc-estimators",
        property: "two-phase covariances are summable below the bound and the diagonal sum is at most k",
        run: check_covariance,
    },
    Check {
        name: "area-functional",
        module: "mc-estimators",
        property: "the weighted area is nonnegative, vanishes exactly at coalescence and decays on average",
        run: check_area,
    },
];

fn random_profile(seed: u64, n: usize, a: f64, b: f64) -> Result<ConductanceProfile> {
    build_profile(&ProfileSpec::iid_uniform(a, b, seed), n)
}

fn check_profile(ctx: &Ctx) -> Outcome {
    if let Some(file) = &ctx.profile {
        return match file.clone().into_profile() {
            Ok(p) => Ok((true, format!("supplied profile with N = {} is valid", p.n_sites()))),
            Err(e) => Ok((false, format!("supplied profile rejected: {e}"))),
        };
    }
    let bad = ConductanceProfile::from_resistances(vec![1.0, -0.5, 2.0]);
    let caught = matches!(bad, Err(Error::InvalidProfile { index: 2, .. }));
    Ok((caught, "negative resistance at edge 2 detected".into()))
}

fn check_homogeneous_spectrum(_: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [4usize, 8, 64] {
        let p = ConductanceProfile::homogeneous(n)?;
        let count = 3.min(n - 1);
        let neu = solve_neumann(&p, count, Normalization::UnitNorm)?;
        let dir = solve_dirichlet(&p, count, Method::Dense, Normalization::UnitNorm)?;
        for i in 1..=count {
            let want = 2.0 * (1.0 - (i as f64 * std::f64::consts::PI / n as f64).cos());
            worst = worst.max((neu.eigenvalue(i) - want).abs() / want);
            worst = worst.max((dir.eigenvalue(i) - want).abs() / want);
        }
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:e}")))
}

fn check_shooting(ctx: &Ctx) -> Outcome {
    let (count, max_n) = if ctx.full { (100, 128) } else { (10, 64) };
    let mut worst: f64 = 0.0;
    for s in 0..count {
        let mut rng = stream(ctx.seed, Purpose::Audit, s);
        let n = rand::Rng::random_range(&mut rng, 4..=max_n);
        let p = random_profile(derive_seed(ctx.seed, s), n, 0.5, 2.0)?;
        let m = 3.min(n - 1);
        let a = solve_dirichlet(&p, m, Method::Shooting, Normalization::UnitNorm)?;
        let b = solve_dirichlet(&p, m, Method::Dense, Normalization::UnitNorm)?;
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            worst = worst.max((x - y).abs() / y);
        }
    }
    Ok((worst <= 1e-9, format!("{count} profiles, max relative difference {worst:e}")))
}

fn check_extended(ctx: &Ctx) -> Outcome {
    let mut worst: f64 = 0.0;
    for (s, n) in [(0u64, 20usize), (1, 41), (2, 64)] {
        let p = random_profile(derive_seed(ctx.seed, 100 + s), n, 0.5, 1.5)?;
        let e = solve_extended(&p, 0.5)?;
        worst = worst.max((e.delta_min - e.delta_min_identity).abs() / e.delta_min);
    }
    Ok((worst <= 1e-9, format!("max relative difference {worst:e}")))
}

fn check_gap(ctx: &Ctx) -> Outcome {
    let (sizes, randoms): (Vec<usize>, u64) = if ctx.full { ((5..=9).collect(), 20) } else { ((5..=7).collect(), 3) };
    let mut worst: f64 = 0.0;
    for &n in &sizes {
        let mut profiles = vec![ConductanceProfile::homogeneous(n)?];
        for s in 0..randoms {
            profiles.push(random_profile(derive_seed(ctx.seed, 200 + s), n, 0.5, 2.0)?);
        }
        for p in &profiles {
            let one = solve_neumann(p, 1, Normalization::UnitNorm)?.eigenvalue(1);
            for k in 1..n {
                let g = gap_of(&build_chain(p, k)?)?;
                worst = worst.max((g - one).abs() / one);
            }
        }
    }
    Ok((worst <= 1e-8, format!("max relative difference {worst:e}")))
}

fn check_lift(ctx: &Ctx) -> Outcome {
    let sizes: Vec<usize> = if ctx.full { (4..=9).collect() } else { vec![6, 8] };
    let mut cases = 0;
    for &n in &sizes {
        let p = random_profile(derive_seed(ctx.seed, 300 + n as u64), n, 0.5, 2.0)?;
        let count = 3.min(n - 1);
        let sys = solve_neumann(&p, count, Normalization::FirstSite)?;
        for k in 1..n {
            let chain = build_chain(&p, k)?;
            for i in 1..=count {
                lift_eigenfunction(&chain, sys.eigenfunction(i), sys.eigenvalue(i))?;
                cases += 1;
            }
        }
    }
    Ok((true, format!("{cases} lifted pairs within 1e-8")))
}

fn check_two_particle(ctx: &Ctx) -> Outcome {
    let n = if ctx.full { 12 } else { 8 };
    let p = random_profile(derive_seed(ctx.seed, 400), n, 0.5, 2.0)?;
    let pairs: Vec<(usize, usize)> = (0..5).flat_map(|i| (i + 1..=5).map(move |j| (i, j))).collect();
    let rep = two_particle_check(&p, &pairs)?;
    Ok((true, format!("residual {:e}, orthogonality {:e}", rep.max_residual, rep.max_orthogonality_error)))
}

/// Mean heights h(0..N) under `dist` over the chain's states.
fn mean_heights(chain: &crate::exact::ChainMatrix, dist: &[f64]) -> Vec<f64> {
    let n = chain.n();
    let mut out = vec![0.0; n + 1];
    for (i, w) in dist.iter().enumerate() {
        for (x, h) in HeightFunction::of(&chain.state(i)).values().into_iter().enumerate() {
            out[x] += w * h;
        }
    }
    out
}

fn check_heat_exact(ctx: &Ctx) -> Outcome {
    let (n, k) = (8, 4);
    let p = random_profile(derive_seed(ctx.seed, 500), n, 0.5, 2.0)?;
    let chain = build_chain(&p, k)?;
    let top = Configuration::extremal(n, k, Extremal::Max)?;
    let start = chain.point_mass(&top)?;
    let solver = HeatSolver::new(&p)?;
    let mut worst: f64 = 0.0;
    for t in [0.1, 1.0, 5.0] {
        let exact = mean_heights(&chain, &propagate(chain.generator(), &start, t, DEFAULT_TOL));
        let spec = solver.solve(&HeightFunction::of(&top), t);
        for (a, b) in exact.iter().zip(&spec) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max deviation {worst:e}")))
}

fn check_sandwich(ctx: &Ctx) -> Outcome {
    let sizes: Vec<usize> = if ctx.full { (4..=10).collect() } else { vec![6, 8] };
    let mut cases = 0;
    for &n in &sizes {
        let p = random_profile(derive_seed(ctx.seed, 600 + n as u64), n, 0.5, 2.0)?;
        for k in 1..n {
            let chain = build_chain(&p, k)?;
            let starts = if chain.len() <= 300 { Starts::All } else { Starts::ExtremalOnly };
            let m = mix_exact(&chain, &[0.05, 0.25], starts, 120, DEFAULT_TOL)?;
            for &(eps, t, lo, hi) in &m.mixing {
                if !(lo <= t * (1.0 + 1e-9) && t <= hi * (1.0 + 1e-9)) {
                    return Ok((false, format!("N = {n}, k = {k}, eps = {eps}: {t} outside [{lo}, {hi}]")));
                }
                cases += 1;
            }
        }
    }
    Ok((true, format!("{cases} mixing times inside the sandwich")))
}

fn check_censoring(ctx: &Ctx) -> Outcome {
    let p = random_profile(derive_seed(ctx.seed, 700), 8, 0.5, 1.5)?;
    let c = censored_tv_at(&p, 4, 0.5, DEFAULT_TOL)?;
    Ok((c.tv_censored >= c.tv_uncensored - 1e-12, format!("censored {} vs free {}", c.tv_censored, c.tv_uncensored)))
}

fn check_monotone(ctx: &Ctx) -> Outcome {
    let p = random_profile(derive_seed(ctx.seed, 800), 10, 0.5, 2.0)?;
    let runs = if ctx.full { 50 } else { 10 };
    for r in 0..runs {
        let mut rng = stream(ctx.seed, Purpose::Start, r);
        let mid = Configuration::uniform(10, 5, &mut rng);
        let starts =
            [Configuration::extremal(10, 5, Extremal::Max)?, mid, Configuration::extremal(10, 5, Extremal::Min)?];
        for mode in [ClockMode::PerColumn, ClockMode::Literal] {
            let mut e = CoupledEnsemble::new(&p, &starts, mode, stream(ctx.seed, Purpose::Clock, r))?.with_audit(100);
            let pair = e.track_pair(0, 2);
            let mut merged = false;
            while e.step(200.0)?.is_some() {
                if !(e.ordered(1, 0) && e.ordered(2, 1)) {
                    return Ok((false, format!("order broken at t = {} in run {r}", e.time())));
                }
                if merged && e.mismatch(pair) != 0 {
                    return Ok((false, format!("merged paths separated in run {r}")));
                }
                merged |= e.mismatch(pair) == 0;
            }
        }
    }
    Ok((true, format!("{runs} runs in both clock modes")))
}

fn check_coupling_bound(ctx: &Ctx) -> Outcome {
    let (n, k) = (8, 4);
    let replicas = if ctx.full { 100_000 } else { 4_000 };
    let p = random_profile(derive_seed(ctx.seed, 900), n, 0.5, 1.5)?;
    let chain = build_chain(&p, k)?;
    let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.25).collect();
    let curve = crate::exact::tv_curve(&chain, Starts::All, &grid, DEFAULT_TOL)?;
    let max_time = grid.last().copied().unwrap_or(1.0) * 2.0;
    let times: Vec<f64> = crate::par::map_indexed(replicas, |r| {
        run_coalescence(&p, k, CoalescenceMode::TopBottom, max_time, ctx.seed, r as u64).map(|c| c.t).unwrap_or(f64::INFINITY)
    });
    for (t, d) in grid.iter().zip(&curve.d) {
        let s = proportion(times.iter().filter(|&&x| x > *t).count() as u64, replicas as u64);
        if *d > s.value + 3.0 * s.stderr {
            return Ok((false, format!("d({t}) = {d} above P[T > t] = {} +- {}", s.value, s.stderr)));
        }
    }
    Ok((true, format!("{replicas} coalescence runs over {} grid times", grid.len())))
}

fn check_wilson_mean(ctx: &Ctx) -> Outcome {
    let (n, k) = (16, 8);
    let replicas = if ctx.full { 100_000 } else { 4_000 };
    let p = random_profile(derive_seed(ctx.seed, 1000), n, 0.5, 1.5)?;
    let stat = WilsonStatistic::new(&p)?;
    let t = 1.0 / stat.lambda1();
    let f0 = stat.of(&Configuration::extremal(n, k, Extremal::Max)?);
    let paths = wilson_trajectories(&p, &stat, k, WilsonStart::Maximal, &[t], replicas, ctx.seed)?;
    let m: MeanVar = paths.iter().map(|v| v[0]).collect();
    let want = (-stat.lambda1() * t).exp() * f0;
    let z = (m.mean() - want).abs() / m.stderr();
    Ok((z <= 3.0, format!("mean {} vs {want}, z = {z:.2}", m.mean())))
}

fn check_heat_mc(ctx: &Ctx) -> Outcome {
    let (n, k) = (16, 8);
    let replicas = if ctx.full { 100_000 } else { 4_000 };
    let p = random_profile(derive_seed(ctx.seed, 1100), n, 0.5, 1.5)?;
    let kappa = HeatSolver::new(&p)?.kappa1();
    let r = heat_mean_check(&p, k, 1.0 / kappa, replicas, ctx.seed, 4.0, &AssumptionParams::default())?;
    Ok((r.agree && r.envelope_ok, format!("max z {:.2}, envelope {:.3e} vs {:.3}", r.max_z, r.envelope, r.max_mean)))
}

fn check_bracket(ctx: &Ctx) -> Outcome {
    let (n, k) = (16, 8);
    let replicas = if ctx.full { 20_000 } else { 2_000 };
    let base = random_profile(derive_seed(ctx.seed, 1200), n, 0.5, 1.5)?;
    for p in [ConductanceProfile::homogeneous(n)?, base.shuffled(ctx.seed)] {
        let t0 = 1.0 / crate::spectral::spectral_gap(&p)?;
        let r = bracket_variance(&p, k, t0, WilsonStart::Maximal, replicas, ctx.seed)?;
        let se = r.bracket.stderr.hypot(r.bound.stderr);
        if r.bracket.value > r.bound.value + 3.0 * se {
            return Ok((false, format!("bracket {} above bound {}", r.bracket.value, r.bound.value)));
        }
    }
    Ok((true, "homogeneous and shuffled profiles".into()))
}

fn check_covariance(ctx: &Ctx) -> Outcome {
    let r = two_phase_covariance_audit(12, 2, CovarianceMode::ExactEnum, 0.1, ctx.seed, DEFAULT_COVARIANCE_BUDGET)?;
    if r.sum_abs_cov > r.bound || r.diagonal_sum > 2.0 + 1e-12 {
        return Ok((false, format!("sum {} bound {} diagonal {}", r.sum_abs_cov, r.bound, r.diagonal_sum)));
    }
    let replicas = if ctx.full { 200_000 } else { 20_000 };
    let (n, k) = (10, 1);
    let exact = two_phase_covariance_audit(n, k, CovarianceMode::ExactEnum, 0.1, ctx.seed, DEFAULT_COVARIANCE_BUDGET)?;
    let mc = two_phase_covariance_audit(n, k, CovarianceMode::MonteCarlo { replicas }, 0.1, ctx.seed, 0)?;
    let worst = exact
        .covariance
        .iter()
        .zip(&mc.covariance)
        .zip(&mc.entry_stderr)
        .filter(|(_, s)| **s > 0.0)
        .map(|((a, b), s)| (a - b).abs() / s)
        .fold(0.0, f64::max);
    Ok((worst <= 4.0, format!("sum {:.4} <= {:.0}; k = 1 entries within {worst:.2} sigma", r.sum_abs_cov, r.bound)))
}

fn check_area(ctx: &Ctx) -> Outcome {
    let (n, k, replicas) = if ctx.full { (64, 32, 10_000) } else { (16, 8, 1_000) };
    let p = random_profile(derive_seed(ctx.seed, 1300), n, 0.5, 1.5)?;
    let r = area_supermartingale_audit(&p, k, &AreaParams::new(replicas, ctx.seed))?;
    let ok = r.min_area >= -1e-9 && r.zero_iff_coalesced && r.supermartingale_ok();
    Ok((ok, format!("min A {:.3e}, decay checks {}", r.min_area, r.decay.len())))
}

/// Run a suite; an optional profile is checked for validity first.
pub fn run_verify(suite: Suite, seed: u64, profile: Option<ProfileFile>) -> VerifyReport {
    let ctx = Ctx { full: suite == Suite::Full, seed, profile };
    let checks = CHECKS
        .iter()
        .map(|c| {
            let start = Instant::now();
            let (passed, detail) = match (c.run)(&ctx) {
                Ok(v) => v,
                Err(e) => (false, e.to_string()),
            };
            CheckResult {
                name: c.name,
                module: c.module,
                property: c.property,
                passed,
                detail,
                millis: start.elapsed().as_millis(),
            }
        })
        .collect();
    VerifyReport { suite, seed, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let r = run_verify(Suite::Fast, 0, None);
        for c in &r.checks {
            println!("{} {} {} ms: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.millis, c.detail);
        }
        assert!(r.passed());
    }

    #[test]
    fn bad_profile_fails_validation() {
        let bad = ProfileFile { n_sites: 3, resistances: vec![1.0, -1.0] };
        let r = run_verify(Suite::Fast, 0, Some(bad));
        assert!(r.failures().iter().any(|c| c.name == "profile-validation"));
    }
}
