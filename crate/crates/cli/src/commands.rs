//! One function per subcommand. Each writes its CSVs under the output
//! directory and finishes with `manifest.json`.

use std::f64::consts::PI;
use std::path::Path;

use sepmix_core::config::{binomial, Extremal};
use sepmix_core::dynamics::{ClockMode, CoupledEnsemble, EventRecord};
use sepmix_core::estimators::{
    area_supermartingale_audit, bracket_variance, heat_mean_check, two_phase_covariance_audit, wilson_lower_estimate,
    AreaParams, CoalescenceSample, CovarianceMode, WilsonParams, WilsonStart,
};
use sepmix_core::exact::{build_chain_with_budget, mix_exact as exact_mixing, Starts, DEFAULT_TOL};
use sepmix_core::experiments::{
    fmt_f64, run_cutoff_profile, run_verify, EstimateKind, ExperimentConfig, RunOutput, Suite,
};
use sepmix_core::profile::{AssumptionParams, ConductanceProfile, ProfileFile};
use sepmix_core::rng::{derive_seed, stream, Purpose};
use sepmix_core::spectral::{solve_dirichlet, solve_neumann, spectral_gap, Boundary, HeatSolver, Normalization};
use sepmix_core::stats::Estimate;
use sepmix_core::{Configuration, Error, Result};

pub const ESTIMATE_HEADERS: [&str; 5] = ["quantity", "value", "stderr", "replicas", "seed"];
pub const EVENT_HEADERS: [&str; 5] = ["t", "x", "dir", "applied", "member_states_hash"];

/// Seed of the sub-run at system size `n`.
fn seed_for(cfg: &ExperimentConfig, n: usize) -> u64 {
    derive_seed(cfg.seed, n as u64)
}

fn sizes(cfg: &ExperimentConfig) -> Result<Vec<(ConductanceProfile, usize)>> {
    cfg.n_ladder.iter().map(|&n| Ok((cfg.profile.build(n)?, cfg.k_rule.k(n)))).collect()
}

fn height_headers(n: usize) -> Vec<String> {
    (0..=n).map(|x| format!("h{x}")).collect()
}

fn event_rows(log: &[EventRecord]) -> impl Iterator<Item = Vec<String>> + '_ {
    log.iter().map(|e| {
        vec![fmt_f64(e.t), e.x.to_string(), e.dir.to_string(), u8::from(e.applied).to_string(), e.member_states_hash.clone()]
    })
}

/// One row of the estimate table.
struct Quantity {
    name: String,
    value: f64,
    stderr: f64,
    replicas: usize,
}

impl Quantity {
    fn exact(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, stderr: 0.0, replicas: 0 }
    }

    fn mc(name: impl Into<String>, e: Estimate) -> Self {
        Self { name: name.into(), value: e.value, stderr: e.stderr, replicas: e.replicas as usize }
    }

    fn flag(name: impl Into<String>, v: bool) -> Self {
        Self::exact(name, f64::from(u8::from(v)))
    }
}

fn write_estimates(out: &mut RunOutput, name: &str, rows: &[Quantity], seed: u64) -> Result<()> {
    out.csv(
        name,
        &ESTIMATE_HEADERS,
        rows.iter().map(|q| {
            vec![q.name.clone(), fmt_f64(q.value), fmt_f64(q.stderr), q.replicas.to_string(), seed.to_string()]
        }),
    )?;
    Ok(())
}

/// `index, eigenvalue, N2_scaled` plus one shape file per eigenfunction.
pub fn spectrum(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = RunOutput::new(&cfg.output_dir)?;
    let s = &cfg.spectrum;
    for &n in &cfg.n_ladder {
        let p = cfg.profile.build(n)?;
        let count = s.count.min(n - 1);
        let sys = match s.boundary {
            Boundary::Neumann => solve_neumann(&p, count, Normalization::FirstSite)?,
            Boundary::Dirichlet => solve_dirichlet(&p, count, s.method, Normalization::FirstSite)?,
        };
        let scale = (n * n) as f64 / (PI * PI);
        let first = sys.first_index;
        let indices: Vec<usize> = (0..sys.len()).map(|j| j + first).filter(|&i| i >= 1).collect();
        out.csv(
            &format!("spectrum_N{n}.csv"),
            &["index", "eigenvalue", "N2_scaled"],
            indices.iter().map(|&i| vec![i.to_string(), fmt_f64(sys.eigenvalue(i)), fmt_f64(scale * sys.eigenvalue(i))]),
        )?;
        for &i in &indices {
            let g = sys.eigenfunction(i);
            let w = i as f64 * PI / n as f64;
            // Homogeneous shapes with the same value at x = 1.
            let reference = |x: usize| match s.boundary {
                Boundary::Neumann => (w * (x as f64 - 0.5)).cos(),
                Boundary::Dirichlet => (w * x as f64).sin() / w.sin(),
            };
            out.csv(
                &format!("eigenfunction_N{n}_i{i}.csv"),
                &["x", "g", "reference_shape"],
                g.iter().enumerate().map(|(j, v)| vec![(j + 1).to_string(), fmt_f64(*v), fmt_f64(reference(j + 1))]),
            )?;
        }
        log::info!("N = {n}: first eigenvalue {} (N^2/pi^2 scaled {})", sys.eigenvalue(indices[0]), scale * sys.eigenvalue(indices[0]));
    }
    out.finish("spectrum", &cfg.to_value(), &[cfg.seed])?;
    Ok(())
}

fn simulation_starts(cfg: &ExperimentConfig, n: usize, k: usize) -> Result<Vec<Configuration>> {
    if cfg.simulate.starts.is_empty() {
        return Ok(vec![Configuration::extremal(n, k, Extremal::Max)?, Configuration::extremal(n, k, Extremal::Min)?]);
    }
    let starts = cfg.simulate.starts.iter().map(|s| Configuration::parse(s)).collect::<Result<Vec<_>>>()?;
    let k0 = starts[0].k();
    if starts.iter().any(|c| c.n() != n || c.k() != k0) {
        return Err(Error::param(format!("every start must have N = {n} sites and the same particle count")));
    }
    Ok(starts)
}

/// Height snapshots of coupled members: `replica, member, t, h0..hN` with heights scaled by N.
pub fn simulate(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = RunOutput::new(&cfg.output_dir)?;
    let s = &cfg.simulate;
    let replicas = cfg.replicas.general;
    let mut seeds = Vec::new();
    for &n in &cfg.n_ladder {
        let p = cfg.profile.build(n)?;
        let starts = simulation_starts(cfg, n, cfg.k_rule.k(n))?;
        let seed = seed_for(cfg, n);
        seeds.push(seed);
        let times: Vec<f64> = (0..=s.snapshots).map(|j| s.horizon * j as f64 / s.snapshots.max(1) as f64).collect();
        let mut rows = Vec::new();
        let mut log = None;
        for r in 0..replicas {
            let mut e = CoupledEnsemble::new(&p, &starts, s.clock, stream(seed, Purpose::Clock, r as u64))?.with_audit(1000);
            if r == 0 && s.event_log {
                e = e.with_event_log();
            }
            for &t in &times {
                e.evolve(t)?;
                for (m, member) in e.members().iter().enumerate() {
                    let mut row = vec![r.to_string(), m.to_string(), fmt_f64(t)];
                    row.extend(member.scaled_heights().iter().map(|h| h.to_string()));
                    rows.push(row);
                }
            }
            e.audit()?;
            if let Some(l) = e.event_log() {
                log = Some(l.to_vec());
            }
        }
        let mut headers = vec!["replica".to_string(), "member".into(), "t".into()];
        headers.extend(height_headers(n));
        let headers: Vec<&str> = headers.iter().map(String::as_str).collect();
        out.csv(&format!("heights_N{n}.csv"), &headers, rows)?;
        if let Some(l) = log {
            out.csv(&format!("events_N{n}.csv"), &EVENT_HEADERS, event_rows(&l))?;
        }
        log::info!("N = {n}: {replicas} replicas to t = {}", s.horizon);
    }
    out.finish("simulate", &cfg.to_value(), &seeds)?;
    Ok(())
}

/// Coalescence times of ∧ and ∨ plus the (1−ε)-quantile upper estimates.
pub fn coalesce(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = RunOutput::new(&cfg.output_dir)?;
    let mut seeds = Vec::new();
    for (p, k) in sizes(cfg)? {
        let n = p.n_sites();
        let seed = seed_for(cfg, n);
        seeds.push(seed);
        let sample = CoalescenceSample::run(&p, k, cfg.replicas.coalescence, seed, cfg.coalesce.max_time)?;
        out.csv(
            &format!("coalescence_N{n}.csv"),
            &["replica", "t", "censored", "events"],
            sample.records.iter().enumerate().map(|(r, rec)| {
                vec![r.to_string(), fmt_f64(rec.t), u8::from(rec.censored).to_string(), rec.event_count.to_string()]
            }),
        )?;
        let mut rows = vec![
            Quantity::mc("mean_coalescence_time", sample.mean()),
            Quantity::exact("censored", sample.censored() as f64),
            Quantity::exact("max_time", sample.max_time),
            Quantity::exact("lambda1", spectral_gap(&p)?),
        ];
        for &eps in &cfg.eps {
            match sample.upper_quantile(eps) {
                Ok(t) => rows.push(Quantity { replicas: sample.replicas(), ..Quantity::exact(format!("upper_tmix_eps{eps}"), t) }),
                Err(e) => log::warn!("N = {n}, eps = {eps}: {e}"),
            }
        }
        write_estimates(&mut out, &format!("coalescence_summary_N{n}.csv"), &rows, seed)?;
        if cfg.coalesce.event_log {
            let first = &sample.records[0];
            let starts = [Configuration::extremal(n, k, Extremal::Max)?, Configuration::extremal(n, k, Extremal::Min)?];
            let mut e = CoupledEnsemble::new(&p, &starts, ClockMode::PerColumn, stream(seed, Purpose::Clock, 0))?.with_event_log();
            let pair = e.track_pair(0, 1);
            while e.mismatch(pair) != 0 && e.step(sample.max_time)?.is_some() {}
            // Replaying the same clocks must reproduce the recorded time.
            if e.rings() != first.event_count {
                return Err(Error::invariant(
                    "replay determinism",
                    format!("replica 0 replay saw {} rings, the run saw {}", e.rings(), first.event_count),
                ));
            }
            out.csv(&format!("events_N{n}.csv"), &EVENT_HEADERS, event_rows(e.event_log().unwrap_or_default()))?;
        }
        log::info!("N = {n}, k = {k}: mean T = {:.4}, censored {}", sample.mean().value, sample.censored());
    }
    out.finish("coalesce", &cfg.to_value(), &seeds)?;
    Ok(())
}

/// Exact TV curve with the spectral sandwich ½e^{−gap t} ≤ d(t) ≤ (|S|/2)e^{−gap t}.
pub fn mix_exact(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = RunOutput::new(&cfg.output_dir)?;
    for (p, k) in sizes(cfg)? {
        let n = p.n_sites();
        let chain = build_chain_with_budget(&p, k, cfg.state_budget)?;
        let starts = cfg.mix_exact.starts.unwrap_or(if binomial(n, k) <= sepmix_core::experiments::ALL_STARTS_LIMIT {
            Starts::All
        } else {
            Starts::ExtremalOnly
        });
        let m = exact_mixing(&chain, &cfg.eps, starts, cfg.mix_exact.points, DEFAULT_TOL)?;
        let states = binomial(n, k) as f64;
        let mut rows = Vec::new();
        for (&t, &d) in m.curve.times.iter().zip(&m.curve.d) {
            let lo = 0.5 * (-m.gap * t).exp();
            let hi = (0.5 * states * (-m.gap * t).exp()).min(1.0);
            // Only a start-maximized curve is bounded below.
            let slack = 1e-9 + m.curve.tol;
            if d > hi + slack || (starts == Starts::All && d < lo - slack) {
                return Err(Error::invariant("spectral sandwich", format!("d({t}) = {d} outside [{lo}, {hi}]")));
            }
            rows.push(vec![fmt_f64(t), fmt_f64(d), fmt_f64(lo), fmt_f64(hi)]);
        }
        out.csv(&format!("mixing_curve_N{n}_k{k}.csv"), &["t", "d", "lower_sandwich", "upper_sandwich"], rows)?;
        out.csv(
            &format!("mixing_times_N{n}_k{k}.csv"),
            &["eps", "tmix", "lower_sandwich", "upper_sandwich", "gap"],
            m.mixing.iter().map(|&(e, t, lo, hi)| vec![fmt_f64(e), fmt_f64(t), fmt_f64(lo), fmt_f64(hi), fmt_f64(m.gap)]),
        )?;
        for &(e, t, lo, hi) in &m.mixing {
            log::info!("N = {n}, k = {k}, eps = {e}: t_mix = {t:.6} in [{lo:.6}, {hi:.6}]");
        }
    }
    out.finish("mix-exact", &cfg.to_value(), &[])?;
    Ok(())
}

pub fn estimate(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = RunOutput::new(&cfg.output_dir)?;
    let what = cfg.estimate.what;
    let mut seeds = Vec::new();
    for (p, k) in sizes(cfg)? {
        let n = p.n_sites();
        let seed = seed_for(cfg, n);
        seeds.push(seed);
        let name = format!("estimate_{}_N{n}.csv", serde_json::to_value(what)?.as_str().unwrap_or("unknown"));
        let rows = match what {
            EstimateKind::Wilson => wilson(cfg, &mut out, &p, k, seed)?,
            EstimateKind::Bracket => {
                let t0 = cfg.estimate.t.map_or_else(|| spectral_gap(&p).map(|g| 1.0 / g), Ok)?;
                let start = WilsonStart::for_density(n, k, 1.0 / 64.0);
                let r = bracket_variance(&p, k, t0, start, cfg.replicas.general, seed)?;
                vec![
                    Quantity::exact("t0", r.t0),
                    Quantity::mc("bracket", r.bracket),
                    Quantity::mc("direct", r.direct),
                    Quantity::mc("compensator", r.compensator),
                    Quantity::mc("bound", r.bound),
                    Quantity::exact("crude_bound", r.crude_bound),
                ]
            }
            EstimateKind::Area => area(cfg, &mut out, &p, k, seed)?,
            EstimateKind::Covariance => {
                let mode = if binomial(n, 2 * k) <= cfg.state_budget as u128 {
                    CovarianceMode::ExactEnum
                } else {
                    CovarianceMode::MonteCarlo { replicas: cfg.replicas.general }
                };
                let r = two_phase_covariance_audit(n, k, mode, cfg.delta, seed, cfg.state_budget as u128)?;
                out.csv(
                    &format!("covariance_N{n}.csv"),
                    &["x", "y", "covariance", "stderr"],
                    (0..n * n).map(|i| {
                        vec![(i / n + 1).to_string(), (i % n + 1).to_string(), fmt_f64(r.covariance[i]), fmt_f64(r.entry_stderr[i])]
                    }),
                )?;
                let reps = if let CovarianceMode::MonteCarlo { replicas } = mode { replicas } else { 0 };
                vec![
                    Quantity { replicas: reps, stderr: r.stderr, ..Quantity::exact("sum_abs_covariance", r.sum_abs_cov) },
                    Quantity { replicas: reps, ..Quantity::exact("diagonal_sum", r.diagonal_sum) },
                    Quantity::exact("bound", r.bound),
                ]
            }
            EstimateKind::Heat => {
                let solver = HeatSolver::new(&p)?;
                let t = cfg.estimate.t.unwrap_or(1.0 / solver.kappa1());
                let r = heat_mean_check(&p, k, t, cfg.replicas.general, seed, 4.0, &AssumptionParams::default())?;
                out.csv(
                    &format!("heat_N{n}.csv"),
                    &["x", "spectral", "mc_mean", "mc_stderr"],
                    (0..=n).map(|x| vec![x.to_string(), fmt_f64(r.spectral[x]), fmt_f64(r.mc_mean[x]), fmt_f64(r.mc_stderr[x])]),
                )?;
                vec![
                    Quantity::exact("t", r.t),
                    Quantity::exact("kappa1", r.kappa1),
                    Quantity { replicas: r.replicas, ..Quantity::exact("max_abs_deviation", r.max_abs_dev) },
                    Quantity { replicas: r.replicas, ..Quantity::exact("max_z", r.max_z) },
                    Quantity::flag("agree", r.agree),
                    Quantity::exact("envelope", r.envelope),
                    Quantity::exact("max_mean_height", r.max_mean),
                ]
            }
        };
        write_estimates(&mut out, &name, &rows, seed)?;
        log::info!("N = {n}, k = {k}: wrote {name}");
    }
    out.finish("estimate", &cfg.to_value(), &seeds)?;
    Ok(())
}

fn wilson(cfg: &ExperimentConfig, out: &mut RunOutput, p: &ConductanceProfile, k: usize, seed: u64) -> Result<Vec<Quantity>> {
    let n = p.n_sites();
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        let params = WilsonParams::new(p, k, eps, cfg.replicas.wilson, seed)?;
        let w = wilson_lower_estimate(p, k, &params)?;
        out.csv(
            &format!("wilson_rows_N{n}_eps{eps}.csv"),
            &[
                "t",
                "threshold",
                "exact_mean",
                "mc_mean",
                "mc_mean_stderr",
                "p_start",
                "p_start_stderr",
                "p_stationary",
                "p_stationary_stderr",
                "separation",
                "separation_stderr",
                "certified",
            ],
            w.rows.iter().map(|r| {
                vec![
                    fmt_f64(r.t),
                    fmt_f64(r.threshold),
                    fmt_f64(r.exact_mean),
                    fmt_f64(r.mc_mean.value),
                    fmt_f64(r.mc_mean.stderr),
                    fmt_f64(r.p_start.value),
                    fmt_f64(r.p_start.stderr),
                    fmt_f64(r.p_stationary.value),
                    fmt_f64(r.p_stationary.stderr),
                    fmt_f64(r.separation),
                    fmt_f64(r.separation_stderr),
                    u8::from(r.certified).to_string(),
                ]
            }),
        )?;
        if w.flagged {
            log::warn!("N = {n}, eps = {eps}: no grid time certified");
        }
        rows.push(Quantity { replicas: w.replicas, ..Quantity::exact(format!("wilson_lower_eps{eps}"), w.estimate) });
        rows.push(Quantity::exact(format!("wilson_resolution_eps{eps}"), w.resolution));
        rows.push(Quantity::flag(format!("wilson_flagged_eps{eps}"), w.flagged));
    }
    let lambda1 = spectral_gap(p)?;
    rows.push(Quantity::exact("lambda1", lambda1));
    rows.push(Quantity::exact("predicted", (k.max(2) as f64).ln() / (2.0 * lambda1)));
    Ok(rows)
}

fn area(cfg: &ExperimentConfig, out: &mut RunOutput, p: &ConductanceProfile, k: usize, seed: u64) -> Result<Vec<Quantity>> {
    let n = p.n_sites();
    let mut params = AreaParams::new(cfg.replicas.general, seed);
    params.delta = cfg.delta;
    params.horizon = cfg.estimate.t;
    let r = area_supermartingale_audit(p, k, &params)?;
    out.csv(
        &format!("area_N{n}.csv"),
        &["t", "area", "area_stderr", "height_gap", "height_gap_stderr", "coalesced", "coalesced_stderr"],
        r.rows.iter().map(|row| {
            vec![
                fmt_f64(row.t),
                fmt_f64(row.area.value),
                fmt_f64(row.area.stderr),
                fmt_f64(row.height_gap.value),
                fmt_f64(row.height_gap.stderr),
                fmt_f64(row.coalesced.value),
                fmt_f64(row.coalesced.stderr),
            ]
        }),
    )?;
    if r.min_area < -1e-9 {
        return Err(Error::invariant("area nonnegative", format!("minimum area {}", r.min_area)));
    }
    if !r.zero_iff_coalesced {
        return Err(Error::invariant("area vanishes exactly at coalescence", "mismatch seen at an event"));
    }
    if !r.supermartingale_ok() {
        log::warn!("N = {n}: a decay check exceeded {} standard errors", params.sigmas);
    }
    Ok(vec![
        Quantity::exact("lambda_bar", r.lambda_bar),
        Quantity::exact("delta_min", r.delta_min),
        Quantity::exact("horizon", r.horizon),
        Quantity { replicas: r.replicas, ..Quantity::exact("min_area", r.min_area) },
        Quantity::flag("decay_ok", r.supermartingale_ok()),
        Quantity::exact("run_length_level", r.q_level),
        Quantity::mc("run_length_exceedance", r.q_exceedance),
        Quantity::mc("run_length_mean", r.q_mean),
    ])
}

pub fn cutoff(cfg: &ExperimentConfig) -> Result<()> {
    let mut out = RunOutput::new(&cfg.output_dir)?;
    let report = run_cutoff_profile(cfg, Some(&mut out));
    // Rows finished before a failure are already on disk.
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            out.finish("cutoff", &cfg.to_value(), &[cfg.seed])?;
            return Err(e);
        }
    };
    for r in &report.rows {
        log::info!(
            "N = {}, k = {}, eps = {}: lower {:.1}, upper {:.1}, predicted {:.1}, ratio {:.3}",
            r.n,
            r.k,
            r.eps,
            r.lower,
            r.upper,
            r.predicted_scaling,
            r.ratio()
        );
    }
    out.finish("cutoff", &cfg.to_value(), &report.seeds())?;
    if !report.ratio_nonincreasing() {
        log::warn!("upper/lower ratio increases along the ladder");
    }
    Ok(())
}

/// Runs the suite; a failing check exits with code 2 and names the property.
pub fn verify(cfg: &ExperimentConfig, suite: Suite, profile: Option<&Path>) -> Result<()> {
    let file = match profile {
        Some(path) => Some(serde_json::from_str::<ProfileFile>(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    let report = run_verify(suite, cfg.seed, file);
    let mut out = RunOutput::new(&cfg.output_dir)?;
    out.csv(
        "coverage.csv",
        &["check", "module", "property", "status", "millis", "detail"],
        report.checks.iter().map(|c| {
            vec![
                c.name.to_string(),
                c.module.to_string(),
                c.property.to_string(),
                if c.passed { "pass" } else { "FAIL" }.to_string(),
                c.millis.to_string(),
                c.detail.clone(),
            ]
        }),
    )?;
    out.finish("verify", &cfg.to_value(), &[cfg.seed])?;
    for c in &report.checks {
        log::info!("{:4} {:<24} {:>7} ms  {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.millis, c.detail);
    }
    match report.failures().first() {
        None => Ok(()),
        Some(c) => Err(Error::invariant(c.property, format!("check `{}` in {}: {}", c.name, c.module, c.detail))),
    }
}
