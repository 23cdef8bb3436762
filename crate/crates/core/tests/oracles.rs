//! Library results against dense oracles built in tests/common.

mod common;

use std::f64::consts::PI;

use sepmix_core::config::Extremal;
use sepmix_core::exact::{
    build_chain, censored_tv_at, gap_of, mix_exact, no_merge_probability, no_merge_spectral, propagate, Starts,
    DEFAULT_TOL,
};
use sepmix_core::profile::{check_assumptions, AssumptionParams};
use sepmix_core::spectral::{solve_dirichlet, solve_extended, solve_neumann, spectral_gap, HeatSolver, Method, Normalization};
use sepmix_core::{ConductanceProfile, Configuration, HeightFunction};

fn random_profile(seed: u64, n: usize) -> ConductanceProfile {
    ConductanceProfile::from_resistances(common::random_resistances(seed, n - 1, 0.5, 2.0)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn jacobi_recovers_homogeneous_walk_spectrum() {
    for n in [4usize, 8, 17] {
        let (vals, _) = common::jacobi(common::walk_generator(&vec![1.0; n - 1]));
        for i in 0..n {
            let want = 2.0 * (1.0 - (i as f64 * PI / n as f64).cos());
            assert!((-vals[n - 1 - i] - want).abs() < 1e-12, "N = {n}, i = {i}");
        }
    }
}

#[test]
fn both_boundary_problems_match_the_walk_spectrum() {
    for seed in 0..6 {
        let n = 5 + 3 * seed as usize;
        let p = random_profile(seed, n);
        let (vals, _) = common::jacobi(common::walk_generator(p.rates()));
        let neu = solve_neumann(&p, n - 1, Normalization::UnitNorm).unwrap();
        let dir = solve_dirichlet(&p, n - 1, Method::Dense, Normalization::UnitNorm).unwrap();
        let shoot = solve_dirichlet(&p, n - 1, Method::Shooting, Normalization::UnitNorm).unwrap();
        for i in 1..n {
            let want = -vals[n - 1 - i];
            assert!(rel(neu.eigenvalue(i), want) < 1e-10, "Neumann i = {i}");
            assert!(rel(dir.eigenvalue(i), want) < 1e-10, "Dirichlet i = {i}");
            assert!(rel(shoot.eigenvalue(i), want) < 1e-9, "shooting i = {i}");
        }
    }
}

#[test]
fn exclusion_gap_matches_dense_eigensolve() {
    for (seed, n, k) in [(1u64, 6usize, 2usize), (2, 7, 3), (3, 8, 4), (4, 9, 1)] {
        let p = random_profile(seed, n);
        let (_, q) = common::generator(p.rates(), n, k);
        let want = common::gap(&q);
        assert!(rel(gap_of(&build_chain(&p, k).unwrap()).unwrap(), want) < 1e-9, "N = {n}, k = {k}");
        assert!(rel(spectral_gap(&p).unwrap(), want) < 1e-9, "N = {n}, k = {k}");
    }
}

#[test]
fn chain_states_follow_the_bitmask_generator() {
    let p = random_profile(5, 7);
    let chain = build_chain(&p, 3).unwrap();
    let (states, q) = common::generator(p.rates(), 7, 3);
    let pos = |m: u64| states.binary_search(&m).unwrap();
    for i in 0..chain.len() {
        let a = pos(chain.mask(i));
        for (j, v) in chain.generator().row(i) {
            assert!((q[a][pos(chain.mask(j))] - v).abs() < 1e-14);
        }
        assert!((q[a][a] - chain.generator().diag()[i]).abs() < 1e-14);
    }
}

#[test]
fn uniformization_matches_dense_exponential() {
    let (n, k) = (8, 3);
    let p = random_profile(6, n);
    let chain = build_chain(&p, k).unwrap();
    let (states, q) = common::generator(p.rates(), n, k);
    let start = Configuration::extremal(n, k, Extremal::Max).unwrap();
    let p0 = chain.point_mass(&start).unwrap();
    let row0 = states.binary_search(&start.mask()).unwrap();
    for t in [0.05, 0.7, 4.0, 20.0] {
        let got = propagate(chain.generator(), &p0, t, DEFAULT_TOL);
        let want = &common::expm_sym(&q, t)[row0];
        for (i, g) in got.iter().enumerate() {
            let w = want[states.binary_search(&chain.mask(i)).unwrap()];
            assert!((g - w).abs() < 1e-10, "t = {t}");
        }
    }
}

#[test]
fn heat_solution_is_the_mean_height() {
    let (n, k) = (8, 4);
    let p = random_profile(7, n);
    let (states, q) = common::generator(p.rates(), n, k);
    let top = Configuration::extremal(n, k, Extremal::Max).unwrap();
    let row = states.binary_search(&top.mask()).unwrap();
    let solver = HeatSolver::new(&p).unwrap();
    for t in [0.1, 1.0, 5.0] {
        let dist = &common::expm_sym(&q, t)[row];
        let mut mean = vec![0.0; n + 1];
        for (&m, w) in states.iter().zip(dist) {
            for (x, h) in common::scaled_heights(m, n).into_iter().enumerate() {
                mean[x] += w * h as f64 / n as f64;
            }
        }
        let spec = solver.solve(&HeightFunction::of(&top), t);
        for (a, b) in spec.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9, "t = {t}: {a} vs {b}");
        }
    }
}

#[test]
fn mixing_time_matches_dense_bisection() {
    let (n, k) = (8, 4);
    let p = ConductanceProfile::homogeneous(n).unwrap();
    let (_, q) = common::generator(p.rates(), n, k);
    let (vals, vecs) = common::jacobi(q.clone());
    let d = |t: f64| {
        (0..q.len())
            .map(|s| {
                let u = 1.0 / q.len() as f64;
                0.5 * (0..q.len())
                    .map(|j| ((0..q.len()).map(|l| vecs[s][l] * (vals[l] * t).exp() * vecs[j][l]).sum::<f64>() - u).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    };
    let m = mix_exact(&build_chain(&p, k).unwrap(), &[0.05, 0.25], Starts::All, 200, DEFAULT_TOL).unwrap();
    for &(eps, t, _, _) in &m.mixing {
        let (mut lo, mut hi) = (0.0, 100.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if d(mid) <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(rel(t, hi) < 1e-7, "eps = {eps}: {t} vs {hi}");
    }
}

#[test]
fn censored_comparison_matches_dense_piecewise_exponential() {
    let (n, k, delta) = (8, 4, 0.5);
    let p = random_profile(8, n);
    let c = censored_tv_at(&p, k, delta, DEFAULT_TOL).unwrap();
    let (states, q) = common::generator(p.rates(), n, k);
    let mut rates = p.rates().to_vec();
    for &x in &c.blocked_columns {
        rates[x - 1] = 0.0;
    }
    let (_, q_blocked) = common::generator(&rates, n, k);
    let top = Configuration::extremal(n, k, Extremal::Max).unwrap();
    let row = states.binary_search(&top.mask()).unwrap();
    let first = common::expm_sym(&q, c.t_half)[row].clone();
    let second = common::expm_sym(&q_blocked, c.t_delta - c.t_half);
    let censored: Vec<f64> = (0..states.len()).map(|j| (0..states.len()).map(|i| first[i] * second[i][j]).sum()).collect();
    let u = 1.0 / states.len() as f64;
    let tv = 0.5 * censored.iter().map(|v| (v - u).abs()).sum::<f64>();
    assert!((tv - c.tv_censored).abs() < 1e-9, "{tv} vs {}", c.tv_censored);
    assert!((common::tv_from(&q, row, c.t_delta) - c.tv_uncensored).abs() < 1e-9);
}

#[test]
fn homogeneous_extended_eigenfunction_is_a_cosine() {
    for (n, delta) in [(20usize, 0.5), (33, 0.25), (64, 1.0)] {
        let e = solve_extended(&ConductanceProfile::homogeneous(n).unwrap(), delta).unwrap();
        let nb = e.n_bar as f64;
        assert!(rel(e.lambda_bar, 2.0 * (1.0 - (PI / nb).cos())) < 1e-10);
        let norm = (PI / (2.0 * nb)).cos();
        for (j, g) in e.g.iter().enumerate() {
            let want = (PI * (j as f64 + 0.5) / nb).cos() / norm;
            assert!((g - want).abs() < 1e-9, "N = {n}, j = {j}");
        }
    }
}

#[test]
fn two_particle_no_merge_paths_agree() {
    let p = random_profile(9, 9);
    for (x0, y0) in [(1usize, 9usize), (3, 4), (2, 7)] {
        for t in [0.3, 2.0, 15.0] {
            let a = no_merge_probability(&p, x0, y0, t).unwrap();
            let b = no_merge_spectral(&p, x0, y0, t).unwrap();
            assert!((a - b).abs() < 1e-9, "({x0}, {y0}) at {t}: {a} vs {b}");
            assert!((0.0..=1.0 + 1e-12).contains(&a));
        }
    }
}

#[test]
fn lln_discrepancy_is_the_sup_of_centered_partial_sums() {
    let r = [1.5, 0.5, 0.75, 2.0, 0.25];
    let p = ConductanceProfile::from_resistances(r.to_vec()).unwrap();
    let rep = check_assumptions(&p, 3, &AssumptionParams::default()).unwrap();
    // Partial sums minus x: 0.5, 0, -0.25, 0.75, 0.
    assert!((rep.lln_discrepancy - 0.75 / 6.0).abs() < 1e-15);
    assert_eq!((rep.min_resistance, rep.max_resistance), (0.25, 2.0));
}
