//! Property tests over random profiles, configurations and seeds.

mod common;

use proptest::prelude::*;

use sepmix_core::config::{binomial, Extremal};
use sepmix_core::dynamics::{CensoringScheme, ClockMode, CoupledEnsemble, EventRecord};
use sepmix_core::exact::{build_chain, propagate, tv_curve, Starts, DEFAULT_TOL};
use sepmix_core::profile::build_profile;
use sepmix_core::rng::{stream, Purpose};
use sepmix_core::spectral::{nu_measure, solve_dirichlet, solve_neumann, Method, Normalization, TriDiagOperator};
use sepmix_core::{ConductanceProfile, Configuration, HeightFunction, ProfileSpec};

fn resistances(max_edges: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.25f64..4.0, 2..=max_edges)
}

fn config(n: usize) -> impl Strategy<Value = Configuration> {
    prop::collection::vec(any::<bool>(), n)
        .prop_filter("at least one particle and one hole", |v| v.iter().any(|&b| b) && !v.iter().all(|&b| b))
        .prop_map(|v| Configuration::from_occupancy(&v))
}

fn ensemble(p: &ConductanceProfile, k: usize, mode: ClockMode, seed: u64) -> CoupledEnsemble {
    let n = p.n_sites();
    let mut rng = stream(seed, Purpose::Start, 0);
    let starts = [
        Configuration::extremal(n, k, Extremal::Max).unwrap(),
        Configuration::uniform(n, k, &mut rng),
        Configuration::extremal(n, k, Extremal::Min).unwrap(),
    ];
    CoupledEnsemble::new(p, &starts, mode, stream(seed, Purpose::Clock, 0)).unwrap()
}

fn log_of(e: CoupledEnsemble, horizon: f64) -> Vec<EventRecord> {
    let mut e = e.with_event_log();
    e.evolve(horizon).unwrap();
    e.event_log().unwrap().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn profiles_are_valid_and_reproducible(seed in any::<u64>(), n in 2usize..200, a in 0.1f64..1.0, w in 0.1f64..3.0) {
        let spec = ProfileSpec::iid_uniform(a, a + w, seed);
        let p = build_profile(&spec, n).unwrap();
        prop_assert_eq!(p.n_sites(), n);
        prop_assert!(p.resistances().iter().all(|&r| r >= a && r <= a + w));
        prop_assert!(p.rates().iter().zip(p.resistances()).all(|(c, r)| (c * r - 1.0).abs() < 1e-15));
        prop_assert_eq!(&p, &build_profile(&spec, n).unwrap());
    }

    #[test]
    fn nonpositive_resistance_is_rejected(r in resistances(20), at in 0usize..20, bad in -2.0f64..=0.0) {
        let mut r = r;
        let i = at % r.len();
        r[i] = bad;
        let rejected = matches!(
            ConductanceProfile::from_resistances(r),
            Err(sepmix_core::Error::InvalidProfile { index, .. }) if index == i + 1
        );
        prop_assert!(rejected);
    }

    #[test]
    fn heights_round_trip(cfg in (3usize..40).prop_flat_map(config)) {
        let h = HeightFunction::of(&cfg);
        prop_assert_eq!(h.scaled().to_vec(), common::scaled_heights(cfg.mask(), cfg.n()));
        prop_assert_eq!(h.config(), cfg.clone());
        let again = HeightFunction::from_scaled(cfg.n(), cfg.k(), h.scaled().to_vec()).unwrap();
        prop_assert_eq!(again.config(), cfg);
    }

    #[test]
    fn nu_is_a_probability(r in resistances(300)) {
        let nu = nu_measure(&ConductanceProfile::from_resistances(r).unwrap());
        prop_assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(nu.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn eigenpairs_have_small_residuals_and_are_orthonormal(r in resistances(60)) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let count = 4.min(p.n_edges());
        let sys = solve_dirichlet(&p, count, Method::Dense, Normalization::UnitNorm).unwrap();
        let op = TriDiagOperator::dirichlet(&p);
        for i in 1..=count {
            let g = sys.eigenfunction(i);
            prop_assert!(op.residual(g, sys.eigenvalue(i)) < 1e-9 * sys.eigenvalue(i).max(1.0));
            for j in 1..=count {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((sys.inner(g, sys.eigenfunction(j)) - want).abs() < 1e-9);
            }
        }
        prop_assert!(sys.eigenvalues.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn shooting_agrees_with_dense(r in resistances(128)) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let count = 3.min(p.n_edges());
        let a = solve_dirichlet(&p, count, Method::Shooting, Normalization::UnitNorm).unwrap();
        let b = solve_dirichlet(&p, count, Method::Dense, Normalization::UnitNorm).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-9 * y);
        }
    }

    #[test]
    fn neumann_and_dirichlet_spectra_coincide(r in resistances(80)) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let count = 3.min(p.n_edges());
        let a = solve_neumann(&p, count, Normalization::UnitNorm).unwrap();
        let b = solve_dirichlet(&p, count, Method::Dense, Normalization::UnitNorm).unwrap();
        for i in 1..=count {
            prop_assert!((a.eigenvalue(i) - b.eigenvalue(i)).abs() <= 1e-9 * b.eigenvalue(i));
        }
    }

    #[test]
    fn coupling_preserves_order_and_particle_count(
        r in resistances(24),
        kf in 0.05f64..0.95,
        seed in any::<u64>(),
        literal in any::<bool>(),
    ) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let n = p.n_sites();
        let k = ((kf * n as f64) as usize).clamp(1, n - 1);
        let mode = if literal { ClockMode::Literal } else { ClockMode::PerColumn };
        let mut e = ensemble(&p, k, mode, seed).with_audit(1);
        while e.step(5.0).unwrap().is_some() {
            prop_assert!(e.ordered(1, 0) && e.ordered(2, 1));
        }
        for m in e.members() {
            prop_assert_eq!(m.config().k(), k);
        }
    }

    #[test]
    fn generator_is_symmetric_with_zero_row_sums(r in resistances(9), kf in 0.0f64..1.0) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let n = p.n_sites();
        let k = 1 + ((kf * (n - 1) as f64) as usize).min(n - 2);
        let chain = build_chain(&p, k).unwrap();
        prop_assert_eq!(chain.len() as u128, binomial(n, k));
        prop_assert!(chain.generator().check_generator(1e-12).is_ok());
        prop_assert!(chain.generator().asymmetry() < 1e-12);
    }

    #[test]
    fn propagation_matches_dense_exponential(r in resistances(7), t in 0.0f64..6.0, start in any::<prop::sample::Index>()) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let n = p.n_sites();
        let k = n / 2;
        let chain = build_chain(&p, k).unwrap();
        let (states, q) = common::generator(p.rates(), n, k);
        let s = start.index(chain.len());
        let mut p0 = vec![0.0; chain.len()];
        p0[s] = 1.0;
        let got = propagate(chain.generator(), &p0, t, DEFAULT_TOL);
        let want = &common::expm_sym(&q, t)[states.binary_search(&chain.mask(s)).unwrap()];
        for (i, g) in got.iter().enumerate() {
            prop_assert!((g - want[states.binary_search(&chain.mask(i)).unwrap()]).abs() < 1e-9);
        }
        prop_assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distance_is_a_nonincreasing_probability(r in resistances(7)) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let chain = build_chain(&p, p.n_sites() / 2).unwrap();
        let grid: Vec<f64> = (0..30).map(|i| 0.4 * i as f64).collect();
        let curve = tv_curve(&chain, Starts::All, &grid, DEFAULT_TOL).unwrap();
        prop_assert!(curve.d.iter().all(|&d| (-1e-12..=1.0 + 1e-12).contains(&d)));
        prop_assert!(curve.d.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn event_logs_are_deterministic(r in resistances(16), seed in any::<u64>(), literal in any::<bool>()) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let k = p.n_sites() / 2;
        let mode = if literal { ClockMode::Literal } else { ClockMode::PerColumn };
        let a = log_of(ensemble(&p, k, mode, seed), 3.0);
        let b = log_of(ensemble(&p, k, mode, seed), 3.0);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.t, x.x, x.dir, x.applied, &x.member_states_hash), (y.t, y.x, y.dir, y.applied, &y.member_states_hash));
        }
    }

    #[test]
    fn empty_censoring_leaves_the_log_unchanged(r in resistances(16), seed in any::<u64>()) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let k = p.n_sites() / 2;
        let plain = log_of(ensemble(&p, k, ClockMode::PerColumn, seed), 3.0);
        let censored = log_of(ensemble(&p, k, ClockMode::PerColumn, seed).with_censoring(CensoringScheme::empty()), 3.0);
        prop_assert_eq!(plain.len(), censored.len());
        for (x, y) in plain.iter().zip(&censored) {
            prop_assert_eq!((x.t, x.applied, &x.member_states_hash), (y.t, y.applied, &y.member_states_hash));
        }
    }

    #[test]
    fn blocking_everything_freezes_the_ensemble(r in resistances(16), seed in any::<u64>()) {
        let p = ConductanceProfile::from_resistances(r).unwrap();
        let n = p.n_sites();
        let mut e = ensemble(&p, n / 2, ClockMode::PerColumn, seed).with_censoring(CensoringScheme::block_everything(n, 10.0));
        let before: Vec<Configuration> = e.members().iter().map(|m| m.config()).collect();
        e.evolve(5.0).unwrap();
        let after: Vec<Configuration> = e.members().iter().map(|m| m.config()).collect();
        prop_assert_eq!(before, after);
        prop_assert_eq!(e.flips(), 0);
    }
}
