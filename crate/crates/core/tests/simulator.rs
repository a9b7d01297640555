use fracpop::fractional::QuadratureSpec;
use fracpop::model::{
    ModelParams, MutationKernel, PointMeasure, RateFn, TestDictionary, TestFunction, TraitFn,
};
use fracpop::rng::stream;
use fracpop::simulator::{
    ensemble_run, martingale_path, EnsembleSpec, EventKind, InitialCondition, MartingaleTracker, Observer,
    RateMode, Simulator, StepOutcome,
};
use fracpop::stats::Moments;
use fracpop::Error;

#[allow(clippy::too_many_arguments)]
fn params(r: f64, b: RateFn, d: RateFn, p: f64, u: TraitFn, v: TraitFn, eta: f64, k: u64) -> ModelParams {
    ModelParams::new(
        TraitFn::constant(r),
        b,
        d,
        TraitFn::constant(p),
        u,
        v,
        MutationKernel::pareto(1.5).unwrap(),
        eta,
        k,
    )
    .unwrap()
}

fn logistic_with_mutation(k: u64) -> ModelParams {
    params(
        2.0,
        RateFn::constant(1.0),
        RateFn::logistic(0.0, 1.0),
        0.1,
        TraitFn::constant(1.0),
        TraitFn::zero(),
        0.5,
        k,
    )
}

fn spread(k: u64, n: usize) -> PointMeasure {
    let traits: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    PointMeasure::from_traits(k, &traits)
}

#[test]
fn rates_scale_with_k_eta() {
    let p = params(1.0, RateFn::constant(0.0), RateFn::constant(0.0), 0.0, TraitFn::zero(), TraitFn::zero(), 0.5, 100);
    let sim = Simulator::new(&p);
    let state = sim.init(spread(100, 7)).unwrap();
    for (b, d) in state.event_rates(sim.dynamics()).unwrap() {
        assert!((b - 10.0).abs() < 1e-12 && (d - 10.0).abs() < 1e-12);
    }
    let empty = sim.init(PointMeasure::new(100)).unwrap();
    assert!(empty.event_rates(sim.dynamics()).unwrap().is_empty());
}

#[test]
fn competition_rate_is_direct_convolution() {
    let k = 100;
    let p = params(1.0, RateFn::constant(0.0), RateFn::logistic(0.0, 1.0), 0.0, TraitFn::constant(1.0), TraitFn::zero(), 0.5, k);
    let sim = Simulator::new(&p);
    assert_eq!(sim.mode(), RateMode::Separable);
    let i = 13;
    let state = sim.init(spread(k, i)).unwrap();
    for (_, d) in state.event_rates(sim.dynamics()).unwrap() {
        assert!((d - (10.0 + i as f64 / k as f64)).abs() < 1e-12);
    }

    // Same through the per-atom caches.
    let g = TraitFn::Gaussian { amplitude: 1.0, center: 0.0, width: 0.5 };
    let p = params(1.0, RateFn::constant(0.0), RateFn::logistic(0.0, 1.0), 0.0, g.clone(), TraitFn::zero(), 0.5, k);
    let sim = Simulator::new(&p);
    assert_eq!(sim.mode(), RateMode::General);
    let nu = spread(k, i);
    let state = sim.init(nu.clone()).unwrap();
    for (a, (_, d)) in nu.atoms().iter().zip(state.event_rates(sim.dynamics()).unwrap()) {
        assert!((d - 10.0 - nu.convolve_at(&g, a.trait_value)).abs() < 1e-12);
    }
}

#[test]
fn negative_rate_is_an_error() {
    let p = params(0.0, RateFn::constant(1.0), RateFn::logistic(-5.0, 1.0), 0.0, TraitFn::constant(1.0), TraitFn::zero(), 0.5, 10);
    let sim = Simulator::new(&p);
    let mut rng = stream(1, 0);
    let err = sim.run(spread(10, 3), 1.0, &[1.0], &mut rng, false).unwrap_err();
    assert!(matches!(err, Error::NegativeRate { .. }), "{err}");
}

#[test]
fn extinct_and_frozen_states() {
    let p = logistic_with_mutation(50);
    let sim = Simulator::new(&p);
    let mut state = sim.init(PointMeasure::new(50)).unwrap();
    let mut rng = stream(3, 0);
    assert_eq!(sim.step(&mut state, &mut rng).unwrap(), StepOutcome::Extinct);
    assert_eq!(state.time(), 0.0);

    let frozen = params(0.0, RateFn::constant(0.0), RateFn::constant(0.0), 0.5, TraitFn::zero(), TraitFn::zero(), 0.5, 50);
    let sim = Simulator::new(&frozen);
    let nu = spread(50, 20);
    let traj = sim.run(nu.clone(), 2.0, &[0.0, 1.0, 2.0], &mut rng, true).unwrap();
    assert!(traj.snapshots.iter().all(|s| *s == nu));
    assert_eq!(traj.summary.events, 0);
}

#[test]
fn no_mutants_without_mutation() {
    let mut p = logistic_with_mutation(200);
    p.p = TraitFn::zero();
    let sim = Simulator::new(&p);
    let nu = spread(200, 100);
    let traj = sim.run(nu.clone(), 1.0, &[1.0], &mut stream(5, 0), true).unwrap();
    let events = traj.events.unwrap();
    assert!(events.len() > 1000);
    assert!(events.iter().all(|e| e.kind != EventKind::MutantBirth));
    for a in traj.snapshots[0].atoms() {
        assert!(nu.index_of(a.trait_value).is_some());
    }
}

#[test]
fn same_seed_same_trajectory() {
    let p = logistic_with_mutation(300);
    let sim = Simulator::new(&p);
    let run = |seed| {
        sim.run(spread(300, 150), 0.5, &[0.1, 0.5], &mut stream(seed, 4), true)
            .unwrap()
    };
    let (a, b, c) = (run(9), run(9), run(10));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_ne!(a.events, c.events);
}

#[test]
fn events_change_count_by_one_and_respect_offspring_rule() {
    let p = logistic_with_mutation(200);
    let traj = Simulator::new(&p)
        .run(spread(200, 80), 0.3, &[0.3], &mut stream(11, 0), true)
        .unwrap();
    let mut nu = traj.initial.clone();
    let mut mutants = 0;
    for e in traj.events.as_ref().unwrap() {
        let before = nu.count();
        match e.kind {
            EventKind::CloneBirth => {
                assert_eq!(e.offspring_trait, Some(e.parent_trait));
                nu.add(e.parent_trait, 1);
            }
            EventKind::MutantBirth => {
                mutants += 1;
                let y = e.offspring_trait.unwrap();
                assert_ne!(y, e.parent_trait);
                nu.add(y, 1);
            }
            EventKind::Death => {
                let i = nu.index_of(e.parent_trait).unwrap();
                nu.decrement(i);
            }
        }
        assert_eq!((nu.count() as i64 - before as i64).abs(), 1);
    }
    assert!(mutants > 0);
    assert_eq!(nu, traj.snapshots[0]);
}

#[test]
fn event_ceiling_is_reported() {
    let p = logistic_with_mutation(500);
    let err = Simulator::new(&p)
        .with_event_ceiling(1000)
        .run(spread(500, 500), 10.0, &[10.0], &mut stream(1, 1), false)
        .unwrap_err();
    match err {
        Error::EventCeiling { ceiling, .. } => assert_eq!(ceiling, 1000),
        e => panic!("{e}"),
    }
}

/// Checks the incremental interaction caches against a direct recomputation
/// just before every periodic rebuild.
struct DriftProbe {
    worst: f64,
    checks: usize,
}

impl Observer for DriftProbe {
    fn event(
        &mut self,
        d: &fracpop::simulator::Dynamics,
        s: &fracpop::simulator::SimState,
        _: &fracpop::simulator::Event,
        _: fracpop::simulator::AtomChange,
    ) -> fracpop::Result<()> {
        if (s.event_count() + 1) % 10_000 == 0 {
            self.worst = self.worst.max(s.cache_drift(d));
            self.checks += 1;
        }
        Ok(())
    }
}

#[test]
fn incremental_caches_match_rebuild() {
    let g = TraitFn::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 };
    let p = params(1.0, RateFn::logistic(1.0, -0.2), RateFn::logistic(0.0, 1.0), 0.2, g.clone(), g, 0.5, 200);
    let sim = Simulator::new(&p);
    assert_eq!(sim.mode(), RateMode::General);
    let mut probe = DriftProbe { worst: 0.0, checks: 0 };
    sim.run_observed(spread(200, 200), 6.0, &[], &mut stream(2, 0), &mut probe).unwrap();
    assert!(probe.checks >= 3, "only {} checks", probe.checks);
    assert!(probe.worst < 1e-10, "cache drift {}", probe.worst);
}

#[test]
fn pure_death_mean_mass_decays_exponentially() {
    let delta = 1.5;
    let p = params(0.0, RateFn::constant(0.0), RateFn::constant(delta), 0.0, TraitFn::zero(), TraitFn::zero(), 0.5, 50);
    let times = [0.25, 0.5, 1.0];
    let spec = EnsembleSpec::new(1.0, times.to_vec(), 1000, 21, TestDictionary::mass_and_bumps(&[], 1.0).unwrap());
    let nu = spread(50, 50);
    let m0 = nu.mass();
    let stats = ensemble_run(&p, &InitialCondition::Fixed(nu), &spec).unwrap();
    for (t, row) in times.iter().zip(&stats.pairings) {
        let z = row[0].z_score(m0 * (-delta * t).exp());
        assert!(z.abs() < 3.0, "t={t} z={z}");
    }
}

fn tracker_and_replay_agree(p: &ModelParams, seed: u64) {
    let sim = Simulator::new(p);
    let times = [0.05, 0.1, 0.2];
    let fs = vec![
        TestFunction::Constant { value: 1.0 },
        TestFunction::gaussian(1.0, 0.3, 0.7),
        TestFunction::sine(1.5),
    ];
    let quad = QuadratureSpec::default();
    let nu = spread(p.k, 60);
    let mut tracker = MartingaleTracker::new(fs.clone(), true, quad);
    sim.run_observed(nu.clone(), 0.2, &times, &mut stream(seed, 0), &mut tracker).unwrap();
    let traj = sim.run(nu, 0.2, &times, &mut stream(seed, 0), true).unwrap();
    for (j, f) in fs.iter().enumerate() {
        let path = martingale_path(&traj, f, p, &quad).unwrap();
        for (t, out) in tracker.outputs.iter().enumerate() {
            let (m, q) = (out.martingale[j], out.bracket[j]);
            assert!((m - path.values[t]).abs() < 1e-8 * (1.0 + m.abs()), "f{j} t{t}: {m} vs {}", path.values[t]);
            assert!((q - path.bracket[t]).abs() < 1e-8 * (1.0 + q.abs()), "f{j} t{t}: {q} vs {}", path.bracket[t]);
            assert!((out.pairing[j] - traj.snapshots[t].pair(f)).abs() < 1e-10);
        }
        assert!(path.bracket.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn online_martingale_matches_event_log_replay() {
    tracker_and_replay_agree(&logistic_with_mutation(100), 31);
    let g = TraitFn::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 };
    let general = params(1.0, RateFn::constant(0.5), RateFn::logistic(0.1, 1.0), 0.2, g, TraitFn::zero(), 0.5, 100);
    assert_eq!(Simulator::new(&general).mode(), RateMode::General);
    tracker_and_replay_agree(&general, 32);
}

#[test]
fn martingale_of_zero_function_vanishes() {
    let p = logistic_with_mutation(100);
    let traj = Simulator::new(&p)
        .run(spread(100, 50), 0.5, &[0.25, 0.5], &mut stream(4, 0), true)
        .unwrap();
    let zero = TestFunction::Constant { value: 0.0 };
    let path = martingale_path(&traj, &zero, &p, &QuadratureSpec::default()).unwrap();
    assert!(path.values.iter().chain(&path.bracket).all(|&v| v == 0.0));

    let no_log = Simulator::new(&p)
        .run(spread(100, 50), 0.5, &[0.5], &mut stream(4, 0), false)
        .unwrap();
    assert!(matches!(
        martingale_path(&no_log, &zero, &p, &QuadratureSpec::default()),
        Err(Error::MissingEventLog)
    ));
}

#[test]
fn martingale_has_zero_mean() {
    let p = logistic_with_mutation(100);
    let dict = TestDictionary::new(vec![
        ("one".into(), TestFunction::Constant { value: 1.0 }),
        ("bump".into(), TestFunction::gaussian(1.0, 0.5, 0.5)),
    ])
    .unwrap();
    let spec = EnsembleSpec::new(0.5, vec![0.25, 0.5], 500, 77, dict).with_martingale(true);
    let stats = ensemble_run(&p, &InitialCondition::Fixed(spread(100, 100)), &spec).unwrap();
    for row in stats.martingale.as_ref().unwrap() {
        for m in row {
            assert!(m.z_score(0.0).abs() < 4.0, "z = {}", m.z_score(0.0));
        }
    }
}

#[test]
fn single_replica_ensemble_matches_single_run() {
    let p = logistic_with_mutation(100);
    let dict = TestDictionary::mass_and_bumps(&[0.0], 0.5).unwrap();
    let spec = EnsembleSpec::new(0.5, vec![0.5], 1, 8, dict.clone());
    let nu = spread(100, 40);
    let stats = ensemble_run(&p, &InitialCondition::Fixed(nu.clone()), &spec).unwrap();
    let traj = Simulator::new(&p).run(nu, 0.5, &[0.5], &mut stream(8, 0), false).unwrap();
    for (m, e) in stats.pairings[0].iter().zip(dict.iter()) {
        assert_eq!(m.mean, traj.snapshots[0].pair(&e.function));
        assert_eq!(m.variance(), 0.0);
    }
}

#[test]
fn ensemble_does_not_depend_on_thread_count() {
    let p = logistic_with_mutation(100);
    let spec = EnsembleSpec::new(0.3, vec![0.1, 0.3], 12, 5, TestDictionary::mass_and_bumps(&[0.0, 1.0], 0.5).unwrap());
    let init = InitialCondition::Sampled(fracpop::model::InitialDensity::Uniform { lo: -1.0, hi: 1.0, mass: 1.0 });
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let stats = pool.install(|| ensemble_run(&p, &init, &spec).unwrap());
        serde_json::to_string(&stats).unwrap()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn standard_error_halves_when_replicas_quadruple() {
    let p = logistic_with_mutation(50);
    let dict = TestDictionary::mass_and_bumps(&[], 1.0).unwrap();
    let se = |n| {
        let spec = EnsembleSpec::new(0.5, vec![0.5], n, 3, dict.clone());
        ensemble_run(&p, &InitialCondition::Fixed(spread(50, 50)), &spec).unwrap().pairings[0][0].std_error()
    };
    let ratio = se(100) / se(400);
    assert!((ratio - 2.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn cubic_sup_mass_moment_is_flat_in_k() {
    let mut est = Vec::new();
    for k in [50, 100, 200] {
        let p = logistic_with_mutation(k);
        let spec = EnsembleSpec::new(1.0, vec![1.0], 200, 13, TestDictionary::mass_and_bumps(&[], 1.0).unwrap());
        let stats = ensemble_run(&p, &InitialCondition::Fixed(spread(k, k as usize)), &spec).unwrap();
        let m = Moments::from_slice(&stats.replicas.iter().map(|r| r.suprema[0].powi(3)).collect::<Vec<_>>());
        est.push(m.mean);
    }
    for w in est.windows(2) {
        assert!(w[1] <= 1.2 * w[0], "moments {est:?}");
    }
}
