use fracpop::fractional::{scaled_generator_point, QuadratureSpec};
use fracpop::harness::benchmarks::{bump_density, full_benchmark};
use fracpop::model::{ModelParams, MutationKernel, RateFn, TestFn, TestFunction, TraitFn};
use fracpop::pde::{solve, uniform_times, GridFunction, GridSpec, PdeRun};
use fracpop::rng::stream;
use fracpop::sde::{
    generator_point, generator_squared_point, large_jump_point, mild_residual, path_statistics,
    semigroup_estimate, simulate_path, simulate_paths, JumpSchemeSpec, MildSpec, SmallJumpMode,
};

fn scheme(eps: f64, mode: SmallJumpMode) -> JumpSchemeSpec {
    JumpSchemeSpec {
        epsilon_cut: eps,
        small_jump_mode: mode,
        dt_max: 0.01,
    }
}

fn varying(x: f64) -> f64 {
    TraitFn::Sigmoid {
        low: 0.4,
        high: 0.9,
        center: 0.0,
        scale: 1.0,
    }
    .eval(x)
}

struct Linear;

impl TestFn for Linear {
    fn value(&self, x: f64) -> f64 {
        2.0 * x - 1.0
    }
    fn deriv(&self, _: f64) -> f64 {
        2.0
    }
    fn second_deriv(&self, _: f64) -> f64 {
        0.0
    }
    fn sup_norm(&self) -> f64 {
        f64::INFINITY
    }
    fn second_deriv_bound(&self) -> f64 {
        0.0
    }
    fn variation_interval(&self) -> Option<(f64, f64)> {
        None
    }
    fn far_values(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

#[test]
fn zero_coefficient_and_zero_horizon_leave_the_start_unchanged() {
    let s = JumpSchemeSpec::default_for(1.5);
    let p = simulate_path(0.7, &|_| 0.0, 1.5, 2.0, &s, &mut stream(1, 0)).unwrap();
    assert!(p.states.iter().all(|&x| x == 0.7));
    assert!(!p.jumps.is_empty());
    let p = simulate_path(0.7, &varying, 1.5, 0.0, &s, &mut stream(1, 0)).unwrap();
    assert_eq!(p.terminal(), 0.7);
    assert!(p.jumps.is_empty());
}

#[test]
fn path_records_jumps_consistently() {
    let s = scheme(0.05, SmallJumpMode::Drop);
    let p = simulate_path(0.0, &varying, 1.2, 1.0, &s, &mut stream(2, 0)).unwrap();
    assert_eq!(p.times.len(), p.states.len());
    assert!(p.times.windows(2).all(|w| w[0] <= w[1]));
    for j in &p.jumps {
        assert!(j.size.abs() > 0.05 && j.size.abs() < 1.0);
        let i = p.times.iter().position(|&t| t == j.time).unwrap();
        assert!((p.states[i] - p.states[i - 1] - j.dx).abs() < 1e-15);
        assert!((j.dx - varying(p.states[i - 1]) * j.size).abs() < 1e-15);
    }
    // Without Gaussian steps the path moves only at jumps.
    assert_eq!(p.times.len(), p.jumps.len() + 2);
}

#[test]
fn paths_are_martingales_with_poisson_jump_counts() {
    for (sig, alpha, mode) in [
        (0.8, 1.5, SmallJumpMode::GaussianMatch),
        (0.5, 0.7, SmallJumpMode::Drop),
    ] {
        let s = scheme(0.05, mode);
        let ens = simulate_paths(0.3, &|_| sig, alpha, 1.0, &s, 100_000, 11).unwrap();
        let st = path_statistics(&ens);
        assert!(st.martingale_passes(4.0), "{st:?}");
        assert!(st.jump_counts_pass(0.999), "{st:?}");
        assert!((st.mean_jumps - st.expected_jumps).abs() < 4.0 * (st.expected_jumps / 1e5).sqrt());
    }
    let ens = simulate_paths(-0.5, &varying, 1.5, 1.0, &scheme(0.05, SmallJumpMode::GaussianMatch), 20_000, 5)
        .unwrap();
    assert!(path_statistics(&ens).martingale_passes(4.0));
}

#[test]
fn ensembles_are_reproducible() {
    let s = JumpSchemeSpec::default_for(1.5);
    let a = simulate_paths(0.0, &varying, 1.5, 0.5, &s, 500, 3).unwrap();
    let b = simulate_paths(0.0, &varying, 1.5, 0.5, &s, 500, 3).unwrap();
    assert_eq!(a.terminal, b.terminal);
    assert_eq!(a.jump_counts, b.jump_counts);
}

#[test]
fn semigroup_trivial_cases_and_contraction() {
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    let s = JumpSchemeSpec::default_for(1.5);
    let e = semigroup_estimate(&f, 0.2, 0.0, &varying, 1.5, &s, 200, 1).unwrap();
    assert_eq!(e.estimate, f.value(0.2));
    assert_eq!(e.std_error, 0.0);
    let e = semigroup_estimate(&f, 0.2, 3.0, &|_| 0.0, 1.5, &s, 200, 1).unwrap();
    assert_eq!(e.estimate, f.value(0.2));
    assert!(semigroup_estimate(&f, 0.2, 1.0, &varying, 1.5, &s, 99, 1).is_err());
    for (i, x) in [-2.0, 0.0, 0.5, 3.0].into_iter().enumerate() {
        let e = semigroup_estimate(&f, x, 2.0, &varying, 1.5, &s, 1000, i as u64).unwrap();
        assert!(e.estimate.abs() <= f.sup_norm() + 3.0 * e.std_error);
    }
}

#[test]
fn generator_vanishes_on_linear_functions_and_zero_coefficient() {
    let quad = QuadratureSpec::default();
    for alpha in [0.5, 1.0, 1.5] {
        for x in [-1.0, 0.0, 2.5] {
            assert!(generator_point(&Linear, x, alpha, &varying, &quad).unwrap().abs() < 1e-12);
        }
    }
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    assert_eq!(generator_point(&f, 0.0, 1.5, &|_| 0.0, &quad).unwrap(), 0.0);
    assert_eq!(large_jump_point(&f, 0.0, 1.5, &|_| 0.0, &quad).unwrap().value, 0.0);
}

#[test]
fn small_and_large_jumps_add_up_to_the_scaled_laplacian() {
    let quad = QuadratureSpec::default();
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    for alpha in [0.5, 1.0, 1.5] {
        for x in [-2.0, 0.0, 0.5, 1.7] {
            let small = generator_point(&f, x, alpha, &varying, &quad).unwrap();
            let large = large_jump_point(&f, x, alpha, &varying, &quad).unwrap();
            let full = scaled_generator_point(&f, x, alpha, varying, &quad).unwrap();
            assert_eq!(large.tail_bracket, 0.0);
            assert!((small + large.value - full.value).abs() < 1e-6, "alpha={alpha} x={x}");
        }
    }
}

#[test]
fn semigroup_difference_quotient_approaches_the_generator() {
    let quad = QuadratureSpec::default();
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    let s = scheme(0.01, SmallJumpMode::GaussianMatch);
    let (alpha, x) = (1.5, 0.3);
    let lf = generator_point(&f, x, alpha, &varying, &quad).unwrap();
    let l2f = generator_squared_point(&f, x, alpha, &varying, &quad).unwrap();
    for (i, t) in [0.01, 0.005].into_iter().enumerate() {
        let e = semigroup_estimate(&f, x, t, &varying, alpha, &s, 100_000, 40 + i as u64).unwrap();
        let quotient = (e.estimate - f.value(x)) / t;
        let allowed = 3.0 * e.std_error / t + t * l2f.abs();
        assert!((quotient - lf).abs() < allowed, "t={t}: {quotient} vs {lf} (allowed {allowed})");
    }
}

#[test]
fn halving_the_cut_changes_little() {
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    for x in [0.0, 1.0] {
        let a = semigroup_estimate(&f, x, 0.5, &varying, 1.5, &scheme(0.04, SmallJumpMode::GaussianMatch), 20_000, 7)
            .unwrap();
        let b = semigroup_estimate(&f, x, 0.5, &varying, 1.5, &scheme(0.02, SmallJumpMode::GaussianMatch), 20_000, 8)
            .unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 2.0 * se, "x={x}: {a:?} {b:?}");
    }
}

fn static_model() -> ModelParams {
    ModelParams::new(
        TraitFn::constant(1.0),
        RateFn::constant(0.0),
        RateFn::constant(0.0),
        TraitFn::zero(),
        TraitFn::zero(),
        TraitFn::zero(),
        MutationKernel::pareto(1.5).unwrap(),
        0.5,
        100,
    )
    .unwrap()
}

fn run_on(params: &ModelParams, n: usize, dt: f64) -> PdeRun {
    let grid = GridSpec::new(-20.0, 20.0, n).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    solve(&xi0, params, 1.0, dt, &uniform_times(1.0, 40)[1..]).unwrap()
}

#[test]
fn mild_residual_trivial_cases() {
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    let spec = MildSpec::new(1.5, 200, 1);
    let run = run_on(&static_model(), 201, 0.025);
    let r = mild_residual(&run, &f, 1.0, &spec).unwrap();
    assert_eq!(r.residual, 0.0);
    assert_eq!(r.std_error, 0.0);
    assert!(r.passed);

    let run = run_on(&full_benchmark(100).unwrap(), 201, 4e-3);
    let r = mild_residual(&run, &f, 0.0, &spec).unwrap();
    assert_eq!(r.residual, 0.0);
    assert!(mild_residual(&run, &f, 0.33, &spec).is_err());
}

#[test]
fn mild_form_matches_the_pde_on_the_benchmark() {
    let f = TestFunction::gaussian(1.0, 0.5, 1.0);
    let run = run_on(&full_benchmark(100).unwrap(), 401, 2e-3);
    let r = mild_residual(&run, &f, 1.0, &MildSpec::new(1.5, 2000, 9)).unwrap();
    assert!(r.sigma_hat_lipschitz);
    assert!(r.passed, "{r:?}");
    assert!(r.std_error < 0.05 * r.lhs.abs(), "{r:?}");
}
