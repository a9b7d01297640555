use fracpop::fractional::{c_alpha, QuadratureSpec};
use fracpop::harness::benchmarks::{bump_density, full_benchmark, logistic_mass};
use fracpop::model::{
    psi, InitialDensity, ModelParams, MutationKernel, Pairing, RateFn, TestFunction, TraitFn,
};
use fracpop::pde::{
    rhs, solve, uniform_times, weak_form_residual, weak_form_sides, FracLaplacianStencil, GridFunction,
    GridSpec, PdeOperator, PdeRun,
};
use fracpop::Error;

fn model(r: f64, b: RateFn, d: RateFn, p: f64, u: TraitFn) -> ModelParams {
    ModelParams::new(
        TraitFn::constant(r),
        b,
        d,
        TraitFn::constant(p),
        u,
        TraitFn::zero(),
        MutationKernel::pareto(1.5).unwrap(),
        0.5,
        100,
    )
    .unwrap()
}

/// Diffusion only: `b ≡ d`, `sigma~ = 0.15`.
fn balanced() -> ModelParams {
    model(2.0, RateFn::constant(1.0), RateFn::constant(1.0), 0.1, TraitFn::zero())
}

#[test]
fn zero_density_has_zero_rhs() {
    let grid = GridSpec::new(-5.0, 5.0, 101).unwrap();
    let out = rhs(&GridFunction::zeros(grid), &full_benchmark(100).unwrap()).unwrap();
    assert!(out.values.iter().all(|&v| v == 0.0));
}

#[test]
fn pure_growth_rhs_is_identity() {
    let p = model(2.0, RateFn::constant(1.0), RateFn::constant(0.0), 0.0, TraitFn::zero());
    let grid = GridSpec::new(-5.0, 5.0, 101).unwrap();
    let xi = GridFunction::from_density(grid, &bump_density()).unwrap();
    let out = rhs(&xi, &p).unwrap();
    assert_eq!(out.values, xi.values);
}

/// Smooth window equal to 1 on `[-a, a]` and 0 outside `[-b, b]`.
fn window(x: f64, a: f64, b: f64) -> f64 {
    let s = ((x.abs() - a) / (b - a)).clamp(0.0, 1.0);
    1.0 - psi(s)
}

#[test]
fn stencil_reproduces_the_sine_eigenrelation_in_the_interior() {
    for alpha in [0.5, 1.0, 1.5] {
        for k in [1.0, 2.0] {
            let grid = GridSpec::new(-60.0, 60.0, 6001).unwrap();
            let xs = grid.points();
            let g: Vec<f64> = xs.iter().map(|&x| (k * x).sin() * window(x, 30.0, 55.0)).collect();
            let st = FracLaplacianStencil::new(alpha, grid.dx(), grid.n_points);
            let lam = c_alpha(alpha) * f64::powf(k, alpha);
            let mut worst: f64 = 0.0;
            for (i, &x) in xs.iter().enumerate().filter(|(_, x)| x.abs() <= 5.0) {
                worst = worst.max((st.apply_at(&g, i) + lam * (k * x).sin()).abs());
            }
            assert!(worst < 5e-3 * lam, "alpha={alpha} k={k}: {worst}");
        }
    }
}

#[test]
fn nonlocal_term_acts_on_sigma_tilde_times_density() {
    let p = full_benchmark(100).unwrap();
    let grid = GridSpec::new(-10.0, 10.0, 401).unwrap();
    let xi = GridFunction::from_density(grid, &bump_density()).unwrap();
    let op = PdeOperator::new(&p, grid).unwrap();
    let st = FracLaplacianStencil::new(1.5, grid.dx(), grid.n_points);
    let g: Vec<f64> = xi.values.iter().map(|v| 0.15 * v).collect();
    let parts = op.parts(&xi.values);
    for (a, b) in parts.nonlocal.iter().zip(st.apply(&g)) {
        assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn balanced_rates_conserve_mass_up_to_leak() {
    let grid = GridSpec::new(-20.0, 20.0, 1024).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    let run = solve(&xi0, &balanced(), 1.0, 1e-3, &uniform_times(1.0, 10)[1..]).unwrap();
    let d = &run.diagnostics;
    for s in &run.snapshots {
        assert!((s.mass() - xi0.mass()).abs() < 1e-6 + d.leaked_mass);
    }
    // The mass lost is exactly what the nonlocal term carried out.
    assert!((d.final_mass + d.leaked_mass + d.clipped_mass - d.initial_mass).abs() < 1e-12);
    assert!(d.leaked_mass > 0.0 && d.leaked_mass < 1e-2);
}

#[test]
fn logistic_mass_without_mutation() {
    let p = model(2.0, RateFn::constant(1.0), RateFn::logistic(0.0, 1.0), 0.0, TraitFn::constant(1.0));
    let grid = GridSpec::new(-10.0, 10.0, 201).unwrap();
    let xi0 = GridFunction::from_fn(grid, |_| 0.5 / 20.0).unwrap();
    let run = solve(&xi0, &p, 1.0, 0.01, &[1.0]).unwrap();
    assert!((run.last().mass() - logistic_mass(0.5, 1.0)).abs() < 1e-3);
}

#[test]
fn pure_diffusion_smooths_and_keeps_mass() {
    let p = model(2.0, RateFn::constant(0.0), RateFn::constant(0.0), 0.1, TraitFn::zero());
    let grid = GridSpec::new(-20.0, 20.0, 801).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    let run = solve(&xi0, &p, 1.0, 2e-3, &uniform_times(1.0, 5)[1..]).unwrap();
    let leak = run.diagnostics.leaked_mass;
    for w in run.snapshots.windows(2) {
        assert!(w[1].max() <= w[0].max() + 1e-12);
        assert!((w[1].mass() - xi0.mass()).abs() <= 1e-6 + leak);
    }
    assert!(run.last().max() < xi0.max());
}

#[test]
fn rejects_unstable_steps_and_detects_blow_up() {
    let grid = GridSpec::new(-20.0, 20.0, 801).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    match solve(&xi0, &full_benchmark(10).unwrap(), 1.0, 0.1, &[1.0]) {
        Err(Error::Unstable { dt, limit }) => assert!(dt > limit),
        other => panic!("{other:?}"),
    }
    let grow = model(0.0, RateFn::constant(30.0), RateFn::constant(0.0), 0.0, TraitFn::zero());
    match solve(&xi0, &grow, 1.0, 1e-3, &[1.0]) {
        Err(Error::BlowUp { time, .. }) => assert!(time < 1.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn even_data_stays_even() {
    let p = full_benchmark(10).unwrap();
    let grid = GridSpec::new(-15.0, 15.0, 601).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    let run = solve(&xi0, &p, 0.5, 1e-3, &[0.5]).unwrap();
    let v = &run.last().values;
    let n = v.len();
    for i in 0..n / 2 {
        assert!((v[i] - v[n - 1 - i]).abs() < 1e-10 * (1.0 + v[i]), "i={i}");
    }
}

#[test]
fn local_rates_decouple_into_scalar_odes() {
    let b = RateFn::Gaussian { amplitude: 1.5, center: 0.5, width: 1.0 };
    let d = RateFn::Window { value: 0.7, lo: -1.0, hi: 3.0 };
    let p = model(1.0, b.clone(), d.clone(), 0.0, TraitFn::zero());
    let grid = GridSpec::new(-4.0, 4.0, 81).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    let dt = 0.01;
    let run = solve(&xi0, &p, 1.0, dt, &[1.0]).unwrap();
    for (i, x) in grid.points().into_iter().enumerate() {
        let g = b.eval(x, 0.0) - d.eval(x, 0.0);
        let mut y = xi0.values[i];
        for _ in 0..100 {
            let k1 = g * y;
            let k2 = g * (y + 0.5 * dt * k1);
            let k3 = g * (y + 0.5 * dt * k2);
            let k4 = g * (y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((run.last().values[i] - y).abs() < 1e-10 * (1.0 + y), "x={x}");
    }
}

fn benchmark_run(n: usize, dt: f64) -> PdeRun {
    let grid = GridSpec::new(-20.0, 20.0, n).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    solve(&xi0, &full_benchmark(100).unwrap(), 1.0, dt, &uniform_times(1.0, 40)[1..]).unwrap()
}

#[test]
fn clipping_is_negligible_on_the_benchmark() {
    let run = benchmark_run(801, 2e-3);
    assert!(run.diagnostics.max_step_clip_fraction < 1e-8, "{:?}", run.diagnostics);
}

#[test]
fn weak_form_trivial_cases() {
    let quad = QuadratureSpec::default();
    let run = benchmark_run(401, 5e-3);
    let bump = TestFunction::gaussian(1.0, 0.5, 1.0);
    assert_eq!(weak_form_residual(&run, &bump, 0.0, &quad).unwrap(), 0.0);

    let local = model(2.0, RateFn::constant(1.0), RateFn::constant(1.0), 0.0, TraitFn::zero());
    let grid = GridSpec::new(-20.0, 20.0, 401).unwrap();
    let xi0 = GridFunction::from_density(grid, &bump_density()).unwrap();
    let flat = solve(&xi0, &local, 1.0, 0.01, &uniform_times(1.0, 10)[1..]).unwrap();
    let one = TestFunction::Constant { value: 1.0 };
    assert!(weak_form_residual(&flat, &one, 1.0, &quad).unwrap() < 1e-6);

    // With diffusion, the only discrepancy for f ≡ 1 is the mass leaving the window.
    let diffusing = solve(&xi0, &balanced(), 1.0, 5e-3, &uniform_times(1.0, 10)[1..]).unwrap();
    let r = weak_form_residual(&diffusing, &one, 1.0, &quad).unwrap();
    assert!(r < 1e-6 + diffusing.diagnostics.leaked_mass);
}

#[test]
fn weak_form_residual_is_small_and_shrinks_under_refinement() {
    let quad = QuadratureSpec::default();
    let bump = TestFunction::gaussian(1.0, 0.5, 1.0);
    let coarse = benchmark_run(201, 4e-3);
    let fine = benchmark_run(401, 2e-3);
    let rc = weak_form_residual(&coarse, &bump, 1.0, &quad).unwrap();
    let rf = weak_form_residual(&fine, &bump, 1.0, &quad).unwrap();
    let mass = fine.last().mass();
    assert!(rf < 1e-2 * mass, "residual {rf}");
    assert!(rc / rf >= 1.5, "coarse {rc} fine {rf}");
    let sides = weak_form_sides(&fine, &bump, 1.0, &quad).unwrap();
    assert!(sides.lhs.abs() > 10.0 * rf);
}

#[test]
fn grid_pairing_and_storage() {
    let run = benchmark_run(201, 4e-3);
    let one = TestFunction::Constant { value: 1.0 };
    assert_eq!(run.last().pair(&one), run.last().mass());
    let stored = serde_json::to_string(&run.to_stored().unwrap()).unwrap();
    let back = PdeRun::from_stored(serde_json::from_str(&stored).unwrap()).unwrap();
    assert_eq!(back.snapshots, run.snapshots);
    assert_eq!(back.times, run.times);

    let d = InitialDensity::Uniform { lo: -1.0, hi: 1.0, mass: 2.0 };
    let grid = GridSpec::new(-3.0, 3.0, 601).unwrap();
    assert!((GridFunction::from_density(grid, &d).unwrap().mass() - 2.0).abs() < 2e-2);
}
