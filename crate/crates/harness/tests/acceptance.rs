//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test -p dnls-harness --test acceptance`
//! (`-- --nocapture` to see the lines as they complete).

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64 as C64;

use dnls_core::dynamics::{
    energy, integrate, mass, step_strang, time_jet, Integrator, ModelParams, ObserverSpec,
};
use dnls_core::energies::{
    is_admissible_pair, jet_laplacian_gap, modified_energy_even, modified_energy_odd,
};
use dnls_core::grid::{GridFunction, LatticeGrid};
use dnls_core::interp::{
    generate_decay_function, pointwise_project, shannon_interpolate, shannon_sobolev_norm,
    DecayProfile,
};
use dnls_core::spectral::{dft, dual_weight, linear_flow, sobolev_norm};
use dnls_harness::config::{ExperimentConfig, Kind};
use dnls_harness::experiments;
use dnls_harness::report::ReportFormat;

fn fixture(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).expect("fixture parses")
}

fn conclude(label: &str, pass: bool, detail: &str) {
    println!("criterion {label}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {label} failed: {detail}");
}

/// Deterministic pseudo-random field; fresh stream per (seed, grid).
fn random_field(grid: LatticeGrid, seed: u64) -> GridFunction {
    // splitmix-style generator, self-contained so the suite needs no RNG crate
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let values = (0..grid.len()).map(|_| C64::new(next(), next())).collect();
    GridFunction::new(grid, values).unwrap()
}

fn wave_packet(grid: LatticeGrid, carrier: f64, h1_norm: f64) -> GridFunction {
    let base =
        GridFunction::from_fn(grid, |a| C64::from_polar((-a[0] * a[0] / 8.0).exp(), carrier * a[0]));
    let scale = h1_norm / sobolev_norm(&base, 1.0);
    base.scale(C64::new(scale, 0.0))
}

#[test]
fn criterion_01_exact_identities() {
    let started = Instant::now();
    for (d, n) in [(1usize, 64usize), (1, 128), (2, 64), (2, 128)] {
        let grid = LatticeGrid::new(d, n, 0.37).unwrap();
        for trial in 0..100u64 {
            let u = random_field(grid, trial * 4 + d as u64);
            let sup = u.lp_norm(f64::INFINITY).unwrap();
            let l2 = u.lp_norm(2.0).unwrap();

            // band-limited extension inverts pointwise sampling
            let back = pointwise_project(&shannon_interpolate(&u, 1).unwrap(), &grid).unwrap();
            let mut err: f64 = 0.0;
            for (a, b) in back.values().iter().zip(u.values()) {
                err = err.max((a - b).norm());
            }
            assert!(err <= 1e-12 * sup, "roundtrip d={d} n={n}");

            // transform isometry
            let spec = dft(&u);
            let quad =
                spec.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() * dual_weight(&grid);
            assert!((quad - l2 * l2).abs() <= 1e-12 * l2 * l2, "isometry d={d} n={n}");

            // summation by parts, both axes
            let g = random_field(grid, trial * 4 + 2);
            for axis in 1..=d {
                let lhs: C64 = u
                    .forward_difference(axis)
                    .unwrap()
                    .values()
                    .iter()
                    .zip(g.values())
                    .map(|(&a, &b)| a * b)
                    .sum();
                let rhs: C64 = u
                    .values()
                    .iter()
                    .zip(g.backward_difference(axis).unwrap().values())
                    .map(|(&a, &b)| a * b)
                    .sum();
                assert!(
                    (lhs + rhs).norm() <= 1e-12 * lhs.norm().max(1.0),
                    "parts d={d} n={n} axis={axis}"
                );
            }

            // stencil factorization
            let lap = u.laplacian();
            let mut composed = GridFunction::zeros(grid);
            for axis in 1..=d {
                composed = composed
                    .add(&u.forward_difference(axis).unwrap().backward_difference(axis).unwrap())
                    .unwrap();
            }
            let diff = lap.sub(&composed).unwrap().lp_norm(2.0).unwrap();
            assert!(diff <= 1e-12 * lap.lp_norm(2.0).unwrap().max(1.0), "stencil d={d} n={n}");

            // free flow conserves the mass norm
            let flowed = linear_flow(&u, 0.7);
            assert!(
                (flowed.lp_norm(2.0).unwrap() - l2).abs() <= 1e-12 * l2,
                "flow norm d={d} n={n}"
            );
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    conclude(
        "01 exact identities",
        elapsed < 10.0,
        &format!("400 inputs, all identities <= 1e-12 relative, {elapsed:.1}s < 10s"),
    );
}

#[test]
fn criterion_02_mass_conservation() {
    let started = Instant::now();
    let grid = LatticeGrid::new(1, 256, 0.125).unwrap(); // L = 16
    let profile = DecayProfile::new(2.5, 1, 7).unwrap();
    let u0 = pointwise_project(
        &generate_decay_function(&profile, &grid.refined(1)).unwrap(),
        &grid,
    )
    .unwrap();
    let m0 = mass(&u0);
    let integ = Integrator::strang(ModelParams::defocusing_cubic(1), 1e-3).unwrap();
    let mut u = u0;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        u = step_strang(&u, &integ);
    }
    worst = worst.max((mass(&u) - m0).abs() / m0);
    let elapsed = started.elapsed().as_secs_f64();
    conclude(
        "02 mass conservation",
        worst <= 1e-11 && elapsed < 30.0,
        &format!("relative drift {worst:.2e} over 1e4 steps, {elapsed:.1}s < 30s"),
    );
}

#[test]
fn criterion_03_energy_near_conservation() {
    let started = Instant::now();
    let grid = LatticeGrid::new(1, 128, 0.25).unwrap(); // L = 16
    let profile = DecayProfile::new(3.0, 1, 11).unwrap();
    let u0 = pointwise_project(
        &generate_decay_function(&profile, &grid.refined(1)).unwrap(),
        &grid,
    )
    .unwrap()
    .scale(C64::new(2.0, 0.0));
    let params = ModelParams::defocusing_cubic(1);
    let e0 = energy(&u0, &params);
    let drift = |tau: f64| {
        let integ = Integrator::strang(params, tau).unwrap();
        let (u, _) = integrate(&u0, &integ, 5.0, &ObserverSpec::none()).unwrap();
        (energy(&u, &params) - e0).abs()
    };
    let factor = drift(0.02) / drift(0.01);
    let elapsed = started.elapsed().as_secs_f64();
    conclude(
        "03 energy near-conservation",
        (3.0..=5.0).contains(&factor) && elapsed < 60.0,
        &format!("halving tau reduced the drift by {factor:.2} (want 4 +- 25%), {elapsed:.1}s < 60s"),
    );
}

#[test]
fn criterion_04_interpolation_sandwich() {
    let grid = LatticeGrid::new(1, 64, 0.42).unwrap();
    let mut worst_low: f64 = 0.0;
    let mut worst_high: f64 = 0.0;
    for trial in 0..50u64 {
        let u = random_field(grid, 1000 + trial);
        for s in [0.0, 0.5, 1.0, 2.0] {
            let discrete = sobolev_norm(&u, s);
            let continuum = shannon_sobolev_norm(&u, s);
            let upper = (std::f64::consts::PI / 2.0).powf(s) * discrete;
            worst_low = worst_low.max((discrete - continuum) / discrete);
            worst_high = worst_high.max((continuum - upper) / discrete);
        }
    }
    conclude(
        "04 norm sandwich",
        worst_low <= 1e-10 && worst_high <= 1e-10,
        &format!("worst margins {worst_low:.2e}, {worst_high:.2e} (>= -1e-10 required)"),
    );
}

#[test]
fn criterion_05_interpolation_rates() {
    let started = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for name in ["interp_s0.cfg", "interp_s1.cfg"] {
        let report = experiments::run(Kind::InterpTest, &fixture(name), 1, None).unwrap();
        pass &= report.pass;
        for channel in ["projection", "roundtrip", "aliasing"] {
            details.push(format!("{name}/{channel}: {:.2}", report.slopes[channel].slope));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    pass &= elapsed < 120.0;
    conclude(
        "05 interpolation rates",
        pass,
        &format!("slopes {} at delta-s-0.2 floors, {elapsed:.1}s < 120s", details.join(", ")),
    );
}

#[test]
fn criterion_06_linear_flow_rates() {
    let started = Instant::now();
    let sharp = experiments::run(Kind::LinearFlow, &fixture("linear_flow_sharp.cfg"), 1, None).unwrap();
    let smooth =
        experiments::run(Kind::LinearFlow, &fixture("linear_flow_smooth.cfg"), 1, None).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let sharp_slope = sharp.slopes["total"].slope;
    let smooth_slope = smooth.slopes["total"].slope;
    conclude(
        "06 free-flow rates",
        sharp.pass && smooth.pass && elapsed < 120.0,
        &format!(
            "sharp slope {sharp_slope:.2} >= 0.60, smooth slope {smooth_slope:.2} in 2.0 +- 0.2, {elapsed:.1}s < 120s"
        ),
    );
}

#[test]
fn criterion_07_continuum_limit_rates() {
    let started = Instant::now();
    let defocusing =
        experiments::run(Kind::Converge, &fixture("converge_defocusing.cfg"), 2, None).unwrap();
    let soliton =
        experiments::run(Kind::Converge, &fixture("converge_soliton.cfg"), 2, None).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let defocusing_slope = defocusing.slopes["total"].slope;
    let soliton_slope = soliton.slopes["total"].slope;
    let terminal = soliton
        .channel("total")
        .unwrap()
        .points
        .last()
        .unwrap()
        .1;
    conclude(
        "07 continuum-limit rates",
        defocusing.pass && soliton.pass && elapsed < 600.0,
        &format!(
            "defocusing slope {defocusing_slope:.2} >= 0.60, soliton slope {soliton_slope:.2} >= 1.8, terminal {terminal:.2e} <= 1e-2, {elapsed:.0}s < 600s"
        ),
    );
}

#[test]
fn criterion_08_growth_bounds() {
    let started = Instant::now();
    let h1 = experiments::run(Kind::Growth, &fixture("growth_h1.cfg"), 1, None).unwrap();
    let h2 = experiments::run(Kind::Growth, &fixture("growth_h2.cfg"), 1, None).unwrap();
    let e1 = h1.scalars["fit_exponent"];
    let e2 = h2.scalars["fit_exponent"];
    let elapsed = started.elapsed().as_secs_f64();
    conclude(
        "08 growth bounds",
        h1.pass && e1 <= 0.1 && h2.pass && e2 <= 2.5 && elapsed < 600.0,
        &format!("H1 exponent {e1:.3} <= 0.1, H2 exponent {e2:.3} <= 2.5, {elapsed:.0}s < 600s"),
    );
}

#[test]
fn criterion_09_jet_correctness() {
    let grid = LatticeGrid::new(1, 32, 0.5).unwrap();
    let u0 = wave_packet(grid, 1.3, 0.8);
    let params = ModelParams::defocusing_cubic(1);
    let eps = 1e-4;
    let integ = Integrator::strang(params, eps / 8.0).unwrap();
    let fwd = integrate(&u0, &integ, eps, &ObserverSpec::none()).unwrap().0;
    let bwd = integrate(&u0.conj(), &integ, eps, &ObserverSpec::none()).unwrap().0.conj();
    let jet = time_jet(&u0, 2, &params).unwrap();

    let fd1 = fwd.sub(&bwd).unwrap().scale(C64::new(1.0 / (2.0 * eps), 0.0));
    let rel1 = fd1.sub(jet.layer(1)).unwrap().lp_norm(2.0).unwrap()
        / jet.layer(1).lp_norm(2.0).unwrap();
    let fd2 = fwd
        .add(&bwd)
        .unwrap()
        .sub(&u0.scale(C64::new(2.0, 0.0)))
        .unwrap()
        .scale(C64::new(1.0 / (eps * eps), 0.0));
    let rel2 = fd2.sub(jet.layer(2)).unwrap().lp_norm(2.0).unwrap()
        / jet.layer(2).lp_norm(2.0).unwrap();

    // linear case closes on Laplacian powers
    let linear_jet = time_jet(&u0, 2, &ModelParams::linear(1)).unwrap();
    let mut expect = u0.clone();
    let mut worst_linear: f64 = 0.0;
    for k in 1..=2 {
        expect = expect.laplacian().scale(C64::i());
        let diff = linear_jet.layer(k).sub(&expect).unwrap().lp_norm(2.0).unwrap();
        worst_linear = worst_linear.max(diff / expect.lp_norm(2.0).unwrap());
    }
    conclude(
        "09 jet correctness",
        rel1 <= 1e-5 && rel2 <= 1e-3 && worst_linear <= 1e-10,
        &format!("k=1 rel {rel1:.2e} <= 1e-5, k=2 rel {rel2:.2e} <= 1e-3, linear {worst_linear:.2e} <= 1e-10"),
    );
}

#[test]
fn criterion_10_modified_energies() {
    // linear case: exactly conserved over T = 1
    let grid = LatticeGrid::new(1, 64, 0.25).unwrap();
    let u0 = wave_packet(grid, 1.3, 1.0);
    let linear = ModelParams::linear(1);
    let integ = Integrator::strang(linear, 0.01).unwrap();
    let (u1, _) = integrate(&u0, &integ, 1.0, &ObserverSpec::none()).unwrap();
    let e2_drift = {
        let a = modified_energy_even(&u0, 1, &linear).unwrap();
        let b = modified_energy_even(&u1, 1, &linear).unwrap();
        (b.total - a.total).abs() / a.total.abs()
    };
    let e3_drift = {
        let a = modified_energy_odd(&u0, 1, &linear).unwrap();
        let b = modified_energy_odd(&u1, 1, &linear).unwrap();
        (b.total - a.total).abs() / a.total.abs()
    };

    // small-amplitude cubic drift against the leading term
    let params = ModelParams::defocusing_cubic(1);
    let small = wave_packet(grid, 2.0, 0.01);
    let integ = Integrator::strang(params, 1e-3).unwrap();
    let e0 = modified_energy_even(&small, 1, &params).unwrap();
    let (small1, _) = integrate(&small, &integ, 1.0, &ObserverSpec::none()).unwrap();
    let e1 = modified_energy_even(&small1, 1, &params).unwrap();
    let small_drift = (e1.total - e0.total).abs() / e0.leading;

    // spacing uniformity of the jet/Laplacian gap ratio for k = 1, 2
    let master = LatticeGrid::new(1, 160, 0.1).unwrap().refined(2);
    let profile = DecayProfile::new(4.0, 1, 5).unwrap();
    let field = generate_decay_function(&profile, &master).unwrap();
    let mut worst_trend: f64 = 0.0;
    for k in [1usize, 2] {
        let mut points = Vec::new();
        for h in [0.4, 0.2, 0.1] {
            let coarse = LatticeGrid::from_half_width(1, 8.0, h).unwrap();
            let u = pointwise_project(&field, &coarse).unwrap();
            let (gap, reference) = jet_laplacian_gap(&u, k, 0.0, &params).unwrap();
            points.push((h.ln(), (gap / reference).ln()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        worst_trend = worst_trend.max((cov / var).abs());
    }

    conclude(
        "10 modified energies",
        e2_drift <= 1e-10 && e3_drift <= 1e-10 && small_drift <= 1e-6 && worst_trend <= 0.15,
        &format!(
            "linear drifts {e2_drift:.2e}/{e3_drift:.2e} <= 1e-10, small-amplitude {small_drift:.2e} <= 1e-6, gap trend {worst_trend:.3} within 0.15"
        ),
    );
}

#[test]
fn criterion_11_functional_checks() {
    let report =
        experiments::run(Kind::FunctionalCheck, &fixture("functional.cfg"), 1, None).unwrap();
    // admissibility arithmetic, exact
    let table_ok = is_admissible_pair(6.0, f64::INFINITY, 1)
        && is_admissible_pair(8.0, 8.0, 1)
        && !is_admissible_pair(6.0, 4.0, 1)
        && is_admissible_pair(3.0, f64::INFINITY, 2)
        && !is_admissible_pair(6.0, 3.0, 2)
        && !is_admissible_pair(2.0, f64::INFINITY, 3);
    let gn = report.slopes["gn_ratio"].slope;
    let st = report.slopes["strichartz_ratio"].slope;
    conclude(
        "11 functional checks",
        report.pass && table_ok,
        &format!("GN trend {gn:.3}, space-time trend {st:.3} within 0.15; admissibility table exact"),
    );
}

#[test]
fn criterion_12_determinism_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("converge_defocusing.cfg");
    let run = |jobs: usize, sub: &str| {
        let out = dir.path().join(sub);
        experiments::run_and_write(Kind::Converge, &cfg, jobs, &out, ReportFormat::Json).unwrap();
        out
    };
    let a = run(1, "jobs1");
    let b = run(8, "jobs8");

    let csv_a = std::fs::read(a.join("converge_channels.csv")).unwrap();
    let csv_b = std::fs::read(b.join("converge_channels.csv")).unwrap();
    let gp_a = std::fs::read(a.join("converge_channels.gp")).unwrap();
    let gp_b = std::fs::read(b.join("converge_channels.gp")).unwrap();

    // the JSON reports agree except for wall-clock time
    let mut ja: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("converge_report.json")).unwrap()).unwrap();
    let mut jb: serde_json::Value =
        serde_json::from_slice(&std::fs::read(b.join("converge_report.json")).unwrap()).unwrap();
    ja["runtime_s"] = serde_json::json!(0.0);
    jb["runtime_s"] = serde_json::json!(0.0);

    conclude(
        "12 determinism",
        csv_a == csv_b && gp_a == gp_b && ja == jb,
        "jobs=1 and jobs=8 converge outputs byte-identical (runtime_s masked in json)",
    );
}
