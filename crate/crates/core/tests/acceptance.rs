//! Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned here.
//!
//! The setup-error criterion runs a 20-draw smoke variant by default; set
//! `SATLENS_FULL_MC=1` for the 100-draw run at full resolution.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use satlens::beams::{gaussian_field, waist_for_rayleigh_range};
use satlens::chain::{
    build_entanglement_chain, build_qubit_chain, central_to_ring_ratio, run_chain, run_chain_with, run_onaxis_vortex,
    RunOptions,
};
use satlens::loss::to_db;
use satlens::perturb::{monte_carlo_with, ErrorSpec};
use satlens::turbulence::{
    fried_parameter, kolmogorov_screen, phase_structure_function, run_uplink_chain, uplink_grid, TurbulenceProfile,
};
use satlens::verify::{ground_budget_db, lens_sequence_error, random_lens_sequence};
use satlens::{Grid, OpticalElement};

const LAMBDA: f64 = 800e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn abcd_oracle() -> Outcome {
    const TOL: f64 = 0.015;
    let worst = (0..10u64)
        .map(|seed| lens_sequence_error(&random_lens_sequence(seed), 1024).unwrap())
        .fold(0.0, f64::max);
    outcome(worst <= TOL, format!("worst width error {:.2e} over 10 sequences (tol {TOL})", worst))
}

fn no_truncation() -> Outcome {
    let l0 = 120e3;
    let w0 = waist_for_rayleigh_range(l0, LAMBDA);
    let chain = build_entanglement_chain(8.0 * w0, l0, 100.0 * l0, LAMBDA).unwrap();
    assert_eq!(chain.relay_count(), 100);
    let trace = run_chain(&chain.gaussian_source(chain.grid(1024, 8.0).unwrap()).unwrap(), &chain).unwrap();
    let t = trace.final_transmission();
    let ratio = trace.final_field.beam_width().unwrap() / w0;
    outcome(t >= 0.999 && within(ratio, 1.0, 0.01), format!("T {t:.6} (>= 0.999), width/w0 {ratio:.5} (1 ± 0.01)"))
}

fn entanglement_regression() -> Outcome {
    let chain = build_entanglement_chain(0.6, 120e3, 10_000e3, LAMBDA).unwrap();
    let trace = run_chain(&chain.gaussian_source(chain.grid(2048, 8.0).unwrap()).unwrap(), &chain).unwrap();
    let t = trace.final_transmission();
    let pair_db = 2.0 * to_db(t);
    outcome(
        within(t, 0.925, 0.01) && within(pair_db, 0.67, 0.15),
        format!("N=2048: T {t:.4} (0.925 ± 0.01), pair loss {pair_db:.3} dB (0.67 ± 0.15)"),
    )
}

fn heavy_truncation() -> Outcome {
    let chain = build_entanglement_chain(0.35, 120e3, 10_000e3, LAMBDA).unwrap();
    let trace = run_chain(&chain.gaussian_source(chain.grid(1024, 8.0).unwrap()).unwrap(), &chain).unwrap();
    let first = 1.0 - trace.points[0].transmission;
    let second = 1.0 - trace.points[1].transmission / trace.points[0].transmission;
    let pair_db = -2.0 * trace.final_point().log_transmission / std::f64::consts::LN_10 * 10.0;
    outcome(
        within(first, 0.135, 0.01) && pair_db > 250.0,
        format!(
            "first-lens truncation {:.2}% (13.5 ± 1), second {:.2}%, pair loss {pair_db:.1} dB (> 250)",
            100.0 * first,
            100.0 * second
        ),
    )
}

fn total_budget() -> Outcome {
    let near = ground_budget_db(200e3, 0.6, true, 1024).unwrap();
    let far = ground_budget_db(500e3, 1.2, false, 1024).unwrap();
    let delta = far - near;
    outcome(
        within(near, 27.0, 2.0) && within(delta, 3.0, 1.5),
        format!("200 km {near:.2} dB (27 ± 2), 500 km / 1.2 m {far:.2} dB, delta {delta:.2} dB (3 ± 1.5)"),
    )
}

fn error_monte_carlo() -> Outcome {
    let full = std::env::var("SATLENS_FULL_MC").is_ok_and(|v| v == "1");
    let (reps, n, oversize, tol) = if full { (100, 1024, 8.0, 0.05) } else { (20, 512, 4.0, 0.08) };
    let chain = build_entanglement_chain(0.6, 120e3, 10_000e3, LAMBDA).unwrap();
    let source = chain.gaussian_source(chain.grid(n, oversize).unwrap()).unwrap();
    let opts = RunOptions { oversize, ..RunOptions::default() };
    let cases = [
        ("f 2.5%", [0.025, 0.0, 0.0], 0.87),
        ("f 10%", [0.10, 0.0, 0.0], 0.36),
        ("z 5%", [0.0, 0.05, 0.0], 0.83),
        ("z 20%", [0.0, 0.20, 0.0], 0.24),
        ("xy 1%", [0.0, 0.0, 0.01], 0.90),
        ("xy 10%", [0.0, 0.0, 0.10], 0.12),
        ("combined small", [0.025, 0.05, 0.01], 0.78),
        ("combined large", [0.05, 0.10, 0.02], 0.48),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, [f, z, xy], expected) in cases {
        let spec = ErrorSpec::new(f, z, xy, reps, 1).unwrap();
        let stats = monte_carlo_with(&source, &chain, &spec, &opts).unwrap();
        let mean = stats.final_mean();
        pass &= within(mean, expected, tol);
        parts.push(format!("{name} {mean:.3}/{expected}"));
    }
    let mode = if full { "full" } else { "smoke" };
    outcome(pass, format!("{mode} reps={reps} N={n} tol ±{tol}: {}", parts.join(", ")))
}

fn vortex() -> Outcome {
    let trace = run_onaxis_vortex(0.6, 80e3, 0.1, 2, 10_000e3, LAMBDA, 1024).unwrap();
    let pair = trace.final_transmission().powi(2);
    let ratio = central_to_ring_ratio(&trace.final_field);
    outcome(
        within(pair, 0.6, 0.1) && ratio < 0.1,
        format!("pair T {pair:.4} (0.6 ± 0.1), centre/ring intensity {ratio:.4} (< 0.1)"),
    )
}

/// Weighted Cn² path integral by composite Simpson on a log-spaced
/// altitude grid, independent of the library's quadrature.
fn simpson_r0(l: f64, wavelength: f64) -> f64 {
    let (a, v) = (1.7e-14, 21.0);
    let cn2 = |z: f64| {
        0.00594 * (v / 27.0f64).powi(2) * (1e-5 * z).powi(10) * (-z / 1000.0).exp()
            + 2.7e-16 * (-z / 1500.0).exp()
            + a * (-z / 100.0).exp()
    };
    let f = |z: f64| cn2(z) * ((l - z) / l).powf(5.0 / 3.0);
    let simpson = |lo: f64, hi: f64, n: usize| {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let mut edges = vec![0.0, 1.0];
    while *edges.last().unwrap() < l {
        let next = (edges.last().unwrap() * 2.0).min(l);
        edges.push(next);
    }
    let integral: f64 = edges.windows(2).map(|w| simpson(w[0], w[1], 2000)).sum();
    let k = 2.0 * PI / wavelength;
    (0.42 * k * k * integral).powf(-0.6)
}

fn turbulence() -> Outcome {
    // (a) Structure function of 200 independent screens.
    let r0 = 0.1;
    let grid = Grid::new(256, 2.0).unwrap();
    let screens: Vec<_> = (0..200u64)
        .map(|seed| kolmogorov_screen(grid, r0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
        .collect();
    let lags: Vec<usize> = (4..=grid.n / 8).collect();
    let measured = phase_structure_function(&screens, &lags);
    let sf_worst = lags
        .iter()
        .zip(&measured)
        .map(|(&m, &d)| (d / (6.88 * (m as f64 * grid.spacing() / r0).powf(5.0 / 3.0)) - 1.0).abs())
        .fold(0.0, f64::max);

    // (b) Fried parameter against an independent integrator.
    let profile = TurbulenceProfile::default();
    let lib = fried_parameter(200e3, LAMBDA, &profile);
    let oracle = simpson_r0(200e3, LAMBDA);
    let r0_err = (lib / oracle - 1.0).abs();

    // (c) Wavelength scaling exponent.
    let exponent = (fried_parameter(200e3, 2.0 * LAMBDA, &profile) / lib).ln() / 2f64.ln();

    // (d) Share of end-to-end loss taken by the turbulent uplink.
    let grid_up = uplink_grid(0.25, 200e3, LAMBDA, &profile, 512).unwrap();
    let source = gaussian_field(0.25, f64::INFINITY, grid_up, LAMBDA).unwrap();
    let chain = build_qubit_chain(0.6, 80e3, 20_000e3, 1.0, LAMBDA).unwrap();
    let chain_grid = chain.grid(512, 8.0).unwrap();
    let (mut up, mut total) = (0.0, 0.0);
    for draw in 0..30 {
        let r = run_uplink_chain(&source, &profile, 200e3, &chain, chain_grid, &RunOptions::default(), draw).unwrap();
        up += r.uplink_loss_db();
        total += r.total_loss_db();
    }
    let share = up / total;

    let pass = sf_worst <= 0.10 && r0_err <= 0.005 && (exponent - 1.2).abs() <= 1e-6 && share >= 0.8;
    outcome(
        pass,
        format!(
            "(a) SF worst {:.3} (<= 0.10) (b) r0 {lib:.5} vs {oracle:.5}, err {r0_err:.1e} (<= 5e-3) \
             (c) exponent {exponent:.9} (1.2 ± 1e-6) (d) uplink share {share:.3} over 30 draws (>= 0.8)",
            sf_worst
        ),
    )
}

fn invariants() -> Outcome {
    let grid = Grid::new(256, 2.0).unwrap();
    let g = gaussian_field(0.15, f64::INFINITY, grid, LAMBDA).unwrap();
    let moved = g.propagate(40e3).unwrap();
    let unitarity = (moved.total_power() / g.total_power() - 1.0).abs();
    let composition = g.propagate(15e3).unwrap().propagate(25e3).unwrap().relative_l2_distance(&moved);

    let opts = RunOptions { oversize: 4.0, ..RunOptions::default() };
    let run = |d: f64, l0: f64, lambda: f64| {
        let chain = build_entanglement_chain(d, l0, 8.0 * l0, lambda).unwrap();
        let source = chain.gaussian_source(chain.grid(256, 4.0).unwrap()).unwrap();
        run_chain_with(&source, &chain, &opts).unwrap()
    };
    let base = run(0.45, 120e3, LAMBDA);
    let monotone = base.points.windows(2).all(|w| w[1].transmission <= w[0].transmission * (1.0 + 1e-12))
        && g.apply(&OpticalElement::aperture(0.3)).unwrap().total_power()
            <= g.apply(&OpticalElement::aperture(0.4)).unwrap().total_power();
    let scaled = run(0.45 * 1.5, 120e3 * 2.25, LAMBDA).final_transmission();
    let fresnel = (scaled / base.final_transmission() - 1.0).abs();
    let repeat = run(0.45, 120e3, LAMBDA);
    let deterministic = repeat.points == base.points;

    let pass = unitarity < 1e-10 && composition < 1e-9 && monotone && fresnel < 0.005 && deterministic;
    outcome(
        pass,
        format!(
            "unitarity {unitarity:.1e}, composition {composition:.1e}, monotone {monotone}, \
             Fresnel scaling {fresnel:.1e} (< 5e-3), deterministic {deterministic}"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 ABCD oracle", abcd_oracle),
        ("2 no-truncation chain", no_truncation),
        ("3 entanglement regression", entanglement_regression),
        ("4 heavy truncation", heavy_truncation),
        ("5 total budget", total_budget),
        ("6 setup-error Monte Carlo", error_monte_carlo),
        ("7 vortex on-axis chain", vortex),
        ("8 turbulence", turbulence),
        ("9 invariant suite", invariants),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!result.pass);
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{name}] {} ({:.0?})", result.detail, start.elapsed());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
