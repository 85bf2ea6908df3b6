//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. The target fails if any criterion does.

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use invparab::signal::{Builtin, CausalSignal, TimeGrid};
use invparab::solver::{
    fd_forward_oracle, regularity_ratio, solve_report, solve_shifted, solve_with, SolveReport, SpaceGrid,
    SpectralSolution,
};
use invparab::spectral::{forward_transform, FrequencyGrid};
use invparab::stochastic::{
    absorption_probability, duality_check_many, fpt_density, histogram, killed_density, sample_first_passage,
    DualityConfig, InitialLaw, PathOutcome, ProcessParams, DEFAULT_STEPS,
};
use invparab::symbolkit::{roots_at, CoefficientSet};
use invparab::{Complex64, Execution};
use invparab_validation::{chi_square_p, simpson};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXEC: Execution = Execution::Parallel;

/// Collects sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    lines: Vec<String>,
    failed: bool,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        self.lines.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
        self.failed |= !ok;
    }

    fn note(&mut self, what: impl Into<String>) {
        self.lines.push(format!("     {}", what.into()));
    }
}

fn unit_coeffs() -> CoefficientSet {
    CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0)
}

fn exp_sin(grid: TimeGrid) -> CausalSignal {
    Builtin::ExpSin { frequency: 1.0 }.sample(grid)
}

fn transform_unitarity(c: &mut Checks) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = TimeGrid::covering(0.01, 40.0).unwrap();
    let fgrid = FrequencyGrid::matched(&grid);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        // random trigonometric content up to a quarter of the Nyquist frequency, times t e^{-t}
        let terms: Vec<(f64, f64, f64)> = (0..8)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..78.0), rng.random_range(0.0..6.3)))
            .collect();
        let sig = CausalSignal::from_fn(grid, |t| {
            t * (-t).exp() * terms.iter().map(|(a, w, ph)| a * (w * t + ph).sin()).sum::<f64>()
        });
        let spec = forward_transform(&sig, &fgrid).unwrap();
        let time = sig.values().iter().map(|v| v * v).sum::<f64>() * grid.dt();
        let freq = spec.l2_norm().powi(2);
        worst = worst.max((freq - time).abs() / time);
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check(worst <= 1e-8, format!("max relative Plancherel error {worst:.2e} ≤ 1e-8"));
    c.check(elapsed < 5.0, format!("runtime {elapsed:.2} s < 5 s"));
}

fn root_contract(c: &mut Checks) {
    let coeffs = unit_coeffs();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut quad, mut re_max, mut vieta, mut sym) = (0.0_f64, f64::NEG_INFINITY, 0.0_f64, 0.0_f64);
    for _ in 0..10_000 {
        let w: f64 = rng.random_range(-1e3..1e3);
        let p = Complex64::new(0.0, w);
        let r = roots_at(&coeffs, p).unwrap();
        let scale = 1.0 + w.abs();
        for l in [r.lambda1, r.lambda2] {
            let res = l * l + l * coeffs.b + coeffs.c + p * coeffs.a;
            quad = quad.max(res.norm() / scale);
        }
        re_max = re_max.max(r.lambda1.re);
        let sum = (r.lambda1 + r.lambda2 + coeffs.b).norm();
        let prod = (r.lambda1 * r.lambda2 - (p * coeffs.a + coeffs.c)).norm() / scale;
        vieta = vieta.max(sum).max(prod);
        let mirror = roots_at(&coeffs, p.conj()).unwrap();
        sym = sym
            .max((mirror.lambda1 - r.lambda1.conj()).norm())
            .max((mirror.lambda2 - r.lambda2.conj()).norm());
    }
    c.check(quad <= 1e-12, format!("quadratic residual / (1+|ω|) = {quad:.2e} ≤ 1e-12"));
    c.check(re_max <= -0.5, format!("max Re λ₁ = {re_max} ≤ -0.5"));
    c.check(vieta <= 1e-12, format!("Vieta defect {vieta:.2e} ≤ 1e-12"));
    c.check(sym <= 1e-12, format!("conjugate-symmetry defect {sym:.2e} ≤ 1e-12"));
    let spot = roots_at(&coeffs, Complex64::new(0.0, 1.0)).unwrap();
    let err = (spot.lambda1 - Complex64::new(-1.0, 1.0)).norm() + (spot.lambda2 - Complex64::new(0.0, -1.0)).norm();
    c.check(err <= 1e-12, format!("λ₁(i) = {}, λ₂(i) = {} (defect {err:.1e})", spot.lambda1, spot.lambda2));
}

fn fidelity_run(dt: f64, dx: f64) -> (SolveReport, f64) {
    let grid = TimeGrid::covering(dt, 20.0).unwrap();
    let g = exp_sin(grid);
    let xgrid = SpaceGrid::truncated(dx, 1.0).unwrap();
    let start = Instant::now();
    let report = solve_report(&g, &unit_coeffs(), &xgrid, &FrequencyGrid::matched(&grid), EXEC).unwrap();
    (report, start.elapsed().as_secs_f64())
}

fn solver_fidelity(c: &mut Checks) {
    let g_norm = 0.125_f64.sqrt();
    let (base, secs) = fidelity_run(1e-3, 1e-2);
    c.check(
        base.bc_residual <= 1e-3 * g_norm,
        format!("bc_residual {:.3e} ≤ 1e-3·‖g‖", base.bc_residual),
    );
    c.check(base.ic_residual <= 1e-6, format!("ic_residual {:.4e} ≤ 1e-6", base.ic_residual));
    c.check(base.pde_residual <= 1e-3, format!("pde_residual {:.3e} ≤ 1e-3", base.pde_residual));
    let xgrid = SpaceGrid::truncated(1e-2, 1.0).unwrap();
    let worst = base
        .profile_l2
        .iter()
        .enumerate()
        .map(|(i, n)| n / ((-xgrid.x(i) / 2.0).exp() * 0.35356))
        .fold(0.0_f64, f64::max);
    c.check(worst <= 1.0, format!("max ‖u(x,·)‖ / (e^(-x/2)·0.35356) = {worst:.6} ≤ 1"));
    c.check(secs < 60.0, format!("runtime {secs:.1} s < 60 s"));
    let (fine, fine_secs) = fidelity_run(5e-4, 5e-3);
    let gain = base.pde_residual / fine.pde_residual;
    c.check(
        gain >= 3.0,
        format!(
            "halving dt, dx: pde_residual {:.3e} → {:.3e}, reduction {gain:.2}× ≥ 3× ({fine_secs:.1} s)",
            base.pde_residual, fine.pde_residual
        ),
    );
}

fn regularity_family(dt: f64, dx: f64) -> f64 {
    let grid = TimeGrid::covering(dt, 20.0).unwrap();
    let fgrid = FrequencyGrid::matched(&grid);
    let xgrid = SpaceGrid::truncated(dx, 1.0).unwrap();
    let reports: Vec<SolveReport> = (1..=10)
        .map(|k| {
            let g = Builtin::ExpSin { frequency: k as f64 }.sample(grid);
            solve_report(&g, &unit_coeffs(), &xgrid, &fgrid, EXEC).unwrap()
        })
        .collect();
    regularity_ratio(&reports).unwrap()
}

fn regularity_estimate(c: &mut Checks) {
    let coarse = regularity_family(2e-3, 2e-2);
    let fine = regularity_family(1e-3, 1e-2);
    let drift = (fine - coarse).abs() / coarse;
    c.check(coarse.is_finite() && fine.is_finite(), format!("max ratio {coarse:.6} (coarse), {fine:.6} (fine)"));
    c.check(drift <= 0.05, format!("refinement drift {:.3}% ≤ 5%", 100.0 * drift));
}

fn shift_equivalence(c: &mut Checks) {
    let grid = TimeGrid::covering(1e-2, 20.0).unwrap();
    let fgrid = FrequencyGrid::matched(&grid);
    let xgrid = SpaceGrid::new(0.05, 241).unwrap();
    let g = exp_sin(grid);
    let coeffs = CoefficientSet::new(1.0, 2.0, 0.0, 1.0, 0.0);
    let m = 2.0;
    let shifted = solve_shifted(&g, &coeffs, m, &xgrid, &fgrid).unwrap();

    let damped = g.modulated(|t| (-m * t).exp());
    let (manual, _) = solve_with(&damped, &coeffs.shifted(m), &xgrid, &fgrid, EXEC).unwrap();
    let n = grid.len();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for i in 0..xgrid.len() {
        for k in 0..n {
            let e = (m * grid.t(k)).exp();
            let idx = i * n + k;
            let pairs = [
                (shifted.u[idx], e * manual.u[idx]),
                (shifted.u_x[idx], e * manual.u_x[idx]),
                (shifted.u_xx[idx], e * manual.u_xx[idx]),
                (shifted.u_t[idx], e * (m * manual.u[idx] + manual.u_t[idx])),
            ];
            for (a, b) in pairs {
                worst = worst.max((a - b).abs());
                scale = scale.max(b.abs());
            }
        }
    }
    c.check(worst <= 1e-8 * scale.max(1.0), format!("two-path difference {worst:.2e} (field scale {scale:.3e})"));

    let strict = unit_coeffs();
    let zero = solve_shifted(&g, &strict, 0.0, &xgrid, &fgrid).unwrap();
    let (plain, _) = solve_with(&g, &strict, &xgrid, &fgrid, EXEC).unwrap();
    c.check(zero == plain, "M = 0 reproduces the plain solve bit for bit");
}

fn absorbing_check(c: &mut Checks) {
    let grid = TimeGrid::covering(1e-3, 20.0).unwrap();
    let g = exp_sin(grid);
    let coeffs = unit_coeffs();
    let xgrid = SpaceGrid::truncated(1e-2, 1.0).unwrap();
    let sol = SpectralSolution::new(&g, &coeffs, &FrequencyGrid::matched(&grid)).unwrap();
    let snaps = sol.snapshots(&[0.0, 5.0], &xgrid, EXEC).unwrap();
    let (u0, v_star) = (&snaps[0], &snaps[1]);
    let back = fd_forward_oracle(v_star, &g, &coeffs, 5.0).unwrap();
    let ratio = back.l2_norm() / v_star.l2_norm();
    c.check(ratio <= 1e-2, format!("‖v(·,0)‖ / ‖v*‖ = {ratio:.4e} ≤ 1e-2"));
    let agree = back.values.iter().zip(&u0.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        * xgrid.dx().sqrt();
    c.note(format!(
        "oracle vs spectral u(·,0): ‖diff‖ = {agree:.3e}, ‖u(·,0)‖ = {:.4e}",
        u0.l2_norm()
    ));

    let shifted = CausalSignal::from_fn(grid, |t| g.eval(t - 0.5));
    let mismatched = fd_forward_oracle(v_star, &shifted, &coeffs, 5.0).unwrap();
    let control = mismatched.l2_norm() / back.l2_norm();
    c.check(control >= 10.0, format!("mismatched-g control is {control:.3}× larger (≥ 10×)"));
}

fn duality(c: &mut Checks) {
    let start = Instant::now();
    let grid = TimeGrid::covering(1e-3, 20.0).unwrap();
    let gs = [
        ("e^-t sin t", exp_sin(grid)),
        ("t e^-t", Builtin::RampDecay.sample(grid)),
        ("bump", Builtin::Bump.sample(grid)),
    ];
    let signals: Vec<CausalSignal> = gs.iter().map(|(_, g)| g.clone()).collect();
    let sets = [(1.0, 1.0, 1.0), (1.0, 1.0, 0.5), (2.0, 1.0, 1.0)];
    let cfg = DualityConfig::new(5.0, 42, 1_000_000);
    for (a, b, cc) in sets {
        let coeffs = CoefficientSet::new(a, b, cc, 1.0, 0.0);
        let reports = duality_check_many(&signals, &coeffs, &InitialLaw::PointMass(1.0), &cfg, EXEC).unwrap();
        for ((name, _), r) in gs.iter().zip(&reports) {
            let tag = format!("(a,b,c)=({a},{b},{cc}), g={name}");
            c.check(
                (r.lhs_mc - r.rhs).abs() <= 3.0 * r.stderr,
                format!("{tag}: |lhs_mc - rhs| = {:.3e} vs 3·stderr = {:.3e}", (r.lhs_mc - r.rhs).abs(), 3.0 * r.stderr),
            );
            c.check(
                (r.lhs_quadrature - r.rhs).abs() <= 1e-3,
                format!("{tag}: |lhs_quad - rhs| = {:.3e} ≤ 1e-3", (r.lhs_quadrature - r.rhs).abs()),
            );
            c.note(format!(
                "lhs_mc = {:.6}, lhs_quad = {:.6}, rhs = {:.6}, ∫ρ u(·,0) = {:.6}, lhs_quad - rhs - ∫ρ u(·,0) = {:.2e}",
                r.lhs_mc,
                r.lhs_quadrature,
                r.rhs,
                r.initial_trace,
                r.lhs_quadrature - r.rhs - r.initial_trace
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 600.0, format!("runtime {secs:.0} s < 600 s"));
}

fn stochastic_oracles(c: &mut Checks) {
    let sigma = 2f64.sqrt();
    let n = 1_000_000;

    let far = ProcessParams::new(1.0, sigma, 0.0, 50.0, InitialLaw::PointMass(1.0)).unwrap();
    let s = sample_first_passage(&far, 1, n, DEFAULT_STEPS, EXEC).unwrap();
    let est = s.absorbed_fraction();
    let exact = absorption_probability(1.0, &far).unwrap();
    c.check(
        (est.mean - exact).abs() <= 3.0 * est.stderr,
        format!("P(τ < 50) = {:.5} ± {:.1e} vs e^-1 = {exact:.5}", est.mean, est.stderr),
    );

    let params = ProcessParams::new(1.0, sigma, 0.0, 5.0, InitialLaw::PointMass(1.0)).unwrap();
    let s = sample_first_passage(&params, 2, n, DEFAULT_STEPS, EXEC).unwrap();
    let edges: Vec<f64> = (0..=50).map(|i| 0.1 * i as f64).collect();
    let taus = s.outcomes.iter().filter_map(PathOutcome::tau);
    let counts = histogram(taus, &edges).unwrap();
    let expected: Vec<f64> = edges
        .windows(2)
        .map(|w| n as f64 * simpson(|t| if t > 0.0 { fpt_density(1.0, &params, t).unwrap() } else { 0.0 }, w[0], w[1]))
        .collect();
    let (p, bins) = chi_square_p(&counts, &expected);
    c.check(p > 0.01, format!("first-passage histogram χ² p = {p:.3} > 0.01 ({bins} bins)"));

    let edges: Vec<f64> = (0..=50).map(|i| 0.3 * i as f64).collect();
    let ys = s.outcomes.iter().filter_map(PathOutcome::terminal);
    let counts = histogram(ys, &edges).unwrap();
    let expected: Vec<f64> = edges
        .windows(2)
        .map(|w| n as f64 * simpson(|x| killed_density(&params, x, 5.0), w[0], w[1]))
        .collect();
    let (p, bins) = chi_square_p(&counts, &expected);
    c.check(p > 0.01, format!("killed-density histogram χ² p = {p:.3} > 0.01 ({bins} bins)"));
}

fn determinism(c: &mut Checks) {
    let grid = TimeGrid::covering(1e-2, 20.0).unwrap();
    let g = exp_sin(grid);
    let cfg = DualityConfig {
        steps: 512,
        ..DualityConfig::new(5.0, 42, 50_000)
    };
    let rho = InitialLaw::PointMass(1.0);
    let run = |exec| {
        duality_check_many(std::slice::from_ref(&g), &unit_coeffs(), &rho, &cfg, exec).unwrap()[0].to_kv()
    };
    let first = run(Execution::Parallel);
    c.check(first == run(Execution::Parallel), "seeded duality report repeats byte for byte");
    c.check(first == run(Execution::Sequential), "sequential and parallel reports are identical");
    let xgrid = SpaceGrid::new(0.05, 200).unwrap();
    let fgrid = FrequencyGrid::matched(&grid);
    let a = solve_report(&g, &unit_coeffs(), &xgrid, &fgrid, Execution::Parallel).unwrap();
    let b = solve_report(&g, &unit_coeffs(), &xgrid, &fgrid, Execution::Sequential).unwrap();
    c.check(a.to_kv() == b.to_kv(), "solve report is independent of the execution mode");
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn(&mut Checks)); 9] = [
        ("transform unitarity", transform_unitarity),
        ("root contract", root_contract),
        ("solver fidelity", solver_fidelity),
        ("regularity estimate", regularity_estimate),
        ("exponential shift", shift_equivalence),
        ("absorbing check", absorbing_check),
        ("duality identity", duality),
        ("stochastic oracles", stochastic_oracles),
        ("determinism", determinism),
    ];
    let mut failures = Vec::new();
    for (i, (name, body)) in criteria.iter().enumerate() {
        let mut checks = Checks::default();
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| body(&mut checks)));
        if let Err(e) = outcome {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            checks.check(false, format!("panicked: {msg}"));
        }
        let status = if checks.failed { "FAIL" } else { "PASS" };
        println!("[{status}] {} {name} ({:.1} s)", i + 1, start.elapsed().as_secs_f64());
        for line in &checks.lines {
            println!("         {line}");
        }
        if checks.failed {
            failures.push(i + 1);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
