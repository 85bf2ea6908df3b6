use std::io::Write;

use crate::error::{bail, Result};
use crate::exec::{ordered_sum, Execution};
use crate::signal::CausalSignal;
use crate::solver::{SpaceGrid, SpectralSolution};
use crate::spectral::FrequencyGrid;
use crate::symbolkit::CoefficientSet;

use super::{fpt_density, killed_density, sample_first_passage, InitialLaw, PathOutcome, ProcessParams, DEFAULT_STEPS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityConfig {
    pub horizon: f64,
    pub seed: u64,
    pub n_paths: usize,
    pub steps: usize,
    /// Space step of the `x` quadrature.
    pub dx: f64,
}

impl DualityConfig {
    pub fn new(horizon: f64, seed: u64, n_paths: usize) -> Self {
        DualityConfig {
            horizon,
            seed,
            n_paths,
            steps: DEFAULT_STEPS,
            dx: 1e-2,
        }
    }
}

/// Both sides of `E e^{κτ} g(τ) 1{τ<T} = -∫ p(x,T) u_g(x,T) dx`.
///
/// `initial_trace = ∫ ρ(x) u_g(x, 0) dx` is the term the identity drops; by Itô's formula
/// `lhs = rhs + initial_trace` for any solution of the PDE with boundary data `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualityReport {
    pub lhs_mc: f64,
    pub stderr: f64,
    pub lhs_quadrature: f64,
    pub rhs: f64,
    /// `|lhs_mc - rhs| / stderr`; zero when both vanish.
    pub z_score: f64,
    pub initial_trace: f64,
}

pub const CSV_HEADER: [&str; 6] = ["lhs_mc", "stderr", "lhs_quadrature", "rhs", "z_score", "initial_trace"];

impl DualityReport {
    pub fn to_kv(&self) -> String {
        format!(
            "lhs_mc = {}\nstderr = {}\nlhs_quadrature = {}\nrhs = {}\nz_score = {}\ninitial_trace = {}\n",
            self.lhs_mc, self.stderr, self.lhs_quadrature, self.rhs, self.z_score, self.initial_trace
        )
    }

    pub fn csv_row(&self) -> [String; 6] {
        [
            self.lhs_mc.to_string(),
            self.stderr.to_string(),
            self.lhs_quadrature.to_string(),
            self.rhs.to_string(),
            self.z_score.to_string(),
            self.initial_trace.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(reports: &[DualityReport], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in reports {
            w.write_record(r.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn duality_check(
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    rho: &InitialLaw,
    cfg: &DualityConfig,
    exec: Execution,
) -> Result<DualityReport> {
    Ok(duality_check_many(std::slice::from_ref(g), coeffs, rho, cfg, exec)?.remove(0))
}

/// Runs the check for several inputs on one set of sample paths.
pub fn duality_check_many(
    gs: &[CausalSignal],
    coeffs: &CoefficientSet,
    rho: &InitialLaw,
    cfg: &DualityConfig,
    exec: Execution,
) -> Result<Vec<DualityReport>> {
    let params = ProcessParams::from_coefficients(coeffs, cfg.horizon, rho.clone())?;
    if gs.is_empty() {
        return Ok(Vec::new());
    }
    let horizon = cfg.horizon;
    for g in gs {
        if g.grid().index_of(horizon).is_none() {
            bail!(Input, "T = {horizon} must be a point of every input's time grid");
        }
    }
    let solutions = gs
        .iter()
        .map(|g| SpectralSolution::new_with(g, coeffs, &FrequencyGrid::matched(g.grid()), exec))
        .collect::<Result<Vec<_>>>()?;

    let xgrid = quadrature_grid(&params, coeffs.b, cfg.dx)?;
    let density: Vec<f64> = exec.map(xgrid.len(), |i| killed_density(&params, xgrid.x(i), horizon));
    let samples = sample_first_passage(&params, cfg.seed, cfg.n_paths, cfg.steps, exec)?;

    let mut reports = Vec::with_capacity(gs.len());
    for (g, sol) in gs.iter().zip(&solutions) {
        let snaps = sol.snapshots(&[0.0, horizon], &xgrid, exec)?;
        let (u0, psi) = (&snaps[0], &snaps[1]);
        let rhs = -ordered_sum((0..xgrid.len()).map(|i| xgrid.weight(i) * density[i] * psi.values[i]));

        let kappa = params.kappa;
        let est = samples.estimate(|o| match *o {
            PathOutcome::Absorbed { tau } if tau < horizon => (kappa * tau).exp() * g.eval(tau),
            _ => 0.0,
        });

        let initial_trace = rho.expect(|a0| u0.eval(a0));
        let diff = (est.mean - rhs).abs();
        let z_score = if diff == 0.0 { 0.0 } else { diff / est.stderr };
        reports.push(DualityReport {
            lhs_mc: est.mean,
            stderr: est.stderr,
            lhs_quadrature: lhs_quadrature(g, &params, horizon),
            rhs,
            z_score,
            initial_trace,
        });
    }
    Ok(reports)
}

/// Covers both the decay of the solution and the spread of the killed density.
fn quadrature_grid(params: &ProcessParams, b: f64, dx: f64) -> Result<SpaceGrid> {
    let reach = params
        .rho
        .nodes()
        .iter()
        .map(|(x, _)| *x)
        .fold(0.0, f64::max)
        + params.beta.max(0.0) * params.horizon
        + 10.0 * params.sigma * params.horizon.sqrt();
    let truncated = SpaceGrid::truncated(dx, b)?;
    if truncated.extent() >= reach {
        Ok(truncated)
    } else {
        SpaceGrid::new(dx, (reach / dx).ceil() as usize + 1)
    }
}

/// `∫₀^T e^{κt} g(t) E_ρ fpt(a0, t) dt` by the trapezoidal rule on the grid of `g`.
fn lhs_quadrature(g: &CausalSignal, params: &ProcessParams, horizon: f64) -> f64 {
    let grid = g.grid();
    let last = grid.index_of(horizon).expect("checked by caller");
    let dt = grid.dt();
    ordered_sum((1..=last).map(|k| {
        let t = grid.t(k);
        let w = if k == last { 0.5 * dt } else { dt };
        let f = params
            .rho
            .expect(|a0| if a0 > 0.0 { fpt_density(a0, params, t).unwrap_or(0.0) } else { 0.0 });
        w * (params.kappa * t).exp() * g.values()[k] * f
    }))
}
