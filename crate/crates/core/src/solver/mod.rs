//! Decaying-mode reconstruction of the quarter-plane problem.
//!
//! Per frequency sample `ω` the boundary input is transformed, divided by the
//! boundary symbol and propagated with the decaying root only:
//!
//! ```text
//! G₀(iω)   = G(iω) / (k0 + k1 λ₁(iω))
//! U(x, iω) = e^{λ₁(iω) x} G₀(iω)
//! ```
//!
//! so `G₁ = λ₁ G₀` holds by construction. Derivative fields use the exact multipliers
//! `λ₁`, `λ₁²` and `iω`; the finite-difference residual in [`residual_check`] recomputes
//! derivatives from `u` alone and is the independent verifier.
//!
//! The `ω = 0` sample of each field spectrum is replaced by its real part: `λ₁(0)` is
//! taken as the `ω → 0⁺` limit, which is not self-conjugate when `μ < 0`, and the real
//! part is the mean of the two one-sided limits.
//!
//! The FFT reconstruction is periodic in `t` with period `m dt`.

mod field;
mod oracle;

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;

pub use field::{FieldGrid, FieldRow, Profile, SpaceGrid, TRUNCATION_LEVEL};
pub use oracle::fd_forward_oracle;

use crate::error::{bail, Error, Result};
use crate::exec::{ordered_sum, Execution};
use crate::signal::{trapezoid_l2, trapezoid_sum_sq, validate_gamma, CausalSignal, TimeGrid, DEFAULT_TOL};
use crate::spectral::{forward_transform_with, plan, FrequencyGrid, Spectrum, INV_SQRT_2PI};
use crate::symbolkit::{check_admissible, lambda1_on_axis, Admissibility, CoefficientSet, DEGENERACY_TOL};

/// Rows handled by one task of the streaming report.
const ROW_CHUNK: usize = 16;

/// Boundary input and symbols prepared once; fields at any `x` follow from it.
pub struct SpectralSolution {
    coeffs: CoefficientSet,
    tgrid: TimeGrid,
    fgrid: FrequencyGrid,
    /// FFT bin order.
    omega: Vec<f64>,
    lambda1: Vec<Complex64>,
    g0: Vec<Complex64>,
    ifft: Arc<dyn Fft<f64>>,
    g: CausalSignal,
}

fn require_strict(coeffs: &CoefficientSet) -> Result<()> {
    match check_admissible(coeffs) {
        Admissibility::Strict => Ok(()),
        Admissibility::NeedsShift { m_min } => Err(Error::Admissibility(format!(
            "b²/4 ≥ c (μ = {m_min}); use the shifted solve with M > {m_min}"
        ))),
        Admissibility::Rejected(reason) => Err(Error::Admissibility(reason)),
    }
}

impl SpectralSolution {
    pub fn new(g: &CausalSignal, coeffs: &CoefficientSet, fgrid: &FrequencyGrid) -> Result<Self> {
        Self::new_with(g, coeffs, fgrid, Execution::default())
    }

    pub fn new_with(
        g: &CausalSignal,
        coeffs: &CoefficientSet,
        fgrid: &FrequencyGrid,
        exec: Execution,
    ) -> Result<Self> {
        require_strict(coeffs)?;
        let gamma = validate_gamma(g, DEFAULT_TOL);
        if let Some(reason) = gamma.rejection_reason {
            bail!(Domain, "boundary input is not admissible: {reason}");
        }
        let tgrid = *g.grid();
        if !fgrid.is_fft_matched(&tgrid) {
            bail!(
                Config,
                "the solver needs an FFT-matched frequency grid (m dω dt = 2π, m ≥ n)"
            );
        }
        let spectrum = forward_transform_with(g, fgrid, exec)?;
        let m = fgrid.len();
        let omega: Vec<f64> = (0..m).map(|j| fgrid.omega(fgrid.centred_of_bin(j))).collect();
        let lambda1 = exec.map(m, |j| lambda1_on_axis(coeffs, omega[j]));
        let mut g0 = Vec::with_capacity(m);
        for j in 0..m {
            let symbol = lambda1[j] * coeffs.k1 + coeffs.k0;
            if symbol.norm() < DEGENERACY_TOL {
                bail!(Degenerate, "|k0 + k1 λ₁| = {:.3e} at ω = {}", symbol.norm(), omega[j]);
            }
            g0.push(spectrum.values()[fgrid.centred_of_bin(j)] / symbol);
        }
        Ok(SpectralSolution {
            coeffs: *coeffs,
            tgrid,
            fgrid: *fgrid,
            omega,
            lambda1,
            g0,
            ifft: plan(m, true),
            g: g.clone(),
        })
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    pub fn boundary_input(&self) -> &CausalSignal {
        &self.g
    }

    /// `G₀` on the centred frequency grid.
    pub fn boundary_spectrum(&self) -> Spectrum {
        let m = self.fgrid.len();
        let values = (0..m).map(|i| self.g0[self.fgrid.bin_of_centred(i)]).collect();
        Spectrum::new(self.fgrid, values).expect("length matches grid")
    }

    /// `U(x, iω)` in FFT bin order.
    fn field_spectrum(&self, x: f64) -> Vec<Complex64> {
        self
            .lambda1
            .iter()
            .zip(&self.g0)
            .map(|(l, g0)| {
                let e = l * x;
                if e.re < -745.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    e.exp() * g0
                }
            })
            .collect()
    }

    fn inverse(&self, mut buf: Vec<Complex64>) -> (Vec<f64>, f64) {
        self.ifft.process(&mut buf);
        let scale = self.fgrid.dw() * INV_SQRT_2PI;
        let n = self.tgrid.len();
        let re: Vec<f64> = buf[..n].iter().map(|z| z.re * scale).collect();
        let im: Vec<f64> = buf[..n].iter().map(|z| z.im * scale).collect();
        (re, trapezoid_sum_sq(&im, self.tgrid.dt()))
    }

    /// `u`, `u_x`, `u_xx`, `u_t` at `x`.
    pub fn row(&self, x: f64) -> FieldRow {
        let mut u_hat = self.field_spectrum(x);
        let with = |f: &dyn Fn(usize, Complex64) -> Complex64| -> Vec<Complex64> {
            let mut v: Vec<Complex64> = u_hat.iter().enumerate().map(|(j, z)| f(j, *z)).collect();
            v[0] = Complex64::new(v[0].re, 0.0);
            v
        };
        let ux_hat = with(&|j, z| self.lambda1[j] * z);
        let uxx_hat = with(&|j, z| self.lambda1[j] * self.lambda1[j] * z);
        let ut_hat = with(&|j, z| Complex64::new(0.0, self.omega[j]) * z);
        u_hat[0] = Complex64::new(u_hat[0].re, 0.0);
        let (u, imag_sq) = self.inverse(u_hat);
        FieldRow {
            u,
            u_x: self.inverse(ux_hat).0,
            u_xx: self.inverse(uxx_hat).0,
            u_t: self.inverse(ut_hat).0,
            imag_sq,
        }
    }

    /// `u(·, t)` on `xgrid` by direct summation over frequencies; `t` must be on the time grid.
    pub fn snapshot(&self, t: f64, xgrid: &SpaceGrid, exec: Execution) -> Result<Profile> {
        Ok(self.snapshots(&[t], xgrid, exec)?.remove(0))
    }

    /// Several snapshots sharing one pass over `x`.
    pub fn snapshots(&self, times: &[f64], xgrid: &SpaceGrid, exec: Execution) -> Result<Vec<Profile>> {
        let mut phases = Vec::with_capacity(times.len());
        for &t in times {
            let k = self
                .tgrid
                .index_of(t)
                .ok_or_else(|| Error::Input(format!("t = {t} is not on the time grid")))?;
            let tk = self.tgrid.t(k);
            let phase: Vec<Complex64> = self
                .omega
                .iter()
                .map(|w| {
                    let (s, c) = (w * tk).sin_cos();
                    Complex64::new(c, s)
                })
                .collect();
            phases.push(phase);
        }
        let scale = self.fgrid.dw() * INV_SQRT_2PI;
        let columns = exec.map(xgrid.len(), |i| {
            let u_hat = self.field_spectrum(xgrid.x(i));
            phases
                .iter()
                .map(|phase| {
                    let acc = u_hat
                        .iter()
                        .zip(phase)
                        .fold(Complex64::new(0.0, 0.0), |acc, (z, ph)| acc + z * ph);
                    acc.re * scale
                })
                .collect::<Vec<f64>>()
        });
        (0..times.len())
            .map(|j| Profile::new(*xgrid, columns.iter().map(|c| c[j]).collect()))
            .collect()
    }

    /// Materialises the fields on `xgrid`.
    pub fn fields(&self, xgrid: &SpaceGrid, exec: Execution) -> FieldGrid {
        let rows = exec.map(xgrid.len(), |i| self.row(xgrid.x(i)));
        FieldGrid::from_rows(*xgrid, self.tgrid, &rows)
    }

    /// Norms and residuals on `xgrid` without storing the fields.
    pub fn report(&self, xgrid: &SpaceGrid, exec: Execution) -> SolveReport {
        let nx = xgrid.len();
        let chunks = nx.div_ceil(ROW_CHUNK);
        let ctx = StatsContext::new(&self.coeffs, xgrid, &self.tgrid);
        let per_chunk = exec.map(chunks, |ci| {
            let start = ci * ROW_CHUNK;
            let end = (start + ROW_CHUNK).min(nx);
            let mut prev = (start > 0).then(|| self.row(xgrid.x(start - 1)).u);
            let mut cur = self.row(xgrid.x(start));
            let mut out = Vec::with_capacity(end - start);
            let mut bc = None;
            for i in start..end {
                let next = (i + 1 < nx).then(|| self.row(xgrid.x(i + 1)));
                out.push(ctx.row_stats(prev.as_deref(), &cur, next.as_ref().map(|r| r.u.as_slice())));
                if i == 0 {
                    bc = Some(ctx.bc_sq(&cur.u, &cur.u_x, &self.g));
                }
                match next {
                    Some(next) => prev = Some(std::mem::replace(&mut cur, next).u),
                    None => break,
                }
            }
            (out, bc)
        });
        let mut stats = Vec::with_capacity(nx);
        let mut bc_sq = 0.0;
        for (rows, bc) in per_chunk {
            stats.extend(rows);
            if let Some(bc) = bc {
                bc_sq = bc;
            }
        }
        ctx.assemble(&stats, bc_sq, &self.g)
    }
}

/// Scalar diagnostics of a solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// `‖u‖_{L2(D)} + ‖u_x‖ + ‖u_xx‖ + ‖u_t‖`.
    pub w_norm: f64,
    pub w12_norm_g: f64,
    /// `w_norm / w12_norm_g`, undefined for a zero input.
    pub ratio: Option<f64>,
    pub pde_residual: f64,
    pub bc_residual: f64,
    pub ic_residual: f64,
    /// `L2(D)` norm of the imaginary part discarded by the reconstruction.
    pub imag_residue: f64,
    /// `‖u‖_{L2(D)}`.
    pub u_l2: f64,
    /// `‖u(x_i, ·)‖_{L2}` per grid row.
    pub profile_l2: Vec<f64>,
}

impl SolveReport {
    pub fn to_kv(&self) -> String {
        let ratio = self.ratio.map_or("undefined".to_string(), |r| r.to_string());
        format!(
            "w_norm = {}\nw12_norm_g = {}\nratio = {}\npde_residual = {}\nbc_residual = {}\nic_residual = {}\nimag_residue = {}\nu_l2 = {}\n",
            self.w_norm, self.w12_norm_g, ratio, self.pde_residual, self.bc_residual, self.ic_residual, self.imag_residue, self.u_l2
        )
    }
}

#[derive(Clone, Debug, Default)]
struct RowStats {
    /// `∫ f² dt` for `u, u_x, u_xx, u_t`.
    sq: [f64; 4],
    u_at_t0: f64,
    /// `Σ r² dt` over interior times, zero for the two boundary rows.
    residual_sq: f64,
    imag_sq: f64,
}

struct StatsContext<'a> {
    coeffs: &'a CoefficientSet,
    xgrid: &'a SpaceGrid,
    tgrid: &'a TimeGrid,
}

impl<'a> StatsContext<'a> {
    fn new(coeffs: &'a CoefficientSet, xgrid: &'a SpaceGrid, tgrid: &'a TimeGrid) -> Self {
        StatsContext { coeffs, xgrid, tgrid }
    }

    fn row_stats(&self, prev: Option<&[f64]>, row: &FieldRow, next: Option<&[f64]>) -> RowStats {
        let dt = self.tgrid.dt();
        let sq = [
            trapezoid_sum_sq(&row.u, dt),
            trapezoid_sum_sq(&row.u_x, dt),
            trapezoid_sum_sq(&row.u_xx, dt),
            trapezoid_sum_sq(&row.u_t, dt),
        ];
        let residual_sq = match (prev, next) {
            (Some(p), Some(q)) => self.residual_row_sq(p, &row.u, q),
            _ => 0.0,
        };
        RowStats {
            sq,
            u_at_t0: row.u[0],
            residual_sq,
            imag_sq: row.imag_sq,
        }
    }

    /// Finite-difference residual of `a u_t + u_xx + b u_x + c u` on one interior row.
    fn residual_row_sq(&self, prev: &[f64], u: &[f64], next: &[f64]) -> f64 {
        let CoefficientSet { a, b, c, .. } = *self.coeffs;
        let dt = self.tgrid.dt();
        let dx = self.xgrid.dx();
        let n = u.len();
        let mut acc = 0.0;
        for k in 1..n - 1 {
            let u_t = (u[k + 1] - u[k - 1]) / (2.0 * dt);
            let u_xx = (next[k] - 2.0 * u[k] + prev[k]) / (dx * dx);
            let u_x = (next[k] - prev[k]) / (2.0 * dx);
            let r = a * u_t + u_xx + b * u_x + c * u[k];
            acc += r * r;
        }
        acc * dt
    }

    fn bc_sq(&self, u0: &[f64], ux0: &[f64], g: &CausalSignal) -> f64 {
        let CoefficientSet { k0, k1, .. } = *self.coeffs;
        let diff: Vec<f64> = u0
            .iter()
            .zip(ux0)
            .zip(g.values())
            .map(|((u, ux), gv)| k0 * u + k1 * ux - gv)
            .collect();
        trapezoid_sum_sq(&diff, self.tgrid.dt())
    }

    fn assemble(&self, stats: &[RowStats], bc_sq: f64, g: &CausalSignal) -> SolveReport {
        let weights: Vec<f64> = (0..stats.len()).map(|i| self.xgrid.weight(i)).collect();
        let total = |f: &dyn Fn(&RowStats) -> f64| -> f64 {
            ordered_sum(stats.iter().zip(&weights).map(|(s, w)| w * f(s)))
        };
        let norms: Vec<f64> = (0..4).map(|f| total(&|s| s.sq[f]).sqrt()).collect();
        let w_norm = ordered_sum(norms.iter().copied());
        let residual = (ordered_sum(stats.iter().map(|s| s.residual_sq)) * self.xgrid.dx()).sqrt();
        let w12 = validate_gamma(g, DEFAULT_TOL).w12_norm;
        SolveReport {
            w_norm,
            w12_norm_g: w12,
            ratio: (w12 > 0.0).then(|| w_norm / w12),
            pde_residual: if w_norm > 0.0 { residual / w_norm } else { 0.0 },
            bc_residual: bc_sq.sqrt(),
            ic_residual: total(&|s| s.u_at_t0 * s.u_at_t0).sqrt(),
            imag_residue: total(&|s| s.imag_sq).sqrt(),
            u_l2: norms[0],
            profile_l2: stats.iter().map(|s| s.sq[0].sqrt()).collect(),
        }
    }

    fn field_report(&self, field: &FieldGrid, imag_sq: &[f64], g: &CausalSignal) -> SolveReport {
        let nx = field.xgrid.len();
        let stats: Vec<RowStats> = (0..nx)
            .map(|i| {
                let row = FieldRow {
                    u: field.u_row(i).to_vec(),
                    u_x: field.u_x_row(i).to_vec(),
                    u_xx: field.u_xx_row(i).to_vec(),
                    u_t: field.u_t_row(i).to_vec(),
                    imag_sq: imag_sq.get(i).copied().unwrap_or(0.0),
                };
                let prev = (i > 0).then(|| field.u_row(i - 1));
                let next = (i + 1 < nx).then(|| field.u_row(i + 1));
                self.row_stats(prev, &row, next)
            })
            .collect();
        let bc_sq = self.bc_sq(field.u_row(0), field.u_x_row(0), g);
        self.assemble(&stats, bc_sq, g)
    }
}

/// Solves on `xgrid` and returns the materialised fields with their report.
pub fn solve(
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    xgrid: &SpaceGrid,
    fgrid: &FrequencyGrid,
) -> Result<(FieldGrid, SolveReport)> {
    solve_with(g, coeffs, xgrid, fgrid, Execution::default())
}

pub fn solve_with(
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    xgrid: &SpaceGrid,
    fgrid: &FrequencyGrid,
    exec: Execution,
) -> Result<(FieldGrid, SolveReport)> {
    let sol = SpectralSolution::new_with(g, coeffs, fgrid, exec)?;
    let rows = exec.map(xgrid.len(), |i| sol.row(xgrid.x(i)));
    let imag: Vec<f64> = rows.iter().map(|r| r.imag_sq).collect();
    let field = FieldGrid::from_rows(*xgrid, *g.grid(), &rows);
    drop(rows);
    let report = StatsContext::new(coeffs, xgrid, g.grid()).field_report(&field, &imag, g);
    Ok((field, report))
}

/// Same numbers as [`solve`] but computed row by row, for grids too large to store.
pub fn solve_report(
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    xgrid: &SpaceGrid,
    fgrid: &FrequencyGrid,
    exec: Execution,
) -> Result<SolveReport> {
    Ok(SpectralSolution::new_with(g, coeffs, fgrid, exec)?.report(xgrid, exec))
}

/// Sum of the four `L2(D)` norms by 2-D trapezoidal quadrature.
pub fn w_norm(field: &FieldGrid) -> f64 {
    let dt = field.tgrid.dt();
    let nx = field.xgrid.len();
    [&field.u, &field.u_x, &field.u_xx, &field.u_t]
        .iter()
        .map(|f| {
            let n = field.tgrid.len();
            ordered_sum((0..nx).map(|i| field.xgrid.weight(i) * trapezoid_sum_sq(&f[i * n..(i + 1) * n], dt))).sqrt()
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals {
    pub pde: f64,
    pub bc: f64,
    pub ic: f64,
}

/// PDE residual from finite differences of `u` alone (normalised by the field's
/// W-norm), the initial-trace norm and the boundary-condition mismatch.
pub fn residual_check(field: &FieldGrid, coeffs: &CoefficientSet, g: &CausalSignal) -> Result<Residuals> {
    if g.grid() != &field.tgrid {
        bail!(Input, "boundary input and field use different time grids");
    }
    let report = StatsContext::new(coeffs, &field.xgrid, &field.tgrid).field_report(field, &[], g);
    Ok(Residuals {
        pde: report.pde_residual,
        bc: report.bc_residual,
        ic: report.ic_residual,
    })
}

/// Largest `‖u‖_W / ‖g‖_{W¹₂}` over a family of solves; zero inputs are skipped.
pub fn regularity_ratio<'a>(reports: impl IntoIterator<Item = &'a SolveReport>) -> Result<f64> {
    let mut best: Option<f64> = None;
    for r in reports {
        if let Some(ratio) = r.ratio {
            best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
        }
    }
    best.ok_or_else(|| Error::Input("regularity ratio needs at least one non-zero input".into()))
}

/// Solves with `c + M` and input `g e^{-Mt}`, then undoes the shift:
/// `u = e^{Mt} u_M`, `u_t = e^{Mt}(M u_M + ∂_t u_M)`.
pub fn solve_shifted(
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    shift: f64,
    xgrid: &SpaceGrid,
    fgrid: &FrequencyGrid,
) -> Result<FieldGrid> {
    solve_shifted_with(g, coeffs, shift, xgrid, fgrid, Execution::default())
}

pub fn solve_shifted_with(
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    shift: f64,
    xgrid: &SpaceGrid,
    fgrid: &FrequencyGrid,
    exec: Execution,
) -> Result<FieldGrid> {
    if let Admissibility::Rejected(reason) = check_admissible(coeffs) {
        bail!(Admissibility, "{reason}");
    }
    if !(shift.is_finite() && coeffs.mu() < shift) {
        bail!(
            Admissibility,
            "shift M = {shift} too small: need M > b²/4 - c = {}",
            coeffs.mu()
        );
    }
    let damped = if shift == 0.0 {
        g.clone()
    } else {
        g.modulated(|t| (-shift * t).exp())
    };
    let (mut field, _) = solve_with(&damped, &coeffs.shifted(shift), xgrid, fgrid, exec)?;
    if shift != 0.0 {
        let n = field.tgrid.len();
        let growth: Vec<f64> = (0..n).map(|k| (shift * field.tgrid.t(k)).exp()).collect();
        for i in 0..xgrid.len() {
            for k in 0..n {
                let idx = i * n + k;
                let e = growth[k];
                field.u_t[idx] = e * (shift * field.u[idx] + field.u_t[idx]);
                field.u[idx] *= e;
                field.u_x[idx] *= e;
                field.u_xx[idx] *= e;
            }
        }
    }
    Ok(field)
}

/// `x ↦ u(x, T)`; `T` must lie on the time grid.
pub fn terminal_snapshot(field: &FieldGrid, t: f64) -> Result<Profile> {
    let k = field
        .tgrid
        .index_of(t)
        .ok_or_else(|| Error::Input(format!("T = {t} is not on the time grid; no interpolation is done")))?;
    let values = (0..field.xgrid.len()).map(|i| field.at(i, k)).collect();
    Profile::new(field.xgrid, values)
}

/// `‖u(·, 0)‖_{L2}` of a profile-valued trace, used by reports.
pub fn profile_norm(values: &[f64], xgrid: &SpaceGrid) -> f64 {
    trapezoid_l2(values, xgrid.dx())
}
