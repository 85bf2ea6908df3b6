//! Causal sampled signals on `[0, T_sig]`.
//!
//! A [`CausalSignal`] holds samples `v(k dt)`, `k = 0..n`, and is implicitly zero for
//! `t < 0`. Admissible boundary inputs are continuous at the origin (so `v(0) = 0`),
//! have a square-integrable derivative and have decayed by the end of the window;
//! [`validate_gamma`] checks those three conditions on the samples.

use std::io::{Read, Write};

use crate::error::{bail, Error, Result};

/// Default relative tolerance for [`validate_gamma`].
pub const DEFAULT_TOL: f64 = 1e-6;

/// Fraction of trailing samples used by the tail-decay check.
pub const TAIL_FRACTION: f64 = 0.05;

/// Relative spacing tolerance accepted when reading a signal from CSV.
pub const CSV_SPACING_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            bail!(Input, "time step must be positive and finite, got {dt}");
        }
        if n < 2 {
            bail!(Input, "time grid needs at least 2 samples, got {n}");
        }
        Ok(TimeGrid { dt, n })
    }

    /// Grid with step `dt` covering `[0, horizon]`.
    pub fn covering(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            bail!(Input, "horizon must be positive, got {horizon}");
        }
        TimeGrid::new(dt, (horizon / dt).round() as usize + 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.t(self.n - 1)
    }

    /// Index of `t` if it lies on the grid (relative tolerance 1e-9 of `dt`).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt).round();
        if k < 0.0 || k as usize >= self.n {
            return None;
        }
        if (k * self.dt - t).abs() <= 1e-9 * self.dt.max(t.abs()) {
            Some(k as usize)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CausalSignal {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl CausalSignal {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(
                Input,
                "signal has {} samples but its grid has {}",
                values.len(),
                grid.len()
            );
        }
        Ok(CausalSignal { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.t(k))).collect();
        CausalSignal { grid, values }
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        CausalSignal {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Linear interpolation; zero for `t < 0` and beyond the horizon.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.grid.horizon() {
            return 0.0;
        }
        let s = t / self.grid.dt;
        let k = (s.floor() as usize).min(self.values.len() - 2);
        let w = s - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        CausalSignal {
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Pointwise sum; both signals must share a grid.
    pub fn add(&self, other: &CausalSignal) -> Result<Self> {
        if self.grid != other.grid {
            bail!(Input, "cannot add signals on different grids");
        }
        Ok(CausalSignal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Pointwise product with `f(t)`.
    pub fn modulated(&self, f: impl Fn(f64) -> f64) -> Self {
        CausalSignal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| v * f(self.grid.t(k)))
                .collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        trapezoid_l2(&self.values, self.grid.dt)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Reads the two-column `t,value` format. Time must start at 0 and be uniform.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            bail!(Input, "expected header `t,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(","));
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Input(format!("row {}: missing column", line + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Input(format!("row {}: {e}", line + 2)))
            };
            ts.push(parse(0)?);
            vs.push(parse(1)?);
        }
        if ts.len() < 2 {
            bail!(Input, "signal CSV needs at least 2 rows");
        }
        if ts[0].abs() > 0.0 {
            bail!(Input, "signal must start at t=0, got t={}", ts[0]);
        }
        let n = ts.len();
        let dt = ts[n - 1] / (n - 1) as f64;
        if !(dt > 0.0) {
            bail!(Input, "time column must be strictly increasing");
        }
        for k in 1..n {
            let step = ts[k] - ts[k - 1];
            if step <= 0.0 {
                bail!(Input, "time column must be strictly increasing (row {})", k + 2);
            }
            // decimal rounding of large t values is allowed on top of the relative tolerance
            if (step - dt).abs() > CSV_SPACING_TOL * dt + 4.0 * f64::EPSILON * ts[k].abs() {
                bail!(Input, "non-uniform spacing at row {}: step {step} vs {dt}", k + 2);
            }
        }
        CausalSignal::new(TimeGrid::new(dt, n)?, vs)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.t(k).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sqrt(∫ f²)` by the trapezoidal rule on a uniform grid.
pub(crate) fn trapezoid_l2(values: &[f64], step: f64) -> f64 {
    trapezoid_sum_sq(values, step).sqrt()
}

pub(crate) fn trapezoid_sum_sq(values: &[f64], step: f64) -> f64 {
    match values {
        [] => 0.0,
        [v] => v * v * step,
        [first, .., last] => {
            let inner: f64 = values.iter().map(|v| v * v).sum();
            step * (inner - 0.5 * (first * first + last * last))
        }
    }
}

fn derivative_values(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n == 2 {
        let d = (values[1] - values[0]) / dt;
        return vec![d, d];
    }
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    out
}

/// Centred-difference derivative on the same grid, second-order one-sided at the ends.
pub fn differentiate(sig: &CausalSignal) -> Result<CausalSignal> {
    if sig.grid.len() < 3 {
        bail!(Input, "differentiation needs at least 3 samples");
    }
    Ok(CausalSignal {
        grid: sig.grid,
        values: derivative_values(&sig.values, sig.grid.dt),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaReport {
    pub is_member: bool,
    pub l2_norm: f64,
    pub deriv_l2_norm: f64,
    pub w12_norm: f64,
    pub rejection_reason: Option<String>,
}

impl GammaReport {
    /// Flat `key = value` block.
    pub fn to_kv(&self) -> String {
        format!(
            "is_member = {}\nl2_norm = {}\nderiv_l2_norm = {}\nw12_norm = {}\nrejection_reason = {}\n",
            self.is_member,
            self.l2_norm,
            self.deriv_l2_norm,
            self.w12_norm,
            self.rejection_reason.as_deref().unwrap_or("none"),
        )
    }
}

/// Checks that the sampled signal behaves like a member of the admissible input class:
/// continuous at the origin, finite derivative norm, and decayed over the trailing 5%.
pub fn validate_gamma(sig: &CausalSignal, tol: f64) -> GammaReport {
    let values = &sig.values;
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return GammaReport {
            is_member: false,
            l2_norm: f64::NAN,
            deriv_l2_norm: f64::NAN,
            w12_norm: f64::NAN,
            rejection_reason: Some(format!("non-finite sample at t={}", sig.grid.t(k))),
        };
    }
    let l2 = sig.l2_norm();
    let deriv = derivative_values(values, sig.grid.dt);
    let dl2 = trapezoid_l2(&deriv, sig.grid.dt);
    let scale = sig.max_abs();

    let mut reason = None;
    if values[0].abs() > tol * scale {
        reason = Some(format!("g(0)={}≠0", values[0]));
    } else if !dl2.is_finite() {
        reason = Some("derivative is not square-integrable".to_string());
    } else {
        let tail_len = ((TAIL_FRACTION * values.len() as f64).ceil() as usize).max(1);
        let tail = trapezoid_l2(&values[values.len() - tail_len..], sig.grid.dt);
        if tail > tol * l2 {
            reason = Some(format!(
                "tail L2 mass {tail:.3e} exceeds {tol:.1e} of total {l2:.3e}; signal has not decayed"
            ));
        }
    }
    GammaReport {
        is_member: reason.is_none(),
        l2_norm: l2,
        deriv_l2_norm: dl2,
        w12_norm: l2 + dl2,
        rejection_reason: reason,
    }
}

/// `‖g‖_{L2} + ‖g'‖_{L2}` for an admissible signal.
pub fn w12_norm(sig: &CausalSignal) -> Result<f64> {
    let report = validate_gamma(sig, DEFAULT_TOL);
    match report.rejection_reason {
        None => Ok(report.w12_norm),
        Some(r) => Err(Error::Domain(format!("signal is not admissible: {r}"))),
    }
}

/// Named input generators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    /// `e^{-t} sin(ω t)`.
    ExpSin { frequency: f64 },
    /// `e^{-t} cos t`; not admissible (`g(0) = 1`).
    ExpCos,
    /// `t e^{-t}`.
    RampDecay,
    /// Smooth compact bump `exp(1 - 1/(1 - s²))`, `s = t - 1.5`, supported on `[0.5, 2.5]`.
    Bump,
    Zero,
}

impl Builtin {
    pub fn parse(name: &str, frequency: f64) -> Result<Self> {
        Ok(match name {
            "exp-sin" => Builtin::ExpSin { frequency },
            "exp-cos" => Builtin::ExpCos,
            "ramp-decay" => Builtin::RampDecay,
            "bump" => Builtin::Bump,
            "zero" => Builtin::Zero,
            other => bail!(Input, "unknown builtin signal `{other}`"),
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Builtin::ExpSin { frequency } => (-t).exp() * (frequency * t).sin(),
            Builtin::ExpCos => (-t).exp() * t.cos(),
            Builtin::RampDecay => t * (-t).exp(),
            Builtin::Bump => {
                let s = t - 1.5;
                if s.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            Builtin::Zero => 0.0,
        }
    }

    pub fn sample(&self, grid: TimeGrid) -> CausalSignal {
        CausalSignal::from_fn(grid, |t| self.eval(t))
    }
}
