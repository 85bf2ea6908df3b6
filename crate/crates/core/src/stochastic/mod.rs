//! Killed drifted Brownian motion `y(t) = a0 + beta t + sigma w(t)`, absorbed at 0.
//!
//! Dividing the PDE by `a` and matching the generator `beta ∂x + (sigma²/2) ∂xx` gives
//! `beta = b/a`, `sigma = √(2/a)`, `kappa = c/a` (Dirichlet boundary only).

mod density;
mod duality;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use density::{absorption_probability, fpt_density, killed_density};
pub use duality::{duality_check, duality_check_many, DualityConfig, DualityReport};

use crate::error::{bail, Result};
use crate::exec::{ordered_sum, Execution};
use crate::symbolkit::CoefficientSet;

/// Default number of Euler steps on `[0, T]`.
pub const DEFAULT_STEPS: usize = 1 << 12;

/// Paths per RNG stream.
const BLOCK: usize = 4096;

/// Bridge crossing probabilities below `e^{-40}` are treated as zero.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    PointMass(f64),
    /// Density samples at `x = i dx`, normalised internally by trapezoidal mass.
    Tabulated { dx: f64, values: Vec<f64> },
}

impl InitialLaw {
    fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::PointMass(a0) => {
                if !(a0.is_finite() && *a0 >= 0.0) {
                    bail!(Input, "starting point must be finite and ≥ 0, got {a0}");
                }
            }
            InitialLaw::Tabulated { dx, values } => {
                if !(dx.is_finite() && *dx > 0.0) || values.len() < 2 {
                    bail!(Input, "tabulated law needs dx > 0 and at least 2 samples");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    bail!(Input, "tabulated law must be finite and non-negative");
                }
                if self.mass() <= 0.0 {
                    bail!(Input, "tabulated law has zero mass");
                }
            }
        }
        Ok(())
    }

    fn mass(&self) -> f64 {
        match self {
            InitialLaw::PointMass(_) => 1.0,
            InitialLaw::Tabulated { dx, values } => {
                let s: f64 = values.iter().sum();
                dx * (s - 0.5 * (values[0] + values[values.len() - 1]))
            }
        }
    }

    /// `(a0, weight)` pairs of the quadrature rule; weights sum to one.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match self {
            InitialLaw::PointMass(a0) => vec![(*a0, 1.0)],
            InitialLaw::Tabulated { dx, values } => {
                let mass = self.mass();
                let n = values.len();
                values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let w = if i == 0 || i == n - 1 { 0.5 * dx } else { *dx };
                        (i as f64 * dx, w * v / mass)
                    })
                    .collect()
            }
        }
    }

    /// `E_ρ f(a0)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        ordered_sum(self.nodes().into_iter().map(|(x, w)| if w == 0.0 { 0.0 } else { w * f(x) }))
    }
}

/// Inverse-CDF sampler over the trapezoid cells of a tabulated law.
enum StartSampler {
    Fixed(f64),
    Cells { dx: f64, cdf: Vec<f64> },
}

impl StartSampler {
    fn new(law: &InitialLaw) -> Self {
        match law {
            InitialLaw::PointMass(a0) => StartSampler::Fixed(*a0),
            InitialLaw::Tabulated { dx, values } => {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = values
                    .windows(2)
                    .map(|w| {
                        acc += 0.5 * (w[0] + w[1]);
                        acc
                    })
                    .collect();
                cdf.iter_mut().for_each(|c| *c /= acc);
                StartSampler::Cells { dx: *dx, cdf }
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            StartSampler::Fixed(a0) => *a0,
            StartSampler::Cells { dx, cdf } => {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|c| *c < u).min(cdf.len() - 1);
                (i as f64 + rng.random::<f64>()) * dx
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessParams {
    pub beta: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub horizon: f64,
    pub rho: InitialLaw,
}

impl ProcessParams {
    pub fn new(beta: f64, sigma: f64, kappa: f64, horizon: f64, rho: InitialLaw) -> Result<Self> {
        if !(beta.is_finite() && kappa.is_finite()) {
            bail!(Input, "drift and killing rate must be finite");
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            bail!(Input, "volatility must be positive, got {sigma}");
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            bail!(Input, "horizon must be positive and finite, got {horizon}");
        }
        rho.validate()?;
        Ok(ProcessParams { beta, sigma, kappa, horizon, rho })
    }

    /// Generator matching for the Dirichlet problem (`k0 = 1`, `k1 = 0`).
    pub fn from_coefficients(coeffs: &CoefficientSet, horizon: f64, rho: InitialLaw) -> Result<Self> {
        if coeffs.k0 != 1.0 || coeffs.k1 != 0.0 {
            bail!(
                Unsupported,
                "the process mapping needs k0 = 1, k1 = 0 (got k0 = {}, k1 = {})",
                coeffs.k0,
                coeffs.k1
            );
        }
        if !(coeffs.a > 0.0) {
            bail!(Input, "a must be positive, got {}", coeffs.a);
        }
        let a = coeffs.a;
        ProcessParams::new(coeffs.b / a, (2.0 / a).sqrt(), coeffs.c / a, horizon, rho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathOutcome {
    /// Hit zero at `tau < T`; `tau = 0` for paths started on the boundary.
    Absorbed { tau: f64 },
    /// Alive at `T`, at position `y_t > 0`.
    Survived { y_t: f64 },
}

impl PathOutcome {
    pub fn tau(&self) -> Option<f64> {
        match *self {
            PathOutcome::Absorbed { tau } => Some(tau),
            PathOutcome::Survived { .. } => None,
        }
    }

    pub fn terminal(&self) -> Option<f64> {
        match *self {
            PathOutcome::Survived { y_t } => Some(y_t),
            PathOutcome::Absorbed { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSamples {
    pub params: ProcessParams,
    pub steps: usize,
    pub outcomes: Vec<PathOutcome>,
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl PathSamples {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Mean of `f` over paths, with the standard error of the mean.
    pub fn estimate(&self, f: impl Fn(&PathOutcome) -> f64) -> Estimate {
        let n = self.outcomes.len() as f64;
        let vals: Vec<f64> = self.outcomes.iter().map(f).collect();
        let mean = ordered_sum(vals.iter().copied()) / n;
        let var = if n > 1.0 {
            ordered_sum(vals.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0)
        } else {
            0.0
        };
        Estimate { mean, stderr: (var / n).sqrt() }
    }

    pub fn absorbed_fraction(&self) -> Estimate {
        self.estimate(|o| if o.tau().is_some() { 1.0 } else { 0.0 })
    }
}

/// Euler–Maruyama with the Brownian-bridge crossing correction.
///
/// Paths are generated in blocks of 4096; block `j` uses the ChaCha8 stream `j` of `seed`,
/// so the result does not depend on the execution mode.
pub fn sample_first_passage(
    params: &ProcessParams,
    seed: u64,
    n_paths: usize,
    steps: usize,
    exec: Execution,
) -> Result<PathSamples> {
    if n_paths == 0 {
        bail!(Input, "need at least one path");
    }
    if steps == 0 {
        bail!(Input, "need at least one time step");
    }
    params.rho.validate()?;
    let start = StartSampler::new(&params.rho);
    let h = params.horizon / steps as f64;
    let drift = params.beta * h;
    let vol = params.sigma * h.sqrt();
    let bridge = 2.0 / (params.sigma * params.sigma * h);

    let blocks = n_paths.div_ceil(BLOCK);
    let per_block = exec.map(blocks, |j| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let count = BLOCK.min(n_paths - j * BLOCK);
        (0..count)
            .map(|_| {
                let mut y = start.draw(&mut rng);
                if y <= 0.0 {
                    return PathOutcome::Absorbed { tau: 0.0 };
                }
                for k in 0..steps {
                    let z: f64 = rng.sample(StandardNormal);
                    let next = y + drift + vol * z;
                    let t = k as f64 * h;
                    if next <= 0.0 {
                        return PathOutcome::Absorbed { tau: t + h * y / (y - next) };
                    }
                    let expo = bridge * y * next;
                    if expo < BRIDGE_CUTOFF && rng.random::<f64>() < (-expo).exp() {
                        return PathOutcome::Absorbed { tau: t + 0.5 * h };
                    }
                    y = next;
                }
                PathOutcome::Survived { y_t: y }
            })
            .collect::<Vec<_>>()
    });
    Ok(PathSamples {
        params: params.clone(),
        steps,
        outcomes: per_block.into_iter().flatten().collect(),
    })
}

/// Counts of `values` in the bins `[edges[i], edges[i+1])`; values outside are dropped.
pub fn histogram(values: impl IntoIterator<Item = f64>, edges: &[f64]) -> Result<Vec<u64>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        bail!(Input, "histogram edges must be strictly increasing, at least 2");
    }
    let mut counts = vec![0u64; edges.len() - 1];
    let last = edges[edges.len() - 1];
    for v in values {
        if v < edges[0] || v >= last {
            continue;
        }
        let i = edges.partition_point(|e| *e <= v) - 1;
        counts[i] += 1;
    }
    Ok(counts)
}

pub fn write_histogram_csv<W: Write>(writer: W, edges: &[f64], counts: &[u64]) -> Result<()> {
    if counts.len() + 1 != edges.len() {
        bail!(Input, "{} counts need {} edges, got {}", counts.len(), counts.len() + 1, edges.len());
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_left", "bin_right", "count"])?;
    for (i, c) in counts.iter().enumerate() {
        w.write_record([edges[i].to_string(), edges[i + 1].to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
