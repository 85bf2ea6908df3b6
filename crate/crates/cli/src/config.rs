use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use invparab::signal::{Builtin, CausalSignal, TimeGrid};
use invparab::solver::SpaceGrid;
use invparab::spectral::FrequencyGrid;
use invparab::symbolkit::CoefficientSet;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Solve,
    ShiftSolve,
    AbsorbCheck,
    Duality,
    Norms,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k0: f64,
    pub k1: f64,
}

impl From<Coefficients> for CoefficientSet {
    fn from(c: Coefficients) -> Self {
        CoefficientSet::new(c.a, c.b, c.c, c.k0, c.k1)
    }
}

/// Time, space and frequency grids. `n` defaults to covering `horizon`; `nx` defaults to the
/// truncated extent for `b`; `dw`/`m` default to the FFT-matched grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub dx: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            dt: 1e-2,
            n: None,
            horizon: Some(20.0),
            dx: 5e-2,
            nx: None,
            dw: None,
            m: None,
        }
    }
}

/// A builtin generator or a `t,value` CSV file, relative paths resolved against the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative to `‖g‖`.
    pub bc: f64,
    pub ic: f64,
    pub pde: f64,
    /// Admissible-input check.
    pub gamma: f64,
    /// Bound on `‖v(·,0)‖ / ‖v*‖` for `absorb-check`.
    pub absorb: f64,
    pub duality_z: f64,
    pub duality_quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bc: 1e-3,
            ic: 1e-6,
            pde: 1e-3,
            gamma: invparab::signal::DEFAULT_TOL,
            absorb: 1e-2,
            duality_z: 3.0,
            duality_quadrature: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub coefficients: Coefficients,
    #[serde(default)]
    pub grids: Grids,
    pub signal: SignalSpec,
    /// Exponential shift `M` for `shift-solve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// Terminal time `T` for `absorb-check` and `duality`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    /// Euler steps on `[0, T]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Starting point of the process (point mass).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    /// Number of bins of the first-passage histogram written by `duality`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_bins: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("cannot parse config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.signal.path, path.parent()) {
            if p.is_relative() {
                cfg.signal.path = Some(dir.join(p));
            }
        }
        if let Some(p) = &cfg.signal.path {
            if !p.exists() {
                bail!("signal file {} does not exist", p.display());
            }
        }
        Ok(cfg)
    }

    /// Command-specific required fields.
    fn check(&self) -> anyhow::Result<()> {
        match (&self.signal.builtin, &self.signal.path) {
            (Some(_), Some(_)) => bail!("signal: give either `builtin` or `path`, not both"),
            (None, None) => bail!("signal: one of `builtin` or `path` is required"),
            _ => {}
        }
        let need = |present: bool, field: &str| -> anyhow::Result<()> {
            if !present {
                bail!("`{field}` is required for {:?}", self.command);
            }
            Ok(())
        };
        match self.command {
            Command::ShiftSolve => need(self.shift.is_some(), "shift")?,
            Command::AbsorbCheck => need(self.terminal_time.is_some(), "terminal_time")?,
            Command::Duality => {
                need(self.terminal_time.is_some(), "terminal_time")?;
                need(self.n_paths.is_some(), "n_paths")?;
            }
            _ => {}
        }
        if self.grids.n.is_some() == self.grids.horizon.is_some() {
            bail!("grids: give exactly one of `n` or `horizon`");
        }
        if self.grids.dw.is_some() != self.grids.m.is_some() {
            bail!("grids: `dw` and `m` go together");
        }
        Ok(())
    }

    pub fn time_grid(&self) -> invparab::Result<TimeGrid> {
        match (self.grids.n, self.grids.horizon) {
            (Some(n), _) => TimeGrid::new(self.grids.dt, n),
            (None, Some(h)) => TimeGrid::covering(self.grids.dt, h),
            (None, None) => unreachable!("checked on load"),
        }
    }

    pub fn space_grid(&self) -> invparab::Result<SpaceGrid> {
        match self.grids.nx {
            Some(nx) => SpaceGrid::new(self.grids.dx, nx),
            None => SpaceGrid::truncated(self.grids.dx, self.coefficients.b),
        }
    }

    pub fn frequency_grid(&self, tgrid: &TimeGrid) -> invparab::Result<FrequencyGrid> {
        match (self.grids.dw, self.grids.m) {
            (Some(dw), Some(m)) => {
                let fg = FrequencyGrid::new(dw, m)?;
                fg.check_nyquist(tgrid)?;
                Ok(fg)
            }
            _ => Ok(FrequencyGrid::matched(tgrid)),
        }
    }

    pub fn signal(&self, tgrid: TimeGrid) -> invparab::Result<CausalSignal> {
        if let Some(path) = &self.signal.path {
            let file = std::fs::File::open(path)?;
            return CausalSignal::read_csv(file);
        }
        let name = self.signal.builtin.as_deref().expect("checked on load");
        Ok(Builtin::parse(name, self.signal.frequency.unwrap_or(1.0))?.sample(tgrid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVE: &str = r#"
command = "solve"
coefficients = { a = 1.0, b = 1.0, c = 1.0, k0 = 1.0, k1 = 0.0 }
signal = { builtin = "exp-sin" }
"#;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::from_toml(SOLVE).unwrap();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        cfg.command = Command::Duality;
        cfg.terminal_time = Some(5.0);
        cfg.n_paths = Some(1000);
        cfg.seed = Some(42);
        cfg.grids.m = Some(2025);
        cfg.grids.dw = Some(0.1);
        cfg.tolerances.pde = 0.5;
        cfg.output_dir = Some("out dir".into());
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn missing_fields_are_rejected() {
        let no_shift = SOLVE.replace("\"solve\"", "\"shift-solve\"");
        assert!(RunConfig::from_toml(&no_shift).is_err());
        let both = SOLVE.replace("builtin = \"exp-sin\"", "builtin = \"bump\", path = \"g.csv\"");
        assert!(RunConfig::from_toml(&both).is_err());
        assert!(RunConfig::from_toml(&format!("{SOLVE}\nunknown = 1\n")).is_err());
        assert!(RunConfig::from_toml("command = \"solve\"").is_err());
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_toml(SOLVE).unwrap();
        let tg = cfg.time_grid().unwrap();
        assert_eq!(tg.len(), 2001);
        assert!(cfg.frequency_grid(&tg).unwrap().is_fft_matched(&tg));
        assert_eq!(cfg.tolerances, Tolerances::default());
    }
}
