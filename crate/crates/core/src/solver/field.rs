use std::io::Write;

use crate::error::{bail, Result};
use crate::signal::{trapezoid_l2, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceGrid {
    dx: f64,
    nx: usize,
}

/// Truncation level for the default spatial extent: `e^{-b X/2} ≤ 1e-12`.
pub const TRUNCATION_LEVEL: f64 = 1e-12;

impl SpaceGrid {
    pub fn new(dx: f64, nx: usize) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            bail!(Input, "space step must be positive, got {dx}");
        }
        if nx < 3 {
            bail!(Input, "space grid needs at least 3 points, got {nx}");
        }
        Ok(SpaceGrid { dx, nx })
    }

    /// Grid on `[0, X]` with `X = 2 ln(1/TRUNCATION_LEVEL)/b`, beyond which the
    /// decaying mode has lost twelve orders of magnitude.
    pub fn truncated(dx: f64, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            bail!(Input, "drift coefficient must be positive, got {b}");
        }
        let x_max = -2.0 * TRUNCATION_LEVEL.ln() / b;
        SpaceGrid::new(dx, (x_max / dx).ceil() as usize + 1)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.nx
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn extent(&self) -> f64 {
        self.x(self.nx - 1)
    }

    /// Trapezoidal weight of node `i`.
    pub(crate) fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }
}

/// A function of `x` on a [`SpaceGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub grid: SpaceGrid,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(Input, "profile has {} values, grid has {}", values.len(), grid.len());
        }
        Ok(Profile { grid, values })
    }

    pub fn l2_norm(&self) -> f64 {
        trapezoid_l2(&self.values, self.grid.dx())
    }

    /// Linear interpolation, zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.grid.extent() {
            return 0.0;
        }
        let s = x / self.grid.dx();
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.x(i).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `u` and its derivative fields on an `x × t` tensor grid, stored row-major in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub xgrid: SpaceGrid,
    pub tgrid: TimeGrid,
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_xx: Vec<f64>,
    pub u_t: Vec<f64>,
}

/// One `x = const` slice of a [`FieldGrid`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldRow {
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_xx: Vec<f64>,
    pub u_t: Vec<f64>,
    /// `∫ (Im u)² dt` discarded by the reconstruction.
    pub imag_sq: f64,
}

impl FieldGrid {
    pub fn zeros(xgrid: SpaceGrid, tgrid: TimeGrid) -> Self {
        let len = xgrid.len() * tgrid.len();
        FieldGrid {
            xgrid,
            tgrid,
            u: vec![0.0; len],
            u_x: vec![0.0; len],
            u_xx: vec![0.0; len],
            u_t: vec![0.0; len],
        }
    }

    pub(crate) fn from_rows(xgrid: SpaceGrid, tgrid: TimeGrid, rows: &[FieldRow]) -> Self {
        let cat = |f: fn(&FieldRow) -> &Vec<f64>| -> Vec<f64> {
            rows.iter().flat_map(|r| f(r).iter().copied()).collect()
        };
        FieldGrid {
            xgrid,
            tgrid,
            u: cat(|r| &r.u),
            u_x: cat(|r| &r.u_x),
            u_xx: cat(|r| &r.u_xx),
            u_t: cat(|r| &r.u_t),
        }
    }

    fn span(&self, i: usize) -> std::ops::Range<usize> {
        let n = self.tgrid.len();
        i * n..(i + 1) * n
    }

    /// `u(x_i, ·)`.
    pub fn u_row(&self, i: usize) -> &[f64] {
        &self.u[self.span(i)]
    }

    pub fn u_x_row(&self, i: usize) -> &[f64] {
        &self.u_x[self.span(i)]
    }

    pub fn u_xx_row(&self, i: usize) -> &[f64] {
        &self.u_xx[self.span(i)]
    }

    pub fn u_t_row(&self, i: usize) -> &[f64] {
        &self.u_t[self.span(i)]
    }

    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.u[i * self.tgrid.len() + k]
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let s = |v: &Vec<f64>| v.iter().map(|x| alpha * x).collect();
        FieldGrid {
            xgrid: self.xgrid,
            tgrid: self.tgrid,
            u: s(&self.u),
            u_x: s(&self.u_x),
            u_xx: s(&self.u_xx),
            u_t: s(&self.u_t),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.u_x, &self.u_xx, &self.u_t]
            .iter()
            .all(|f| f.iter().all(|v| v.is_finite()))
    }

    /// Long format `x,t,u,u_x,u_xx,u_t`, one row per grid node.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "t", "u", "u_x", "u_xx", "u_t"])?;
        let n = self.tgrid.len();
        for i in 0..self.xgrid.len() {
            let x = self.xgrid.x(i).to_string();
            for k in 0..n {
                let idx = i * n + k;
                w.write_record([
                    x.clone(),
                    self.tgrid.t(k).to_string(),
                    self.u[idx].to_string(),
                    self.u_x[idx].to_string(),
                    self.u_xx[idx].to_string(),
                    self.u_t[idx].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
