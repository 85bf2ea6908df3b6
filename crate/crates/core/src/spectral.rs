//! Unitary Fourier transform of causal signals,
//!
//! ```text
//! V(iω) = (2π)^{-1/2} Σ_k e^{-iω t_k} v(t_k) dt
//! v(t)  = (2π)^{-1/2} Σ_j e^{iω_j t} V(iω_j) dω
//! ```
//!
//! on a centred, odd-sized frequency grid. When the frequency grid is matched to the
//! time grid (`m dω dt = 2π`, `m ≥ n`) both directions go through an FFT of length `m`
//! and the pair is an exact discrete isometry; any other grid falls back to a direct sum.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{bail, Result};
use crate::exec::Execution;
use crate::signal::{trapezoid_l2, CausalSignal, TimeGrid};

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Relative tolerance on `max |V(-iω) - conj V(iω)| / max |V|` accepted by the inverse.
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid {
    dw: f64,
    m: usize,
}

impl FrequencyGrid {
    pub fn new(dw: f64, m: usize) -> Result<Self> {
        if !(dw.is_finite() && dw > 0.0) {
            bail!(Input, "frequency step must be positive, got {dw}");
        }
        if m % 2 == 0 {
            bail!(Input, "frequency grid size must be odd, got {m}");
        }
        Ok(FrequencyGrid { dw, m })
    }

    /// The FFT-matched grid for `tgrid`: `m` is the smallest odd 3·5·7-smooth size `≥ n`.
    pub fn matched(tgrid: &TimeGrid) -> Self {
        let m = smooth_odd_size(tgrid.len());
        FrequencyGrid {
            dw: 2.0 * PI / (m as f64 * tgrid.dt()),
            m,
        }
    }

    pub fn dw(&self) -> f64 {
        self.dw
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half(&self) -> usize {
        (self.m - 1) / 2
    }

    /// Frequency of centred index `i`.
    pub fn omega(&self, i: usize) -> f64 {
        (i as f64 - self.half() as f64) * self.dw
    }

    pub fn omega_max(&self) -> f64 {
        self.half() as f64 * self.dw
    }

    pub fn omegas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(|i| self.omega(i))
    }

    /// Centred index of the FFT bin `j`.
    pub(crate) fn centred_of_bin(&self, j: usize) -> usize {
        (j + self.half()) % self.m
    }

    pub(crate) fn bin_of_centred(&self, i: usize) -> usize {
        (i + self.m - self.half()) % self.m
    }

    pub fn is_fft_matched(&self, tgrid: &TimeGrid) -> bool {
        let prod = self.m as f64 * self.dw * tgrid.dt();
        self.m >= tgrid.len() && (prod - 2.0 * PI).abs() <= 1e-9 * 2.0 * PI
    }

    pub fn check_nyquist(&self, tgrid: &TimeGrid) -> Result<()> {
        let nyquist = PI / tgrid.dt();
        if self.omega_max() > nyquist * (1.0 + 1e-12) {
            bail!(
                Config,
                "frequency grid reaches {} above the Nyquist limit {nyquist}",
                self.omega_max()
            );
        }
        Ok(())
    }
}

fn smooth_odd_size(n: usize) -> usize {
    let mut m = if n % 2 == 1 { n } else { n + 1 };
    loop {
        let mut r = m;
        for p in [3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            bail!(Input, "spectrum has {} values, grid has {}", values.len(), grid.len());
        }
        Ok(Spectrum { grid, values })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Spectrum {
            grid,
            values: grid.omegas().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// Values in centred order (`values()[half]` is `ω = 0`).
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    /// `max_ω |V(-iω) - conj V(iω)| / max |V|`; zero for the zero spectrum.
    pub fn conj_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let m = self.values.len();
        (0..=m / 2)
            .map(|i| (self.values[m - 1 - i] - self.values[i].conj()).norm())
            .fold(0.0_f64, f64::max)
            / scale
    }

    /// `(Σ |V|² dω)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dw).sqrt()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["omega", "re", "im"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.omega(i).to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn plan(m: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    }
}

pub fn forward_transform(sig: &CausalSignal, fgrid: &FrequencyGrid) -> Result<Spectrum> {
    forward_transform_with(sig, fgrid, Execution::default())
}

pub fn forward_transform_with(
    sig: &CausalSignal,
    fgrid: &FrequencyGrid,
    exec: Execution,
) -> Result<Spectrum> {
    let tgrid = sig.grid();
    fgrid.check_nyquist(tgrid)?;
    let dt = tgrid.dt();
    let scale = dt * INV_SQRT_2PI;
    let v = sig.values();

    if fgrid.is_fft_matched(tgrid) {
        let m = fgrid.len();
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        buf.resize(m, Complex64::new(0.0, 0.0));
        plan(m, false).process(&mut buf);
        let values = (0..m)
            .map(|i| buf[fgrid.bin_of_centred(i)] * scale)
            .collect();
        return Ok(Spectrum { grid: *fgrid, values });
    }

    let values = exec.map(fgrid.len(), |i| {
        let w = fgrid.omega(i);
        let acc = v.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (k, &x)| {
            let (s, c) = (w * tgrid.t(k)).sin_cos();
            acc + Complex64::new(c, -s) * x
        });
        acc * scale
    });
    Ok(Spectrum { grid: *fgrid, values })
}

/// Real part of an inverse transform plus the discarded imaginary residue
/// (`L2` norm over the time grid).
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub signal: CausalSignal,
    pub imag_residue: f64,
}

pub fn inverse_transform(spec: &Spectrum, tgrid: &TimeGrid) -> Result<Reconstruction> {
    inverse_transform_with(spec, tgrid, Execution::default())
}

pub fn inverse_transform_with(
    spec: &Spectrum,
    tgrid: &TimeGrid,
    exec: Execution,
) -> Result<Reconstruction> {
    let asym = spec.conj_asymmetry();
    if asym > SYMMETRY_TOL {
        bail!(
            Domain,
            "spectrum is not conjugate-symmetric (relative asymmetry {asym:.3e}); the reconstruction would not be real"
        );
    }
    let fgrid = spec.grid;
    let scale = fgrid.dw * INV_SQRT_2PI;
    let n = tgrid.len();

    let full: Vec<Complex64> = if fgrid.is_fft_matched(tgrid) {
        let m = fgrid.len();
        let mut buf: Vec<Complex64> = (0..m).map(|j| spec.values[fgrid.centred_of_bin(j)]).collect();
        plan(m, true).process(&mut buf);
        buf.truncate(n);
        buf.into_iter().map(|z| z * scale).collect()
    } else {
        exec.map(n, |k| {
            let t = tgrid.t(k);
            let acc = spec.values.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (i, v)| {
                let (s, c) = (fgrid.omega(i) * t).sin_cos();
                acc + Complex64::new(c, s) * v
            });
            acc * scale
        })
    };
    let re: Vec<f64> = full.iter().map(|z| z.re).collect();
    let im: Vec<f64> = full.iter().map(|z| z.im).collect();
    Ok(Reconstruction {
        signal: CausalSignal::new(*tgrid, re)?,
        imag_residue: trapezoid_l2(&im, tgrid.dt()),
    })
}

/// `(2π)^{-1/2} ∫_0^{T_sig} e^{-pt} v(t) dt` by the trapezoidal rule, `Re p ≥ 0`.
pub fn laplace_at(sig: &CausalSignal, p: Complex64) -> Result<Complex64> {
    if !(p.re >= 0.0) {
        bail!(Domain, "Laplace variable must satisfy Re p ≥ 0, got {p}");
    }
    let tgrid = sig.grid();
    let v = sig.values();
    let last = v.len() - 1;
    let acc = v.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (k, &x)| {
        let w = if k == 0 || k == last { 0.5 } else { 1.0 };
        acc + (-p * tgrid.t(k)).exp() * (w * x)
    });
    Ok(acc * (tgrid.dt() * INV_SQRT_2PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Builtin;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_odd_size(1), 1);
        assert_eq!(smooth_odd_size(10), 15);
        assert_eq!(smooth_odd_size(20_001), 21_609);
        let m = smooth_odd_size(1 << 20);
        assert!(m >= 1 << 20 && m % 2 == 1);
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(0.1, 10).is_err());
        assert!(FrequencyGrid::new(0.0, 11).is_err());
        let g = FrequencyGrid::new(0.5, 11).unwrap();
        assert_eq!(g.omega(5), 0.0);
        assert_eq!(g.omega_max(), 2.5);
        for j in 0..11 {
            assert_eq!(g.bin_of_centred(g.centred_of_bin(j)), j);
        }
    }

    #[test]
    fn zero_signal_transforms() {
        let tg = TimeGrid::new(0.01, 100).unwrap();
        let fg = FrequencyGrid::matched(&tg);
        let spec = forward_transform(&CausalSignal::zeros(tg), &fg).unwrap();
        assert!(spec.values().iter().all(|v| v.norm() == 0.0));
        let back = inverse_transform(&spec, &tg).unwrap();
        assert!(back.signal.values().iter().all(|v| *v == 0.0));
        assert_eq!(laplace_at(&CausalSignal::zeros(tg), Complex64::new(1.0, 2.0)).unwrap().norm(), 0.0);
    }

    #[test]
    fn aliasing_is_a_configuration_error() {
        let tg = TimeGrid::new(0.1, 100).unwrap();
        let fg = FrequencyGrid::new(1.0, 101).unwrap(); // ω_max = 50 > π/0.1
        assert!(matches!(
            forward_transform(&CausalSignal::zeros(tg), &fg),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn laplace_rejects_left_half_plane() {
        let tg = TimeGrid::new(0.1, 10).unwrap();
        assert!(laplace_at(&CausalSignal::zeros(tg), Complex64::new(-0.1, 0.0)).is_err());
    }

    #[test]
    fn laplace_of_decaying_exponential() {
        let tg = TimeGrid::new(1e-3, 40_001).unwrap();
        let v = CausalSignal::from_fn(tg, |t| (-t).exp());
        let got = laplace_at(&v, Complex64::new(1.0, 0.0)).unwrap();
        let exact = 0.5 * INV_SQRT_2PI;
        assert!((got.re - exact).abs() < 1e-7, "{got} vs {exact}");
        assert!((exact - 0.19947).abs() < 1e-5);
    }

    #[test]
    fn asymmetric_spectrum_is_rejected() {
        let fg = FrequencyGrid::new(0.1, 11).unwrap();
        let spec = Spectrum::from_fn(fg, |w| Complex64::new(w, 0.0));
        let tg = TimeGrid::new(0.1, 10).unwrap();
        assert!(matches!(inverse_transform(&spec, &tg), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn direct_and_fft_paths_agree() {
        let tg = TimeGrid::new(0.05, 301).unwrap();
        let g = Builtin::ExpSin { frequency: 2.0 }.sample(tg);
        let matched = FrequencyGrid::matched(&tg);
        let fft = forward_transform(&g, &matched).unwrap();
        // same frequencies, but m slightly off the FFT relation forces the direct sum
        let off = FrequencyGrid::new(matched.dw() * (1.0 + 1e-6), matched.len()).unwrap();
        let direct = forward_transform(&g, &off).unwrap();
        let err = fft
            .values()
            .iter()
            .zip(direct.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-4 * fft.max_abs(), "{err}");

        let seq = forward_transform_with(&g, &off, Execution::Sequential).unwrap();
        assert_eq!(seq, direct);
    }
}
