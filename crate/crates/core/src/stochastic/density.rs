use std::f64::consts::PI;

use crate::error::{bail, Result};

use super::ProcessParams;

/// `P(τ < ∞)` from `a0`: `e^{-2 a0 beta / sigma²}` for upward drift, one otherwise.
pub fn absorption_probability(a0: f64, params: &ProcessParams) -> Result<f64> {
    if !(a0 >= 0.0) {
        bail!(Domain, "starting point must be ≥ 0, got {a0}");
    }
    if params.beta <= 0.0 {
        return Ok(1.0);
    }
    Ok((-2.0 * a0 * params.beta / (params.sigma * params.sigma)).exp())
}

/// Defective inverse-Gaussian density of `τ` from `a0 > 0`:
/// `a0 / (sigma √(2π t³)) · exp(-(a0 + beta t)² / (2 sigma² t))`.
pub fn fpt_density(a0: f64, params: &ProcessParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        bail!(Domain, "first-passage density needs t > 0, got {t}");
    }
    if !(a0 > 0.0) {
        bail!(Domain, "first-passage density needs a0 > 0, got {a0}");
    }
    let s2 = params.sigma * params.sigma;
    let d = a0 + params.beta * t;
    Ok(a0 / (params.sigma * (2.0 * PI * t * t * t).sqrt()) * (-d * d / (2.0 * s2 * t)).exp())
}

fn gaussian(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// `e^{kappa T} ∫ ρ(a0) q(x, T | a0) da0`, with `q` the absorbed transition density
/// by the method of images. Zero for `x ≤ 0`.
pub fn killed_density(params: &ProcessParams, x: f64, horizon: f64) -> f64 {
    if x <= 0.0 || horizon <= 0.0 {
        return 0.0;
    }
    let s2 = params.sigma * params.sigma;
    let var = s2 * horizon;
    let shift = params.beta * horizon;
    let q = |a0: f64| {
        if a0 <= 0.0 {
            return 0.0;
        }
        gaussian(x - a0 - shift, var) - (-2.0 * a0 * params.beta / s2).exp() * gaussian(x + a0 - shift, var)
    };
    (params.kappa * horizon).exp() * params.rho.expect(q)
}
