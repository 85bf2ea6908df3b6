//! Coefficient admissibility and the characteristic roots of
//! `λ² + bλ + (c + a p) = 0`.
//!
//! The roots are `λ₁ = -b/2 - s`, `λ₂ = -b/2 + s` with `s = √(μ - a p)`,
//! `μ = b²/4 - c`, taken on the principal branch (`Re s ≥ 0`). On the branch cut
//! (`μ - a p` real and negative) the value is the limit from `Im(μ - a p) → 0⁻`,
//! i.e. `s = -i √|μ - a p|`; for `p = 0` this is the `ω → 0⁺` limit along the
//! imaginary axis.
//!
//! Note that the cut is crossed by the positive real `p` axis, so the roots are
//! continuous along `iℝ \ {0}` and in the open quadrants of `Re p > 0`, but jump
//! across `p ∈ (0, ∞)`.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::exec::Execution;
use crate::spectral::FrequencyGrid;

/// Threshold below which `|k0 + k1 λ₁|` is treated as a degenerate boundary operator.
pub const DEGENERACY_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k0: f64,
    pub k1: f64,
}

impl CoefficientSet {
    pub fn new(a: f64, b: f64, c: f64, k0: f64, k1: f64) -> Self {
        CoefficientSet { a, b, c, k0, k1 }
    }

    /// `μ = b²/4 - c`.
    pub fn mu(&self) -> f64 {
        0.25 * self.b * self.b - self.c
    }

    /// Same operator with `c` replaced by `c + m`.
    pub fn shifted(&self, m: f64) -> Self {
        CoefficientSet { c: self.c + m, ..*self }
    }

    pub fn is_strict(&self) -> bool {
        check_admissible(self) == Admissibility::Strict
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Admissibility {
    /// `μ < 0`: the unshifted problem can be solved directly.
    Strict,
    /// Sign conditions hold but `μ ≥ 0`; any exponential shift `M > m_min` works.
    NeedsShift { m_min: f64 },
    Rejected(String),
}

pub fn check_admissible(coeffs: &CoefficientSet) -> Admissibility {
    let CoefficientSet { a, b, k0, k1, .. } = *coeffs;
    let all_finite = [a, b, coeffs.c, k0, k1].iter().all(|v| v.is_finite());
    if !all_finite {
        return Admissibility::Rejected("coefficients must be finite".into());
    }
    if a <= 0.0 {
        return Admissibility::Rejected(format!("a = {a} must be positive"));
    }
    if b <= 0.0 {
        return Admissibility::Rejected(format!("b = {b} must be positive"));
    }
    if k0 * k0 + k1 * k1 == 0.0 {
        return Admissibility::Rejected("k0² + k1² = 0: no boundary condition".into());
    }
    if k0 * k1 > 0.0 {
        return Admissibility::Rejected("k0·k1 > 0".into());
    }
    let mu = coeffs.mu();
    if mu < 0.0 {
        Admissibility::Strict
    } else {
        Admissibility::NeedsShift { m_min: mu }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootPair {
    pub p: Complex64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

impl RootPair {
    /// `√(μ - a p)` on the chosen branch.
    pub fn sqrt_disc(&self) -> Complex64 {
        (self.lambda2 - self.lambda1) * 0.5
    }
}

/// Principal square root, with the negative real axis mapped to `-i√|z|`.
pub(crate) fn branch_sqrt(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(0.0, -(-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

pub fn roots_at(coeffs: &CoefficientSet, p: Complex64) -> Result<RootPair> {
    if !(p.re >= 0.0) {
        bail!(Domain, "roots are defined for Re p ≥ 0, got p = {p}");
    }
    Ok(roots_unchecked(coeffs, p))
}

pub(crate) fn roots_unchecked(coeffs: &CoefficientSet, p: Complex64) -> RootPair {
    let s = branch_sqrt(Complex64::new(coeffs.mu(), 0.0) - p * coeffs.a);
    let half_b = 0.5 * coeffs.b;
    RootPair {
        p,
        lambda1: Complex64::new(-half_b, 0.0) - s,
        lambda2: Complex64::new(-half_b, 0.0) + s,
    }
}

/// `λ₁(iω)`.
pub(crate) fn lambda1_on_axis(coeffs: &CoefficientSet, omega: f64) -> Complex64 {
    roots_unchecked(coeffs, Complex64::new(0.0, omega)).lambda1
}

/// Suprema over the sampled imaginary axis of the moduli entering the stability constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardyBounds {
    /// `sup |1/(λ₁ - λ₂)|`
    pub inv_diff: f64,
    /// `sup |λ₁/(λ₁ - λ₂)|`
    pub l1_over_diff: f64,
    /// `sup |λ₂/(λ₁ - λ₂)|`
    pub l2_over_diff: f64,
    /// `sup |1/(k0 + k1 λ₁)|`
    pub inv_k: f64,
    /// `sup |λ₁/(k0 + k1 λ₁)|`, weighted by `(1 + |ω|)^{-1/2}` when `k1 = 0`.
    pub l1_over_k_weighted: f64,
    pub n_total: f64,
}

impl HardyBounds {
    pub fn to_kv(&self) -> String {
        format!(
            "inv_diff = {}\nl1_over_diff = {}\nl2_over_diff = {}\ninv_k = {}\nl1_over_k_weighted = {}\nn_total = {}\n",
            self.inv_diff, self.l1_over_diff, self.l2_over_diff, self.inv_k, self.l1_over_k_weighted, self.n_total
        )
    }
}

pub fn hardy_bounds(coeffs: &CoefficientSet, fgrid: &FrequencyGrid) -> Result<HardyBounds> {
    hardy_bounds_with(coeffs, fgrid, Execution::default())
}

pub fn hardy_bounds_with(
    coeffs: &CoefficientSet,
    fgrid: &FrequencyGrid,
    exec: Execution,
) -> Result<HardyBounds> {
    if !coeffs.is_strict() {
        bail!(
            Admissibility,
            "sup bounds need strictly admissible coefficients, got {:?}",
            check_admissible(coeffs)
        );
    }
    let weighted = coeffs.k1 == 0.0;
    let samples = exec.map(fgrid.len(), |i| {
        let w = fgrid.omega(i);
        let r = roots_unchecked(coeffs, Complex64::new(0.0, w));
        let diff = r.lambda1 - r.lambda2;
        let k = r.lambda1 * coeffs.k1 + coeffs.k0;
        let kn = k.norm();
        let mut last = r.lambda1.norm() / kn;
        if weighted {
            last /= (1.0 + w.abs()).sqrt();
        }
        (
            [
                1.0 / diff.norm(),
                r.lambda1.norm() / diff.norm(),
                r.lambda2.norm() / diff.norm(),
                1.0 / kn,
                last,
            ],
            kn,
            w,
        )
    });
    let mut sup = [0.0_f64; 5];
    for (vals, kn, w) in &samples {
        if *kn < DEGENERACY_TOL {
            bail!(Degenerate, "|k0 + k1 λ₁(iω)| = {kn:.3e} at ω = {w}");
        }
        for (s, v) in sup.iter_mut().zip(vals) {
            *s = s.max(*v);
        }
    }
    Ok(HardyBounds {
        inv_diff: sup[0],
        l1_over_diff: sup[1],
        l2_over_diff: sup[2],
        inv_k: sup[3],
        l1_over_k_weighted: sup[4],
        n_total: sup.iter().sum(),
    })
}

/// Smallest `ω* ≥ 0` with `Re λ₂(iω) ≥ δ` for all `|ω| ≥ ω*` (strict coefficients).
///
/// `Re √z = √((|z| + Re z)/2)`, so `Re λ₂(iω) = δ` solves in closed form.
pub fn decay_threshold(coeffs: &CoefficientSet, delta: f64) -> f64 {
    let r = delta + 0.5 * coeffs.b;
    if r <= 0.0 {
        return 0.0;
    }
    let mu = coeffs.mu();
    let modulus = 2.0 * r * r - mu;
    let w2 = (modulus * modulus - mu * mu).max(0.0);
    w2.sqrt() / coeffs.a
}

/// Dumps `omega,re_l1,im_l1,re_l2,im_l2` over the grid.
pub fn write_roots_csv<W: Write>(
    coeffs: &CoefficientSet,
    fgrid: &FrequencyGrid,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["omega", "re_l1", "im_l1", "re_l2", "im_l2"])?;
    for omega in fgrid.omegas() {
        let r = roots_unchecked(coeffs, Complex64::new(0.0, omega));
        w.write_record([
            omega.to_string(),
            r.lambda1.re.to_string(),
            r.lambda1.im.to_string(),
            r.lambda2.re.to_string(),
            r.lambda2.im.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn verdicts() {
        assert_eq!(check_admissible(&CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0)), Admissibility::Strict);
        assert_eq!(
            check_admissible(&CoefficientSet::new(1.0, 2.0, 0.0, 1.0, 0.0)),
            Admissibility::NeedsShift { m_min: 1.0 }
        );
        match check_admissible(&CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 1.0)) {
            Admissibility::Rejected(r) => assert!(r.contains("k0·k1 > 0")),
            v => panic!("{v:?}"),
        }
        for bad in [
            CoefficientSet::new(0.0, 1.0, 1.0, 1.0, 0.0),
            CoefficientSet::new(1.0, -1.0, 1.0, 1.0, 0.0),
            CoefficientSet::new(1.0, 1.0, 1.0, 0.0, 0.0),
        ] {
            assert!(matches!(check_admissible(&bad), Admissibility::Rejected(_)));
        }
        // k0·k1 < 0 is allowed
        assert_eq!(check_admissible(&CoefficientSet::new(1.0, 1.0, 1.0, 1.0, -2.0)), Admissibility::Strict);
    }

    #[test]
    fn spot_value_at_i() {
        let k = CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let r = roots_at(&k, c(0.0, 1.0)).unwrap();
        // (0.5 - i)² = -0.75 - i
        assert_eq!(c(0.5, -1.0) * c(0.5, -1.0), c(-0.75, -1.0));
        assert!((r.sqrt_disc() - c(0.5, -1.0)).norm() < 1e-15);
        assert!((r.lambda1 - c(-1.0, 1.0)).norm() < 1e-15);
        assert!((r.lambda2 - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn cut_value_at_origin() {
        let k = CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let r = roots_at(&k, c(0.0, 0.0)).unwrap();
        let s = 0.75_f64.sqrt();
        assert!((r.sqrt_disc() - c(0.0, -s)).norm() < 1e-15);
        // agrees with the ω → 0⁺ limit
        let near = roots_at(&k, c(0.0, 1e-9)).unwrap();
        assert!((near.lambda1 - r.lambda1).norm() < 1e-8);
        assert!(roots_at(&k, c(-1e-3, 1.0)).is_err());
    }

    #[test]
    fn hardy_for_pure_neumann() {
        // k0 = 0, k1 = 1: |1/λ₁| ≤ 2/b
        let k = CoefficientSet::new(1.0, 1.0, 1.0, 0.0, 1.0);
        let fg = FrequencyGrid::new(0.01, 200_001).unwrap();
        let h = hardy_bounds(&k, &fg).unwrap();
        assert!(h.inv_k <= 2.0 + 1e-12, "{}", h.inv_k);
    }

    #[test]
    fn hardy_inv_diff_attained_at_zero() {
        let k = CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let fg = FrequencyGrid::new(0.01, 20_001).unwrap();
        let h = hardy_bounds(&k, &fg).unwrap();
        let expect = 1.0 / (2.0 * 0.75_f64.sqrt());
        assert!((h.inv_diff - expect).abs() < 1e-12);
        assert!((expect - 0.5774).abs() < 1e-4);
        assert!(h.n_total.is_finite());
        let sum = h.inv_diff + h.l1_over_diff + h.l2_over_diff + h.inv_k + h.l1_over_k_weighted;
        assert_eq!(h.n_total, sum);
    }

    #[test]
    fn hardy_needs_strict() {
        let k = CoefficientSet::new(1.0, 2.0, 0.0, 1.0, 0.0);
        let fg = FrequencyGrid::new(0.1, 11).unwrap();
        assert!(matches!(hardy_bounds(&k, &fg), Err(crate::Error::Admissibility(_))));
    }

    #[test]
    fn threshold_matches_root() {
        let k = CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0);
        for delta in [0.1, 1.0, 5.0] {
            let w = decay_threshold(&k, delta);
            let at = lambda1_on_axis(&k, w);
            let l2 = Complex64::new(-k.b, 0.0) - at;
            assert!((l2.re - delta).abs() < 1e-9, "{delta}: {}", l2.re);
            assert!((-k.b - lambda1_on_axis(&k, 1.01 * w).re) > delta);
        }
    }

    #[test]
    fn roots_csv_shape() {
        let k = CoefficientSet::new(1.0, 1.0, 1.0, 1.0, 0.0);
        let fg = FrequencyGrid::new(0.5, 5).unwrap();
        let mut buf = Vec::new();
        write_roots_csv(&k, &fg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("omega,re_l1,im_l1,re_l2,im_l2\n"));
    }
}
