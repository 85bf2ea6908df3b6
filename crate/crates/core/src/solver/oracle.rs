use crate::error::{bail, Result};
use crate::signal::CausalSignal;
use crate::symbolkit::{check_admissible, Admissibility, CoefficientSet};

use super::field::Profile;

/// Runs the problem backwards from `u(·, T) = v_star` to `t = 0`.
///
/// With `s = T - t` the equation becomes the forward problem
/// `v_s = (v_xx + b v_x + c v) / a`, with boundary data `g(T - s)` and `v = 0` at the far
/// end of `v_star`'s grid. Crank–Nicolson in `s` with step `dt` of `g`, centred differences
/// in `x`; a Robin condition (`k1 ≠ 0`) uses a ghost node.
pub fn fd_forward_oracle(
    v_star: &Profile,
    g: &CausalSignal,
    coeffs: &CoefficientSet,
    horizon: f64,
) -> Result<Profile> {
    match check_admissible(coeffs) {
        Admissibility::Strict => {}
        Admissibility::NeedsShift { .. } => bail!(Admissibility, "the oracle needs b²/4 < c"),
        Admissibility::Rejected(reason) => bail!(Admissibility, "{reason}"),
    }
    let ds = g.grid().dt();
    let Some(steps) = g.grid().index_of(horizon) else {
        bail!(Input, "T = {horizon} is not on the time grid of g");
    };
    let CoefficientSet { a, b, c, k0, k1 } = *coeffs;
    let grid = v_star.grid;
    let dx = grid.dx();
    let nx = grid.len();

    let lo = (1.0 / (dx * dx) - b / (2.0 * dx)) / a;
    let di = (-2.0 / (dx * dx) + c) / a;
    let up = (1.0 / (dx * dx) + b / (2.0 * dx)) / a;

    let robin = k1 != 0.0;
    // unknowns are v[first..nx-1]; v[nx-1] = 0
    let first = if robin { 0 } else { 1 };
    let m = nx - 1 - first;
    let diag0 = if robin { di + lo * 2.0 * dx * k0 / k1 } else { di };
    let up0 = if robin { lo + up } else { up };
    // boundary forcing on the first unknown per unit of g
    let forcing = if robin { -lo * 2.0 * dx / k1 } else { lo / k0 };

    let apply = |v: &[f64], out: &mut [f64]| {
        for j in 0..m {
            let (l, d, u) = if j == 0 { (0.0, diag0, up0) } else { (lo, di, up) };
            let left = if j > 0 { v[j - 1] } else { 0.0 };
            let right = if j + 1 < m { v[j + 1] } else { 0.0 };
            out[j] = l * left + d * v[j] + u * right;
        }
    };

    let h = 0.5 * ds;
    let sub: Vec<f64> = (0..m).map(|j| if j == 0 { 0.0 } else { -h * lo }).collect();
    let sup: Vec<f64> = (0..m).map(|j| if j == 0 { -h * up0 } else { -h * up }).collect();
    let dia: Vec<f64> = (0..m).map(|j| 1.0 - h * if j == 0 { diag0 } else { di }).collect();

    let bound = {
        let sup_g = g.max_abs();
        10.0 * (c.abs() * horizon / a).exp() * (v_star.l2_norm() + sup_g * grid.extent().sqrt())
    };

    let mut v: Vec<f64> = v_star.values[first..nx - 1].to_vec();
    let mut av = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    let boundary = |s: f64| g.eval(horizon - s);
    for n in 0..steps {
        let s0 = n as f64 * ds;
        apply(&v, &mut av);
        for j in 0..m {
            rhs[j] = v[j] + h * av[j];
        }
        rhs[0] += h * forcing * (boundary(s0) + boundary(s0 + ds));
        thomas(&sub, &dia, &sup, &mut rhs, &mut scratch);
        std::mem::swap(&mut v, &mut rhs);
        let norm = (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt();
        if !norm.is_finite() || norm > bound {
            bail!(
                Numerical,
                "oracle blew up at s = {}: norm {norm:.3e} exceeds {bound:.3e}",
                (n + 1) as f64 * ds
            );
        }
    }

    let mut values = Vec::with_capacity(nx);
    if !robin {
        values.push(boundary(steps as f64 * ds) / k0);
    }
    values.extend_from_slice(&v);
    values.push(0.0);
    Profile::new(grid, values)
}

/// Solves the tridiagonal system in place; `rhs` becomes the solution.
fn thomas(sub: &[f64], dia: &[f64], sup: &[f64], rhs: &mut [f64], c: &mut [f64]) {
    let m = rhs.len();
    c[0] = sup[0] / dia[0];
    rhs[0] /= dia[0];
    for j in 1..m {
        let denom = dia[j] - sub[j] * c[j - 1];
        c[j] = sup[j] / denom;
        rhs[j] = (rhs[j] - sub[j] * rhs[j - 1]) / denom;
    }
    for j in (0..m - 1).rev() {
        rhs[j] -= c[j] * rhs[j + 1];
    }
}
