//! Goodness-of-fit and quadrature helpers for the acceptance target in `tests/acceptance.rs`.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson χ² p-value and the number of bins used. Bins are merged left to right until each
/// expected count reaches 5; a short remainder joins the last bin.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> (f64, usize) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, e) in observed.iter().zip(expected) {
        o_acc += *o as f64;
        e_acc += e;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        if let (Some(o), Some(e)) = (obs.last_mut(), exp.last_mut()) {
            *o += o_acc;
            *e += e_acc;
        }
    }
    if obs.len() < 2 {
        return (f64::NAN, obs.len());
    }
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = obs.len() - 1;
    (1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat), obs.len())
}

/// `∫ f` over `[lo, hi]` by composite Simpson with 64 panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 64;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
