//! Frequency-domain solver for the inverse boundary-value problem
//!
//! ```text
//! a u_t + u_xx + b u_x + c u = 0,   x > 0, t > 0
//! u(x, 0) = 0
//! k0 u(0, t) + k1 u_x(0, t) = g(t)
//! ```
//!
//! together with the first-passage machinery of the killed drifted Brownian
//! motion `y(t) = a0 + beta t + sigma w(t)` that is dual to it.
//!
//! Modules:
//!
//! - [`signal`]: causal sampled inputs, the class of admissible inputs and the W¹₂ norm.
//! - [`spectral`]: unitary Fourier transform on a centred odd frequency grid and Laplace quadrature.
//! - [`symbolkit`]: coefficient admissibility, characteristic roots and sup bounds on the imaginary axis.
//! - [`solver`]: the decaying-mode reconstruction, field norms, residuals, the exponential
//!   shift and a Crank–Nicolson cross-check.
//! - [`stochastic`]: bridge-corrected Monte Carlo, closed-form densities and the duality check.
//!
//! Data-parallel loops go through [`Execution`]; with the `parallel` feature disabled every
//! loop runs sequentially and results are bit-identical either way.

pub mod error;
pub mod exec;
pub mod signal;
pub mod solver;
pub mod spectral;
pub mod stochastic;
pub mod symbolkit;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
