//! Modelling and analysis of converter networks under complex droop control.
//!
//! The library works on the complex voltage vector `v` of an `n`-node
//! converter network. Each node runs the complex droop law (dispatchable
//! virtual oscillator control)
//!
//! ```text
//! dv_k/dt = j*w0*v_k + eta*e^{j*phi} * (sigma*_k * v_k - i_k) + eta*alpha*Phi_k(v) * v_k
//! Phi_k(v) = (v*_k^2 - |v_k|^2) / v*_k^2
//! ```
//!
//! where `sigma*_k = (p*_k - j*q*_k)/v*_k^2` is the normalized power
//! setpoint and `i_k` the output current injected into the network. Stacking
//! all nodes against the network admittance gives the closed loop
//!
//! ```text
//! dv/dt = A v + eta*alpha*Phi(v) v,      A = j*w0*I + eta*e^{j*phi} (K - Y)
//! ```
//!
//! with `K = diag(sigma*_k)` and `Y` the (Kron-reduced, shunt-absorbed)
//! Laplacian admittance matrix. Everything the crate does flows from this
//! matrix: parametric certificates for synchronization and stability come
//! from its spectrum, the drooped steady state from its dominant eigenpair,
//! and the simulator integrates the nonlinear closed loop directly.
//!
//! Module map:
//! - [`net`]: admittance assembly, Kron reduction, shunt absorption and the
//!   rotated algebraic connectivity used by the certificates.
//! - [`dynamics`]: setpoint normalization, system matrix assembly, the
//!   closed-loop right-hand side, power flow and complex-frequency output.
//! - [`spectral`]: dominant eigenpair extraction and distances to the
//!   synchronous sets.
//! - [`certify`]: the parametric synchronization/stability checks and the
//!   non-nominal steady-state prediction.
//! - [`lyapunov`]: the Lyapunov function of the certified system, its
//!   analytic decrease rate, and the two quadratic-form inequalities the
//!   stability argument rests on.
//! - [`sim`]: adaptive Runge-Kutta integration through event schedules,
//!   synchronization detection and scenario execution.

pub mod certify;
pub mod dynamics;
mod error;
pub mod lyapunov;
pub mod net;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real vector.
pub type RVector = nalgebra::DVector<f64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
