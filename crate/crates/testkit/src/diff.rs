//! Finite-difference derivative checks.

use cdroop_core::{CVector, C64};

/// Central-difference derivative of the scalar field `f` at `v` in the
/// direction `dir`: `d/ds f(v + s dir)` at `s = 0`.
pub fn directional_derivative(
    f: impl Fn(&CVector) -> f64,
    v: &CVector,
    dir: &CVector,
    eps: f64,
) -> f64 {
    let plus = f(&(v + dir * C64::new(eps, 0.0)));
    let minus = f(&(v - dir * C64::new(eps, 0.0)));
    (plus - minus) / (2.0 * eps)
}
