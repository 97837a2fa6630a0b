//! Closed-loop dynamics of the droop-controlled converter network.
//!
//! The per-node control law, written on the complex voltage phasor, is
//!
//! ```text
//! dv_k/dt = j*w0*v_k + eta*e^{j*phi} (sigma*_k v_k - i_k) + eta*alpha*Phi_k(v) v_k
//! ```
//!
//! with output current `i = (Y + diag(shunts)) v`. Substituting the current
//! and absorbing the shunt admittances into the power setpoints
//! (`sigma*_k - shunt_k`, the shunt draws power proportional to `v_k`, so it
//! shifts the diagonal gain rather than the Laplacian) gives the compact
//! closed loop
//!
//! ```text
//! dv/dt = A v + eta*alpha*Phi(v) v
//! A     = j*w0*I + eta*e^{j*phi} (K - Y),   K = diag(sigma*_k - shunt_k)
//! ```
//!
//! `A` is complex symmetric because `Y` is. All diagnostics (power flow,
//! complex frequency, complex angle) live here next to the vector field.

use crate::net::NetworkModel;
use crate::{CMatrix, CVector, Error, RVector, Result, C64};

/// Scale-independent tolerance for the rotational-symmetry self-check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Control gains shared by every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlGains {
    /// Synchronization gain, strictly positive, 1/s per unit admittance.
    pub eta: f64,
    /// Amplitude-regulation gain, nonnegative.
    pub alpha: f64,
    /// Nominal angular frequency in rad/s.
    pub omega0: f64,
    /// Rotation angle in `[0, pi/2]` matching the network impedance angle.
    pub phi: f64,
}

impl ControlGains {
    pub fn new(eta: f64, alpha: f64, omega0: f64, phi: f64) -> Result<Self> {
        let g = ControlGains {
            eta,
            alpha,
            omega0,
            phi,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gains.eta must be strictly positive (got {})",
                self.eta
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gains.alpha must be nonnegative (got {})",
                self.alpha
            )));
        }
        if !self.omega0.is_finite() {
            return Err(Error::InvalidParameter(
                "gains.omega0 must be finite".into(),
            ));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.phi) {
            return Err(Error::InvalidParameter(format!(
                "gains.phi must lie in [0, pi/2] (got {})",
                self.phi
            )));
        }
        Ok(())
    }

    /// The unit phasor `e^{j*phi}`.
    pub fn rotation(&self) -> C64 {
        C64::from_polar(1.0, self.phi)
    }
}

/// Per-node power and voltage setpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Setpoints {
    pub p_star: RVector,
    pub q_star: RVector,
    pub v_star: RVector,
}

impl Setpoints {
    pub fn new(p_star: RVector, q_star: RVector, v_star: RVector) -> Result<Self> {
        let sp = Setpoints {
            p_star,
            q_star,
            v_star,
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.v_star.len();
        if self.p_star.len() != n {
            return Err(Error::DimensionMismatch {
                context: "p_star",
                expected: n,
                got: self.p_star.len(),
            });
        }
        if self.q_star.len() != n {
            return Err(Error::DimensionMismatch {
                context: "q_star",
                expected: n,
                got: self.q_star.len(),
            });
        }
        for (k, &v) in self.v_star.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ZeroVoltageSetpoint { node: k, value: v });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.v_star.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_star.len() == 0
    }

    /// Rescale `v_star` by `factor` and `p_star`, `q_star` by `factor^2`.
    ///
    /// This keeps the normalized power setpoints (and with them the system
    /// matrix and its spectrum) fixed while moving the voltage profile.
    pub fn scale_v_star(&mut self, factor: f64) -> Result<()> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "voltage scale factor must be strictly positive (got {factor})"
            )));
        }
        self.v_star *= factor;
        self.p_star *= factor * factor;
        self.q_star *= factor * factor;
        Ok(())
    }
}

/// Conjugated normalized power setpoints `sigma*_k = (p*_k - j q*_k)/v*_k^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSetpoints(pub CVector);

/// Normalize the raw `(p*, q*, v*)` setpoints.
pub fn normalize_setpoints(sp: &Setpoints) -> Result<NormalizedSetpoints> {
    sp.validate()?;
    let n = sp.len();
    let mut sigma = CVector::zeros(n);
    for k in 0..n {
        let v2 = sp.v_star[k] * sp.v_star[k];
        sigma[k] = C64::new(sp.p_star[k] / v2, -sp.q_star[k] / v2);
    }
    Ok(NormalizedSetpoints(sigma))
}

/// Assembled closed-loop system matrix with its ingredients.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    /// `A = j*w0*I + eta*e^{j*phi} (K - Y)`, complex symmetric.
    pub a: CMatrix,
    /// Diagonal of `K`: shunt-corrected normalized power setpoints.
    pub k_diag: CVector,
    pub gains: ControlGains,
    /// Voltage setpoints, kept for the amplitude term `Phi`.
    pub v_star: RVector,
}

impl SystemMatrix {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Amplitude mismatch `Phi_k(v) = (v*_k^2 - |v_k|^2)/v*_k^2`.
    pub fn phi_diag(&self, v: &CVector) -> RVector {
        RVector::from_fn(self.n(), |k, _| {
            let vs2 = self.v_star[k] * self.v_star[k];
            (vs2 - v[k].norm_sqr()) / vs2
        })
    }
}

/// Build the closed-loop matrix `A` for a network, setpoints and gains.
pub fn build_system_matrix(
    net: &NetworkModel,
    sp: &Setpoints,
    gains: &ControlGains,
) -> Result<SystemMatrix> {
    gains.validate()?;
    let sigma = normalize_setpoints(sp)?.0;
    if sigma.len() != net.n {
        return Err(Error::DimensionMismatch {
            context: "setpoints vs network",
            expected: net.n,
            got: sigma.len(),
        });
    }
    let n = net.n;
    let rot = gains.rotation();
    let k_diag = CVector::from_fn(n, |k, _| sigma[k] - net.shunts[k]);
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let off = rot * (-net.y[(i, j)]) * gains.eta;
            a[(i, j)] = off;
            a[(j, i)] = off;
        }
        a[(i, i)] = C64::new(0.0, gains.omega0) + rot * (k_diag[i] - net.y[(i, i)]) * gains.eta;
    }
    Ok(SystemMatrix {
        a,
        k_diag,
        gains: *gains,
        v_star: sp.v_star.clone(),
    })
}

/// Closed-loop vector field `A v + eta*alpha*Phi(v) v`.
pub fn dvoc_rhs(sys: &SystemMatrix, v: &CVector) -> CVector {
    debug_assert_eq!(v.len(), sys.n());
    let mut out = &sys.a * v;
    let ea = sys.gains.eta * sys.gains.alpha;
    if ea != 0.0 {
        for k in 0..sys.n() {
            let vs2 = sys.v_star[k] * sys.v_star[k];
            let phi_k = (vs2 - v[k].norm_sqr()) / vs2;
            out[k] += v[k] * (ea * phi_k);
        }
    }
    out
}

/// Verify the rotational symmetry `rhs(e^{j psi} v) = e^{j psi} rhs(v)`.
///
/// Holds structurally for the closed loop (the vector field commutes with
/// global phase rotation); exposed as a runtime self-check.
pub fn rotational_symmetry_check(sys: &SystemMatrix, v: &CVector, psi: f64) -> bool {
    let rot = C64::from_polar(1.0, psi);
    let lhs = dvoc_rhs(sys, &v.map(|z| z * rot));
    let rhs = dvoc_rhs(sys, v).map(|z| z * rot);
    let scale = rhs.norm().max(1e-300);
    (lhs - rhs).norm() <= SYMMETRY_TOL * scale
}

/// Nodal power flow for a voltage profile.
///
/// Returns `(s, sigma_bar)` where `s_k = sum_l conj(Y_kl) v_k conj(v_l)` is
/// the complex power injected at node `k` (using the full admittance,
/// shunts included) and `sigma_bar_k = conj(s_k)/|v_k|^2` its normalized
/// conjugate, which equals `sum_l Y_kl v_l / v_k`.
pub fn power_flow(net: &NetworkModel, v: &CVector) -> Result<(CVector, CVector)> {
    if v.len() != net.n {
        return Err(Error::DimensionMismatch {
            context: "voltage vector",
            expected: net.n,
            got: v.len(),
        });
    }
    for (k, z) in v.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            return Err(Error::ZeroVoltage { node: k });
        }
    }
    let y_full = net.full_admittance();
    let n = net.n;
    let mut s = CVector::zeros(n);
    for k in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..n {
            acc += y_full[(k, l)].conj() * v[l].conj();
        }
        s[k] = v[k] * acc;
    }
    let sigma_bar = CVector::from_fn(n, |k, _| s[k].conj() / v[k].norm_sqr());
    Ok((s, sigma_bar))
}

/// Complex frequency `varpi_k = (dv_k/dt) / v_k` along the closed loop.
///
/// Computed from the analytic vector field, never by differencing samples.
/// The real part is the normalized amplitude rate, the imaginary part the
/// instantaneous angular frequency.
pub fn complex_frequency(sys: &SystemMatrix, v: &CVector) -> Result<CVector> {
    for (k, z) in v.iter().enumerate() {
        if z.norm_sqr() == 0.0 {
            return Err(Error::ZeroVoltage { node: k });
        }
    }
    let rhs = dvoc_rhs(sys, v);
    Ok(CVector::from_fn(v.len(), |k, _| rhs[k] / v[k]))
}

/// Complex angle `theta_k = ln|v_k| + j arg(v_k)` with phase unwrapping.
///
/// `prev` supplies the previous unwrapped angles; the imaginary part is
/// shifted by the multiple of `2 pi` closest to them (nearest-branch rule).
/// Without `prev` the principal branch `(-pi, pi]` is used.
pub fn to_complex_angle(v: &CVector, prev: Option<&RVector>) -> Result<CVector> {
    use std::f64::consts::PI;
    if let Some(p) = prev {
        if p.len() != v.len() {
            return Err(Error::DimensionMismatch {
                context: "previous angles",
                expected: v.len(),
                got: p.len(),
            });
        }
    }
    let mut out = CVector::zeros(v.len());
    for k in 0..v.len() {
        let m = v[k].norm();
        if m == 0.0 {
            return Err(Error::ZeroVoltage { node: k });
        }
        let mut theta = v[k].arg();
        if theta <= -PI {
            theta = PI;
        }
        if let Some(p) = prev {
            theta += 2.0 * PI * ((p[k] - theta) / (2.0 * PI)).round();
        }
        out[k] = C64::new(m.ln(), theta);
    }
    Ok(out)
}
