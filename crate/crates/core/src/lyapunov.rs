//! Lyapunov certificate of the drooped synchronous steady state.
//!
//! For a certified system (stability margin `c > 0`, envelope holding,
//! setpoints consistent) the function
//!
//! ```text
//! V(v) = 1/2 v^H P v
//!      + 1/2 eta alpha alpha1 sum_k ( Re(lambda1)/(eta alpha) v*_k
//!                                     + (v*_k^2 - |v_k|^2)/v*_k )^2
//! ```
//!
//! decreases along every trajectory outside the target set, at the
//! guaranteed rate
//!
//! ```text
//! dV/dt <= -alpha1 ( ||A - lambda1 I|| ||v||_S + ||(Re(lambda1) I + eta alpha Phi) v|| )^2 .
//! ```
//!
//! The decrease argument rests on two quadratic-form inequalities, exposed
//! here as runtime checks so they can be sampled:
//!
//! - amplitude coupling: `v^H (Phi P + P Phi) v <= 2 v^H P v`,
//! - projected contraction: `1/2 v^H P (A^H + A + 2 eta alpha I) P v <= -eta c ||v||_S^2`.

use crate::certify::{consistency_spread, StabilityCertificate, CONSISTENCY_RTOL};
use crate::dynamics::{dvoc_rhs, Setpoints, SystemMatrix};
use crate::spectral::SpectralReport;
use crate::{CMatrix, CVector, Error, RVector, Result, C64};

/// Absolute slack (scaled by `||v||^2`) granted to the lemma inequalities.
pub const LEMMA_SLACK: f64 = 1e-12;

/// Relative slack granted to the decrease bound.
pub const RATE_SLACK: f64 = 1e-9;

/// Everything needed to evaluate the Lyapunov function and its rate.
///
/// Construction fails unless the certificate actually certifies: margin
/// `c > 0`, envelope spreads inside the assumed envelope, and setpoints
/// consistent with the dominant eigenvector. This keeps every context
/// usable: if you hold one, the decrease guarantee applies.
#[derive(Debug, Clone)]
pub struct LyapunovContext {
    pub system: SystemMatrix,
    pub projector: CMatrix,
    pub lambda1: C64,
    pub alpha1: f64,
    pub margin_c: f64,
    pub a_shift_norm: f64,
    pub v_star: RVector,
}

impl LyapunovContext {
    pub fn new(
        system: &SystemMatrix,
        report: &SpectralReport,
        cert: &StabilityCertificate,
        sp: &Setpoints,
    ) -> Result<Self> {
        // The decrease machinery is about the drooped system: the
        // amplitude penalty is weighted by 1/(eta*alpha), so a zero
        // amplitude gain leaves no function to evaluate.
        if !cert.condition3 || !cert.sync.envelope_ok || system.gains.alpha <= 0.0 {
            return Err(Error::ConditionNotCertified);
        }
        let alpha1 = cert.alpha1.ok_or(Error::ConditionNotCertified)?;
        let spread = consistency_spread(report, sp)?;
        if spread > CONSISTENCY_RTOL {
            return Err(Error::InconsistentSetpoints { error: spread });
        }
        if sp.len() != system.n() {
            return Err(Error::DimensionMismatch {
                context: "setpoints vs system",
                expected: system.n(),
                got: sp.len(),
            });
        }
        Ok(LyapunovContext {
            system: system.clone(),
            projector: report.projector(),
            lambda1: report.lambda1,
            alpha1,
            margin_c: cert.margin_c,
            a_shift_norm: cert.a_shift_norm,
            v_star: sp.v_star.clone(),
        })
    }

    fn eta_alpha(&self) -> f64 {
        self.system.gains.eta * self.system.gains.alpha
    }

    /// The amplitude summand `Re(lambda1)/(eta alpha) v*_k + (v*_k^2 - |v_k|^2)/v*_k`.
    fn amplitude_residual(&self, v: &CVector, k: usize) -> f64 {
        let vs = self.v_star[k];
        self.lambda1.re / self.eta_alpha() * vs + (vs * vs - v[k].norm_sqr()) / vs
    }
}

/// Evaluate the Lyapunov function.
pub fn lyapunov_value(ctx: &LyapunovContext, v: &CVector) -> f64 {
    let w = &ctx.projector * v;
    let mut quad = 0.0;
    for k in 0..v.len() {
        let r = ctx.amplitude_residual(v, k);
        quad += r * r;
    }
    0.5 * v.dotc(&w).re + 0.5 * ctx.eta_alpha() * ctx.alpha1 * quad
}

/// Analytic time derivative of `V` along the closed loop, with its
/// certified upper bound. Returns `(v_dot, bound)`.
pub fn lyapunov_rate(ctx: &LyapunovContext, v: &CVector) -> (f64, f64) {
    let vdot = dvoc_rhs(&ctx.system, v);
    let w = &ctx.projector * v;
    // d/dt (1/2 v^H P v) = Re(v^H P dv/dt); P is Hermitian.
    let mut rate = ctx.projector_rate(&w, &vdot);
    let ea = ctx.eta_alpha();
    for k in 0..v.len() {
        // d/dt amplitude_residual_k = -2 Re(dv_k/dt conj(v_k)) / v*_k
        let r = ctx.amplitude_residual(v, k);
        rate -= ea * ctx.alpha1 * r * 2.0 * (vdot[k] * v[k].conj()).re / ctx.v_star[k];
    }

    let dist_s = w.norm();
    let mut reg = 0.0;
    for k in 0..v.len() {
        let vs2 = ctx.v_star[k] * ctx.v_star[k];
        let phi_k = (vs2 - v[k].norm_sqr()) / vs2;
        let g = (ctx.lambda1.re + ea * phi_k) * v[k].norm();
        reg += g * g;
    }
    let bound_root = ctx.a_shift_norm * dist_s + reg.sqrt();
    (rate, -ctx.alpha1 * bound_root * bound_root)
}

impl LyapunovContext {
    fn projector_rate(&self, w: &CVector, vdot: &CVector) -> f64 {
        // Re(v^H P vdot) = Re((P v)^H vdot) since P = P^H.
        w.dotc(vdot).re
    }
}

/// Amplitude-coupling inequality `v^H (Phi P + P Phi) v <= 2 v^H P v`.
///
/// Requires setpoints consistent with the projector's eigenvector (the
/// inequality is a property of that alignment, not of arbitrary `P`).
/// Evaluated with slack `LEMMA_SLACK * ||v||^2`.
pub fn lemma1_check(
    v: &CVector,
    p: &CMatrix,
    sp: &Setpoints,
    report: &SpectralReport,
) -> Result<bool> {
    let spread = consistency_spread(report, sp)?;
    if spread > CONSISTENCY_RTOL {
        return Err(Error::InconsistentSetpoints { error: spread });
    }
    if v.len() != sp.len() {
        return Err(Error::DimensionMismatch {
            context: "state vs setpoints",
            expected: sp.len(),
            got: v.len(),
        });
    }
    let w = p * v;
    // v^H Phi P v + v^H P Phi v = 2 Re((Phi v)^H (P v)) with real diagonal Phi.
    let phi_v = CVector::from_fn(v.len(), |k, _| {
        let vs2 = sp.v_star[k] * sp.v_star[k];
        v[k] * ((vs2 - v[k].norm_sqr()) / vs2)
    });
    let lhs = 2.0 * phi_v.dotc(&w).re;
    let rhs = 2.0 * v.dotc(&w).re + LEMMA_SLACK * v.norm_squared();
    Ok(lhs <= rhs)
}

/// Projected-contraction inequality
/// `1/2 v^H P (A^H + A + 2 eta alpha I) P v <= -eta c ||v||_S^2`.
///
/// `c` must be the positive stability margin of the certified system.
/// Evaluated with slack `LEMMA_SLACK * ||v||^2`.
pub fn lemma2_check(v: &CVector, sys: &SystemMatrix, p: &CMatrix, c: f64) -> bool {
    let w = p * v;
    let aw = &sys.a * &w;
    let ea = sys.gains.eta * sys.gains.alpha;
    // 1/2 w^H (A^H + A) w = Re(w^H A w).
    let lhs = w.dotc(&aw).re + ea * w.norm_squared();
    let rhs = -sys.gains.eta * c * w.norm_squared() + LEMMA_SLACK * v.norm_squared();
    lhs <= rhs
}
