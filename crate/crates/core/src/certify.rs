//! Parametric certificates for synchronization and stability.
//!
//! The synchronization check compares the strongest normalized power
//! setpoint against the rotated network connectivity inside an assumed
//! operating envelope (maximum angle spread `delta_bar`, maximum amplitude
//! spread `gamma_bar` across nodes):
//!
//! ```text
//! lhs = max_k Re(e^{j*phi} sigma*_k)
//! rhs = (1 + cos(delta_bar))/2 * (1 - gamma_bar)^2 * lambda2(Re(e^{j*phi} Y))
//! condition1:  lhs < rhs
//! condition3:  lhs + alpha < rhs
//! ```
//!
//! `lambda2` is taken as the algebraic connectivity (second-smallest
//! Laplacian eigenvalue) — the conservative reading; the second-largest
//! eigenvalue is carried alongside in the certificate for comparison. The
//! margin `c = rhs - lhs - alpha` feeds the Lyapunov layer through
//! `alpha1 = eta c / (5 ||A - lambda1 I||^2)`.
//!
//! The envelope is also checked against reality: the angle and amplitude
//! spreads of the dominant eigenvector must lie inside `(delta_bar,
//! gamma_bar)` for the certificate to transfer to the nonlinear system.

use crate::dynamics::{build_system_matrix, normalize_setpoints, ControlGains, Setpoints};
use crate::net::{rotated_laplacian_eigenvalues, NetworkModel};
use crate::spectral::{analyze, analyze_matrix, SpectralReport};
use crate::{CMatrix, CVector, Error, RVector, Result, C64};

/// Relative ratio spread tolerated by the setpoint-consistency check.
pub const CONSISTENCY_RTOL: f64 = 1e-9;

/// Assumed operating envelope for the parametric conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingEnvelope {
    /// Maximum angle difference across nodes, in `[0, pi/2)` rad.
    pub delta_bar: f64,
    /// Maximum relative amplitude deviation across nodes, in `[0, 1)`.
    pub gamma_bar: f64,
}

impl OperatingEnvelope {
    pub fn new(delta_bar: f64, gamma_bar: f64) -> Result<Self> {
        let env = OperatingEnvelope {
            delta_bar,
            gamma_bar,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.delta_bar) {
            return Err(Error::InvalidParameter(format!(
                "envelope.delta_bar must lie in [0, pi/2) (got {})",
                self.delta_bar
            )));
        }
        if !(0.0..1.0).contains(&self.gamma_bar) {
            return Err(Error::InvalidParameter(format!(
                "envelope.gamma_bar must lie in [0, 1) (got {})",
                self.gamma_bar
            )));
        }
        Ok(())
    }

    /// The envelope prefactor `(1 + cos(delta_bar))/2 * (1 - gamma_bar)^2`.
    pub fn prefactor(&self) -> f64 {
        0.5 * (1.0 + self.delta_bar.cos()) * (1.0 - self.gamma_bar) * (1.0 - self.gamma_bar)
    }
}

/// Synchronization-level certificate (gain-independent facts).
#[derive(Debug, Clone)]
pub struct SyncCertificate {
    /// `max_k Re(e^{j*phi} sigma*_k)` over the shunt-corrected setpoints.
    pub lhs_sync: f64,
    /// Envelope prefactor times the rotated algebraic connectivity.
    pub rhs: f64,
    /// `lhs_sync < rhs`.
    pub condition1: bool,
    /// Rotated algebraic connectivity (second-smallest eigenvalue).
    pub lambda2: f64,
    /// Second-largest rotated Laplacian eigenvalue, for comparison.
    pub lambda2_second_largest: f64,
    /// Actual angle spread of the dominant eigenvector, rad.
    pub delta_actual: f64,
    /// Actual relative amplitude spread of the dominant eigenvector.
    pub gamma_actual: f64,
    /// Whether the actual spreads sit inside the assumed envelope.
    pub envelope_ok: bool,
}

/// Full certificate including the gain-dependent stability margin.
#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub sync: SyncCertificate,
    /// `lhs_sync + alpha < rhs`.
    pub condition3: bool,
    /// `rhs - lhs_sync - alpha`; the margin `c` when positive.
    pub margin_c: f64,
    /// `eta c / (5 ||A - lambda1 I||^2)`; present only when `c > 0`.
    pub alpha1: Option<f64>,
    /// `||A - lambda1 I||` (induced 2-norm).
    pub a_shift_norm: f64,
    /// Spectrum of the actual closed-loop matrix.
    pub spectral: SpectralReport,
    /// Steady-state prediction, or why it is unavailable.
    pub predicted: Result<SteadyStatePrediction>,
}

/// Predicted non-nominal synchronous steady state of the drooped system.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStatePrediction {
    /// Synchronous angular frequency `Im(lambda1)`, rad/s.
    pub omega_sync: f64,
    /// Common amplitude factor `sqrt(1 + Re(lambda1)/(eta alpha))`.
    pub amplitude_scale: f64,
    /// Per-node steady amplitudes `v*_k * amplitude_scale`.
    pub v_ss: RVector,
}

/// Gain-independent synchronization check.
///
/// The eigenvector spreads are computed on `e^{j*phi}(K - Y)`: the closed
/// loop's eigenvectors do not depend on `eta` or `omega0`, so the check
/// needs no gains.
pub fn check_condition1(
    net: &NetworkModel,
    sp: &Setpoints,
    env: &OperatingEnvelope,
) -> Result<SyncCertificate> {
    env.validate()?;
    let k_eff = effective_setpoints(net, sp)?;
    let proxy = gain_free_matrix(net, &k_eff);
    let report = analyze_matrix(&proxy)?;
    condition1_from_parts(net, &k_eff, env, &report)
}

fn condition1_from_parts(
    net: &NetworkModel,
    k_eff: &CVector,
    env: &OperatingEnvelope,
    report: &SpectralReport,
) -> Result<SyncCertificate> {
    let rot = C64::from_polar(1.0, net.phi);
    let lhs_sync = k_eff
        .iter()
        .map(|s| (rot * s).re)
        .fold(f64::NEG_INFINITY, f64::max);
    let spectrum = rotated_laplacian_eigenvalues(net)?;
    let rhs = env.prefactor() * spectrum.connectivity;
    let (delta_actual, gamma_actual) = eigenvector_spreads(&report.phi1);
    Ok(SyncCertificate {
        lhs_sync,
        rhs,
        condition1: lhs_sync < rhs,
        lambda2: spectrum.connectivity,
        lambda2_second_largest: spectrum.second_largest,
        delta_actual,
        gamma_actual,
        envelope_ok: delta_actual <= env.delta_bar && gamma_actual <= env.gamma_bar,
    })
}

/// Full stability check for concrete gains.
pub fn check_condition3(
    net: &NetworkModel,
    sp: &Setpoints,
    gains: &ControlGains,
    env: &OperatingEnvelope,
) -> Result<StabilityCertificate> {
    env.validate()?;
    if (gains.phi - net.phi).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "gains.phi ({}) disagrees with the network rotation angle ({})",
            gains.phi, net.phi
        )));
    }
    let sys = build_system_matrix(net, sp, gains)?;
    let spectral = analyze(&sys)?;
    let sync = condition1_from_parts(net, &sys.k_diag, env, &spectral)?;

    let margin_c = sync.rhs - sync.lhs_sync - gains.alpha;
    let condition3 = sync.lhs_sync + gains.alpha < sync.rhs;

    let n = sys.n();
    let mut shifted = sys.a.clone();
    for k in 0..n {
        shifted[(k, k)] -= spectral.lambda1;
    }
    let a_shift_norm = spectral_norm(&shifted);
    let alpha1 =
        (margin_c > 0.0).then(|| gains.eta * margin_c / (5.0 * a_shift_norm * a_shift_norm));

    let predicted = predict_steady_state(&spectral, sp, gains);
    Ok(StabilityCertificate {
        sync,
        condition3,
        margin_c,
        alpha1,
        a_shift_norm,
        spectral,
        predicted,
    })
}

/// Largest singular value via the dense SVD.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0_f64, f64::max)
}

/// Voltage setpoints consistent with the dominant eigenvector:
/// `v*_k = v_ref * |phi_k1| / |phi_ref,1|`.
pub fn consistent_setpoints(phi1: &CVector, reference: usize, v_ref: f64) -> Result<RVector> {
    if reference >= phi1.len() {
        return Err(Error::DimensionMismatch {
            context: "reference node",
            expected: phi1.len(),
            got: reference,
        });
    }
    if !(v_ref > 0.0 && v_ref.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "reference voltage must be strictly positive (got {v_ref})"
        )));
    }
    let max_mod = phi1.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let floor = 1e-12 * max_mod;
    for (k, z) in phi1.iter().enumerate() {
        if z.norm() <= floor {
            return Err(Error::ZeroEigenvectorEntry { node: k });
        }
    }
    let ref_mod = phi1[reference].norm();
    Ok(RVector::from_fn(phi1.len(), |k, _| {
        v_ref * phi1[k].norm() / ref_mod
    }))
}

/// Predict the drooped synchronous steady state from the dominant eigenpair.
///
/// Requires the voltage setpoints to be consistent with `|phi1|` (relative
/// ratio spread below [`CONSISTENCY_RTOL`]) and the amplitude equation
/// `1 + Re(lambda1)/(eta alpha) > 0` to be solvable.
pub fn predict_steady_state(
    report: &SpectralReport,
    sp: &Setpoints,
    gains: &ControlGains,
) -> Result<SteadyStatePrediction> {
    gains.validate()?;
    sp.validate()?;
    if sp.len() != report.phi1.len() {
        return Err(Error::DimensionMismatch {
            context: "setpoints vs eigenvector",
            expected: report.phi1.len(),
            got: sp.len(),
        });
    }
    let ea = gains.eta * gains.alpha;
    if ea == 0.0 {
        return Err(Error::InvalidParameter(
            "steady-state amplitude undefined for alpha = 0".into(),
        ));
    }
    consistency_spread(report, sp).and_then(|spread| {
        if spread > CONSISTENCY_RTOL {
            Err(Error::InconsistentSetpoints { error: spread })
        } else {
            Ok(())
        }
    })?;
    let scale_sq = 1.0 + report.lambda1.re / ea;
    if scale_sq <= 0.0 {
        return Err(Error::IllPosedAmplitude { value: scale_sq });
    }
    let amplitude_scale = scale_sq.sqrt();
    Ok(SteadyStatePrediction {
        omega_sync: report.lambda1.im,
        amplitude_scale,
        v_ss: &sp.v_star * amplitude_scale,
    })
}

/// Relative spread of the ratios `v*_k / |phi_k1|` (zero when consistent).
pub fn consistency_spread(report: &SpectralReport, sp: &Setpoints) -> Result<f64> {
    let max_mod = report.phi1.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let floor = 1e-12 * max_mod;
    let mut rmin = f64::INFINITY;
    let mut rmax = 0.0_f64;
    for k in 0..sp.len() {
        let m = report.phi1[k].norm();
        if m <= floor {
            return Err(Error::ZeroEigenvectorEntry { node: k });
        }
        let r = sp.v_star[k] / m;
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    Ok(rmax / rmin - 1.0)
}

/// A point of the target set `T`: `rho e^{j*psi} phi1`.
pub fn point_on_target(
    report: &SpectralReport,
    sp: &Setpoints,
    gains: &ControlGains,
    psi: f64,
) -> Result<CVector> {
    let spread = consistency_spread(report, sp)?;
    if spread > CONSISTENCY_RTOL {
        return Err(Error::InconsistentSetpoints { error: spread });
    }
    let rho = crate::spectral::target_radius(report, sp, gains)?;
    let mu = C64::from_polar(rho, psi);
    Ok(report.phi1.map(|z| z * mu))
}

fn effective_setpoints(net: &NetworkModel, sp: &Setpoints) -> Result<CVector> {
    let sigma = normalize_setpoints(sp)?.0;
    if sigma.len() != net.n {
        return Err(Error::DimensionMismatch {
            context: "setpoints vs network",
            expected: net.n,
            got: sigma.len(),
        });
    }
    Ok(CVector::from_fn(net.n, |k, _| sigma[k] - net.shunts[k]))
}

fn gain_free_matrix(net: &NetworkModel, k_eff: &CVector) -> CMatrix {
    let rot = C64::from_polar(1.0, net.phi);
    let n = net.n;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rot * (-net.y[(i, j)]);
        }
        m[(i, i)] += rot * k_eff[i];
    }
    m
}

/// Angle and amplitude spreads of an eigenvector across nodes.
fn eigenvector_spreads(phi1: &CVector) -> (f64, f64) {
    let n = phi1.len();
    let mut delta = 0.0_f64;
    let mut mmin = f64::INFINITY;
    let mut mmax = 0.0_f64;
    for k in 0..n {
        let m = phi1[k].norm();
        mmin = mmin.min(m);
        mmax = mmax.max(m);
        for l in (k + 1)..n {
            delta = delta.max((phi1[k] * phi1[l].conj()).arg().abs());
        }
    }
    let gamma = if mmin > 0.0 {
        mmax / mmin - 1.0
    } else {
        f64::INFINITY
    };
    (delta, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{model_from_branches, Branch};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn strong_net(phi: f64) -> NetworkModel {
        let branches = [
            Branch::from_impedance(0, 1, 0.15, 0.35),
            Branch::from_impedance(1, 2, 0.10, 0.40),
            Branch::from_impedance(0, 2, 0.20, 0.30),
        ];
        model_from_branches(3, &branches, &[c(0.0, 0.0); 3], phi).unwrap()
    }

    fn light_setpoints() -> Setpoints {
        Setpoints::new(
            RVector::from_vec(vec![0.10, 0.06, -0.04]),
            RVector::from_vec(vec![0.03, -0.02, 0.05]),
            RVector::from_vec(vec![1.0, 1.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn zero_setpoints_certify_trivially() {
        // With sigma* = 0 the lhs is zero and the rhs strictly positive.
        let net = strong_net(0.8);
        let sp = Setpoints::new(
            RVector::zeros(3),
            RVector::zeros(3),
            RVector::from_vec(vec![1.0; 3]),
        )
        .unwrap();
        let env = OperatingEnvelope::new(std::f64::consts::FRAC_PI_6, 0.2).unwrap();
        let cert = check_condition1(&net, &sp, &env).unwrap();
        assert_eq!(cert.lhs_sync, 0.0);
        assert!(cert.rhs > 0.0);
        assert!(cert.condition1);
        // Uniform (Laplacian kernel) eigenvector: no spread at all.
        assert!(cert.delta_actual < 1e-9);
        assert!(cert.gamma_actual < 1e-9);
        assert!(cert.envelope_ok);
    }

    #[test]
    fn shrinking_envelope_shrinks_rhs() {
        let net = strong_net(0.8);
        let sp = light_setpoints();
        let wide = OperatingEnvelope::new(0.1, 0.05).unwrap();
        let tight = OperatingEnvelope::new(1.2, 0.6).unwrap();
        let c_wide = check_condition1(&net, &sp, &wide).unwrap();
        let c_tight = check_condition1(&net, &sp, &tight).unwrap();
        assert!(c_wide.rhs > c_tight.rhs);
        assert_eq!(c_wide.lambda2, c_tight.lambda2);
    }

    #[test]
    fn overload_breaks_condition1() {
        let net = strong_net(0.8);
        let mut sp = light_setpoints();
        sp.p_star *= 400.0;
        let env = OperatingEnvelope::new(std::f64::consts::FRAC_PI_6, 0.2).unwrap();
        let cert = check_condition1(&net, &sp, &env).unwrap();
        assert!(!cert.condition1);
    }

    #[test]
    fn condition3_needs_room_for_alpha() {
        let net = strong_net(0.8);
        let sp = light_setpoints();
        let env = OperatingEnvelope::new(std::f64::consts::FRAC_PI_6, 0.2).unwrap();
        let modest = ControlGains::new(1.0, 0.2, 1.0, 0.8).unwrap();
        let cert = check_condition3(&net, &sp, &modest, &env).unwrap();
        assert!(cert.sync.condition1);
        assert!(cert.condition3);
        assert!(cert.margin_c > 0.0);
        let a1 = cert.alpha1.unwrap();
        let expect = modest.eta * cert.margin_c / (5.0 * cert.a_shift_norm * cert.a_shift_norm);
        assert!((a1 - expect).abs() < 1e-15 * expect);

        // Inflating alpha beyond the margin kills `condition3` but leaves
        // `condition1` intact.
        let huge = ControlGains::new(1.0, cert.sync.rhs, 1.0, 0.8).unwrap();
        let cert2 = check_condition3(&net, &sp, &huge, &env).unwrap();
        assert!(cert2.sync.condition1);
        assert!(!cert2.condition3);
        assert!(cert2.alpha1.is_none());
    }

    #[test]
    fn conditions_match_between_entry_points() {
        // check_condition1 uses the gain-free proxy; check_condition3 the
        // real closed loop. Shared facts must agree to rounding.
        let net = strong_net(0.8);
        let sp = light_setpoints();
        let env = OperatingEnvelope::new(std::f64::consts::FRAC_PI_6, 0.2).unwrap();
        let c1 = check_condition1(&net, &sp, &env).unwrap();
        let gains = ControlGains::new(3.7, 0.1, 50.0, 0.8).unwrap();
        let c3 = check_condition3(&net, &sp, &gains, &env).unwrap();
        assert!((c1.lhs_sync - c3.sync.lhs_sync).abs() < 1e-13);
        assert!((c1.rhs - c3.sync.rhs).abs() < 1e-13);
        assert!((c1.delta_actual - c3.sync.delta_actual).abs() < 1e-10);
        assert!((c1.gamma_actual - c3.sync.gamma_actual).abs() < 1e-10);
    }

    #[test]
    fn consistent_setpoints_have_zero_spread() {
        let net = strong_net(0.8);
        let sp = light_setpoints();
        let gains = ControlGains::new(2.0, 0.3, 10.0, 0.8).unwrap();
        let sys = build_system_matrix(&net, &sp, &gains).unwrap();
        let rep = analyze(&sys).unwrap();
        let v_star = consistent_setpoints(&rep.phi1, 0, 1.0).unwrap();
        assert_eq!(v_star[0], 1.0);
        // Rebuild setpoints holding sigma* fixed: p, q scale with v*^2.
        let sp2 = Setpoints::new(
            RVector::from_fn(3, |k, _| sp.p_star[k] * v_star[k] * v_star[k]),
            RVector::from_fn(3, |k, _| sp.q_star[k] * v_star[k] * v_star[k]),
            v_star,
        )
        .unwrap();
        let sys2 = build_system_matrix(&net, &sp2, &gains).unwrap();
        let rep2 = analyze(&sys2).unwrap();
        let spread = consistency_spread(&rep2, &sp2).unwrap();
        assert!(spread < CONSISTENCY_RTOL, "spread {spread}");
        let pred = predict_steady_state(&rep2, &sp2, &gains).unwrap();
        assert!(pred.amplitude_scale > 0.0);
        assert_eq!(pred.omega_sync, rep2.lambda1.im);
    }

    #[test]
    fn inconsistent_setpoints_are_rejected() {
        let net = strong_net(0.8);
        let sp = light_setpoints();
        let gains = ControlGains::new(2.0, 0.3, 10.0, 0.8).unwrap();
        let sys = build_system_matrix(&net, &sp, &gains).unwrap();
        let rep = analyze(&sys).unwrap();
        let mut bad = sp.clone();
        bad.v_star[1] *= 1.5;
        match predict_steady_state(&rep, &bad, &gains) {
            Err(Error::InconsistentSetpoints { error }) => assert!(error > 0.3),
            other => panic!("expected InconsistentSetpoints, got {other:?}"),
        }
    }

    #[test]
    fn compatible_rescale_leaves_spectrum_invariant() {
        // v* -> s v*, (p*, q*) -> s^2 (p*, q*) keeps sigma* and therefore
        // lambda1 and the amplitude scale; v_ss scales by s.
        let net = strong_net(0.8);
        let sp = light_setpoints();
        let gains = ControlGains::new(2.0, 0.3, 10.0, 0.8).unwrap();
        let env = OperatingEnvelope::new(std::f64::consts::FRAC_PI_6, 0.2).unwrap();
        let base = check_condition3(&net, &sp, &gains, &env).unwrap();

        let mut scaled = sp.clone();
        scaled.scale_v_star(1.05).unwrap();
        let after = check_condition3(&net, &scaled, &gains, &env).unwrap();
        let dl = (base.spectral.lambda1 - after.spectral.lambda1).norm();
        assert!(dl < 1e-12 * base.spectral.lambda1.norm());

        if let (Ok(p0), Ok(p1)) = (&base.predicted, &after.predicted) {
            assert!((p0.amplitude_scale - p1.amplitude_scale).abs() < 1e-12);
            for k in 0..3 {
                assert!((p1.v_ss[k] - 1.05 * p0.v_ss[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_eigenvector_entry_is_reported() {
        let phi1 = CVector::from_vec(vec![c(0.8, 0.0), c(0.0, 0.0), c(0.6, 0.0)]);
        match consistent_setpoints(&phi1, 0, 1.0) {
            Err(Error::ZeroEigenvectorEntry { node: 1 }) => {}
            other => panic!("expected ZeroEigenvectorEntry, got {other:?}"),
        }
    }
}
