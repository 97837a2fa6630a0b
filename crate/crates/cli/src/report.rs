//! JSON report shapes printed by the commands.
//!
//! Floats are serialized with serde_json's shortest-round-trip formatting,
//! so every reported value parses back to the exact bit pattern. Quantities
//! that can be infinite (the single-node connectivity, for instance) are
//! mapped to `null` through options.

use cdroop_core::certify::StabilityCertificate;
use cdroop_core::net::NetworkModel;
use cdroop_core::sim::{ScenarioOutcome, SyncVerdict};
use cdroop_core::C64;
use serde::{Deserialize, Serialize};

/// A complex number as an explicit `{re, im}` pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Cx {
    fn from(z: C64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Full parametric certificate: spectrum, both conditions, margins,
/// envelope diagnostics and the steady-state prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Closed-loop eigenvalues, sorted by descending real part.
    pub eigenvalues: Vec<Cx>,
    pub lambda1: Cx,
    /// Real-part gap to the second eigenvalue; `null` for a single node.
    pub gap: Option<f64>,
    /// Dominant eigenvector, deterministically normalized.
    pub phi1: Vec<Cx>,
    /// Algebraic connectivity of the rotated Laplacian; `null` when infinite.
    pub lambda2_connectivity: Option<f64>,
    /// Second-largest rotated Laplacian eigenvalue, for comparison.
    pub lambda2_second_largest: Option<f64>,
    pub lhs_sync: f64,
    /// Envelope prefactor times the connectivity; `null` when infinite.
    pub rhs: Option<f64>,
    pub condition1: bool,
    pub condition3: bool,
    pub margin_c: f64,
    pub alpha1: Option<f64>,
    pub a_shift_norm: f64,
    pub delta_actual: f64,
    pub gamma_actual: f64,
    pub envelope_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<PredictionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction_error: Option<String>,
}

/// Predicted drooped synchronous steady state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionReport {
    /// Synchronous frequency, rad/s.
    pub omega_sync: f64,
    /// Common amplitude factor applied to every voltage setpoint.
    pub amplitude_scale: f64,
    /// Per-node steady amplitudes.
    pub v_ss: Vec<f64>,
}

impl CertificateReport {
    pub fn from_certificate(cert: &StabilityCertificate) -> Self {
        let (predicted, prediction_error) = match &cert.predicted {
            Ok(p) => (
                Some(PredictionReport {
                    omega_sync: p.omega_sync,
                    amplitude_scale: p.amplitude_scale,
                    v_ss: p.v_ss.iter().copied().collect(),
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        CertificateReport {
            eigenvalues: cert
                .spectral
                .eigenvalues
                .iter()
                .map(|&z| z.into())
                .collect(),
            lambda1: cert.spectral.lambda1.into(),
            gap: finite(cert.spectral.gap),
            phi1: cert.spectral.phi1.iter().map(|&z| z.into()).collect(),
            lambda2_connectivity: finite(cert.sync.lambda2),
            lambda2_second_largest: finite(cert.sync.lambda2_second_largest),
            lhs_sync: cert.sync.lhs_sync,
            rhs: finite(cert.sync.rhs),
            condition1: cert.sync.condition1,
            condition3: cert.condition3,
            margin_c: cert.margin_c,
            alpha1: cert.alpha1,
            a_shift_norm: cert.a_shift_norm,
            delta_actual: cert.sync.delta_actual,
            gamma_actual: cert.sync.gamma_actual,
            envelope_ok: cert.sync.envelope_ok,
            predicted,
            prediction_error,
        }
    }
}

/// Output of the steady-state command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyReport {
    pub lambda1: Cx,
    pub omega_sync: f64,
    pub amplitude_scale: f64,
    pub v_ss: Vec<f64>,
}

/// Synchronization verdict in report form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyncReport {
    pub synchronized: bool,
    pub t_sync: Option<f64>,
    pub varpi_mean: Cx,
    pub max_deviation: Option<f64>,
    pub window: f64,
    pub tolerance: f64,
}

impl From<&SyncVerdict> for SyncReport {
    fn from(v: &SyncVerdict) -> Self {
        SyncReport {
            synchronized: v.synchronized,
            t_sync: v.t_sync,
            varpi_mean: v.varpi_mean.into(),
            max_deviation: finite(v.max_deviation),
            window: v.window,
            tolerance: v.tolerance,
        }
    }
}

/// Per-segment summary of a scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentReportOut {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sync: Option<SyncReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sync_error: Option<String>,
}

/// Whole-run summary printed by the simulate command (the trajectory
/// itself goes to the CSV file).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReport {
    pub t_end: f64,
    pub samples: usize,
    pub csv_path: String,
    pub segments: Vec<SegmentReportOut>,
    pub synchronized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub varpi: Option<Cx>,
}

impl SimulateReport {
    pub fn from_outcome(outcome: &ScenarioOutcome, t_end: f64, csv_path: &str) -> Self {
        let segments = outcome
            .segments
            .iter()
            .map(|seg| {
                let (certificate, certificate_error) = match &seg.certificate {
                    Ok(c) => (Some(CertificateReport::from_certificate(c)), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                let (sync, sync_error) = match &seg.sync {
                    Ok(v) => (Some(SyncReport::from(v)), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                SegmentReportOut {
                    t_start: seg.t_start,
                    t_end: seg.t_end,
                    certificate,
                    certificate_error,
                    sync,
                    sync_error,
                }
            })
            .collect();
        let (synchronized, varpi) = match &outcome.final_sync {
            Ok(v) if v.synchronized => (true, Some(v.varpi_mean.into())),
            Ok(v) => (false, Some(v.varpi_mean.into())),
            Err(_) => (false, None),
        };
        SimulateReport {
            t_end,
            samples: outcome.trajectory.samples.len(),
            csv_path: csv_path.to_string(),
            segments,
            synchronized,
            varpi,
        }
    }
}

/// Lemma spot-check counts over seeded random states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmasReport {
    pub samples: usize,
    pub seed: u64,
    pub lemma1_failures: usize,
    pub lemma2_failures: usize,
    pub rate_bound_failures: usize,
    /// Worst signed slack `rate - bound` seen (negative is healthy);
    /// absent when no states were sampled.
    pub max_rate_gap: Option<f64>,
    pub all_hold: bool,
}

/// Reduced network printed by the kron command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KronReport {
    pub n: usize,
    pub phi: f64,
    /// Reduced Laplacian, row major.
    pub y: Vec<Vec<Cx>>,
    /// Absorbed shunt per converter node.
    pub shunts: Vec<Cx>,
    /// Rotated algebraic connectivity; `null` if infinite or unavailable.
    pub lambda2_connectivity: Option<f64>,
    pub lambda2_second_largest: Option<f64>,
}

impl KronReport {
    pub fn from_model(net: &NetworkModel) -> Self {
        let spectrum = cdroop_core::net::rotated_laplacian_eigenvalues(net).ok();
        KronReport {
            n: net.n,
            phi: net.phi,
            y: (0..net.n)
                .map(|k| (0..net.n).map(|l| net.y[(k, l)].into()).collect())
                .collect(),
            shunts: net.shunts.iter().map(|&z| z.into()).collect(),
            lambda2_connectivity: spectrum.and_then(|s| finite(s.connectivity)),
            lambda2_second_largest: spectrum.and_then(|s| finite(s.second_largest)),
        }
    }
}
