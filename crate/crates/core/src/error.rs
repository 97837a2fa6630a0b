use thiserror::Error;

/// Errors shared by all modules.
///
/// Numerical routines return these instead of panicking so that callers
/// (notably the scenario runner, which keeps simulating segments whose
/// certificate fails) can react per error kind.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max |Y - Y^T| = {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("interior admittance block is singular; Kron reduction impossible")]
    SingularInterior,

    #[error("network graph is disconnected (algebraic connectivity {lambda2:.3e})")]
    DisconnectedGraph { lambda2: f64 },

    #[error("rotated branch weight between nodes {k} and {l} is negative ({weight:.3e})")]
    NegativeWeight { k: usize, l: usize, weight: f64 },

    #[error("voltage setpoint at node {node} must be strictly positive (got {value:.3e})")]
    ZeroVoltageSetpoint { node: usize, value: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("voltage at node {node} is zero; complex frequency / angle undefined")]
    ZeroVoltage { node: usize },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error(
        "dominant eigenvalue is numerically repeated (gap {gap:.3e} <= tolerance {tolerance:.3e})"
    )]
    DegenerateDominantMode { gap: f64, tolerance: f64 },

    #[error("steady-state amplitude ill-posed: 1 + Re(lambda1)/(eta*alpha) = {value:.6e} <= 0")]
    IllPosedAmplitude { value: f64 },

    #[error("voltage setpoints inconsistent with dominant eigenvector (ratio spread {error:.3e})")]
    InconsistentSetpoints { error: f64 },

    #[error("dominant eigenvector entry at node {node} is numerically zero")]
    ZeroEigenvectorEntry { node: usize },

    #[error("stability condition not certified; Lyapunov machinery unavailable")]
    ConditionNotCertified,

    #[error("integrator step collapsed to {step:.3e} at t = {t:.6e} s")]
    StepSizeCollapse { t: f64, step: f64 },

    #[error("non-finite state encountered at t = {t:.6e} s")]
    NonFinite { t: f64 },

    #[error("trajectory too short for a {window:.3e} s window")]
    InsufficientSamples { window: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
