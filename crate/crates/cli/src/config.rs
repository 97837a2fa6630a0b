//! JSON configuration schema and translation into core types.
//!
//! One file describes the whole problem: the physical network, the control
//! gains, the setpoints, the assumed operating envelope, and (optionally)
//! a timed scenario. Unknown fields are rejected so typos surface as parse
//! errors instead of silently ignored knobs.

use cdroop_core::certify::{consistent_setpoints, OperatingEnvelope};
use cdroop_core::dynamics::{build_system_matrix, ControlGains, Setpoints};
use cdroop_core::net::{kron_reduce, Branch, FullNetwork, NetworkModel};
use cdroop_core::sim::{Event, EventKind, InitialState, Scenario, SimConfig};
use cdroop_core::spectral::analyze;
use cdroop_core::{CVector, Error, RVector, C64};
use serde::{Deserialize, Serialize};

/// Top-level configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub network: NetworkSpec,
    pub gains: GainsSpec,
    pub setpoints: SetpointsSpec,
    pub envelope: EnvelopeSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioSpec>,
}

/// Physical grid: buses, branches, shunts, converter placement, rotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Total number of buses, converter and interior alike.
    pub n: usize,
    pub branches: Vec<BranchSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shunts: Vec<ShuntSpec>,
    /// Buses hosting converters; defaults to all buses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converters: Option<Vec<usize>>,
    /// Rotation angle in [0, pi/2]: 0 resistive, pi/2 inductive.
    pub phi: f64,
}

/// One branch, given either as series impedance or as admittance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BranchSpec {
    Impedance {
        from: usize,
        to: usize,
        r: f64,
        x: f64,
    },
    Admittance {
        from: usize,
        to: usize,
        g: f64,
        b: f64,
    },
}

/// Shunt admittance `g + jb` attached at one bus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntSpec {
    pub node: usize,
    pub g: f64,
    pub b: f64,
}

/// Control gains; the rotation angle is taken from the network.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    pub eta: f64,
    pub alpha: f64,
    pub omega0: f64,
}

/// Per-converter setpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetpointsSpec {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub v: VStarSpec,
}

/// Voltage setpoints: explicit per node, or derived from the dominant
/// eigenvector so that amplitudes and powers are exactly consistent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VStarSpec {
    Explicit(Vec<f64>),
    Consistent {
        /// Reference node whose voltage is pinned.
        node: usize,
        /// Voltage magnitude at the reference node.
        v_ref: f64,
    },
}

/// Assumed operating envelope for the parametric conditions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub delta_bar: f64,
    pub gamma_bar: f64,
}

/// A timed experiment: initial state, horizon, events, solver overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub t_end: f64,
    pub initial: InitialSpec,
    /// Seed for randomized initial states. Required for `black_start`;
    /// there is no wall-clock fallback.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
}

/// How the run starts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Seeded random phases, amplitudes `scale * v*_k`.
    BlackStart { scale: f64 },
    /// On the predicted steady-state circle at the given phase.
    OnTarget { phase: f64 },
    /// Explicit phasors, split into real and imaginary parts.
    Explicit { re: Vec<f64>, im: Vec<f64> },
}

/// A timed change applied mid-run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub t: f64,
    pub apply: ActionSpec,
}

/// What an event changes. Setpoint replacements take explicit voltages
/// only: the consistent mode needs an eigenanalysis and is a top-level
/// construction concern, not a runtime switch.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    SetAlpha {
        alpha: f64,
    },
    ScaleVStar {
        factor: f64,
    },
    SetSetpoints {
        p: Vec<f64>,
        q: Vec<f64>,
        v: Vec<f64>,
    },
    SwapNetwork {
        network: NetworkSpec,
    },
}

/// Optional solver overrides; unset fields keep the library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sync_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sync_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl BranchSpec {
    fn to_branch(&self) -> Result<Branch, Error> {
        match *self {
            BranchSpec::Impedance { from, to, r, x } => {
                if r * r + x * x == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "branch ({from}, {to}) has zero impedance"
                    )));
                }
                Ok(Branch::from_impedance(from, to, r, x))
            }
            BranchSpec::Admittance { from, to, g, b } => Ok(Branch::new(from, to, C64::new(g, b))),
        }
    }
}

impl NetworkSpec {
    /// Build the full grid and Kron-reduce it to the converter nodes.
    pub fn build(&self) -> Result<NetworkModel, Error> {
        let branches = self
            .branches
            .iter()
            .map(BranchSpec::to_branch)
            .collect::<Result<Vec<_>, _>>()?;
        let mut shunts = vec![C64::new(0.0, 0.0); self.n];
        for s in &self.shunts {
            if s.node >= self.n {
                return Err(Error::InvalidParameter(format!(
                    "shunt node {} out of range (n = {})",
                    s.node, self.n
                )));
            }
            shunts[s.node] += C64::new(s.g, s.b);
        }
        let converters = self
            .converters
            .clone()
            .unwrap_or_else(|| (0..self.n).collect());
        let full = FullNetwork::new(self.n, branches, shunts, converters)?;
        kron_reduce(&full, self.phi)
    }
}

/// The fully-built problem a command operates on.
#[derive(Debug, Clone)]
pub struct Problem {
    pub net: NetworkModel,
    pub sp: Setpoints,
    pub gains: ControlGains,
    pub env: OperatingEnvelope,
    pub scenario: Option<ScenarioSpec>,
}

/// Translate the parsed config into validated core types.
///
/// `delta_bar` / `gamma_bar` override the envelope from the command line.
pub fn build_problem(
    cfg: &Config,
    delta_bar: Option<f64>,
    gamma_bar: Option<f64>,
) -> Result<Problem, Error> {
    let net = cfg.network.build()?;
    let gains = ControlGains::new(
        cfg.gains.eta,
        cfg.gains.alpha,
        cfg.gains.omega0,
        cfg.network.phi,
    )?;
    let env = OperatingEnvelope::new(
        delta_bar.unwrap_or(cfg.envelope.delta_bar),
        gamma_bar.unwrap_or(cfg.envelope.gamma_bar),
    )?;
    let sp = build_setpoints(&cfg.setpoints, &net, &gains)?;
    Ok(Problem {
        net,
        sp,
        gains,
        env,
        scenario: cfg.scenario.clone(),
    })
}

fn build_setpoints(
    spec: &SetpointsSpec,
    net: &NetworkModel,
    gains: &ControlGains,
) -> Result<Setpoints, Error> {
    let n = net.n;
    if spec.p.len() != n {
        return Err(Error::DimensionMismatch {
            context: "setpoints.p",
            expected: n,
            got: spec.p.len(),
        });
    }
    if spec.q.len() != n {
        return Err(Error::DimensionMismatch {
            context: "setpoints.q",
            expected: n,
            got: spec.q.len(),
        });
    }
    let p = RVector::from_vec(spec.p.clone());
    let q = RVector::from_vec(spec.q.clone());
    match &spec.v {
        VStarSpec::Explicit(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "setpoints.v",
                    expected: n,
                    got: v.len(),
                });
            }
            Setpoints::new(p, q, RVector::from_vec(v.clone()))
        }
        VStarSpec::Consistent { node, v_ref } => {
            // Two passes: the dominant eigenvector depends only on the
            // normalized setpoints, which a uniform voltage profile pins
            // down; re-deriving the voltages from that eigenvector (with
            // powers rescaled to keep the normalization fixed) makes the
            // profile exactly consistent.
            let guess = Setpoints::new(p, q, RVector::from_element(n, *v_ref))?;
            let sys = build_system_matrix(net, &guess, gains)?;
            let report = analyze(&sys)?;
            let v_star = consistent_setpoints(&report.phi1, *node, *v_ref)?;
            let mut p2 = guess.p_star.clone();
            let mut q2 = guess.q_star.clone();
            for k in 0..n {
                let ratio = v_star[k] / v_ref;
                p2[k] *= ratio * ratio;
                q2[k] *= ratio * ratio;
            }
            Setpoints::new(p2, q2, v_star)
        }
    }
}

/// Translate the scenario spec; `seed_override` wins over the config seed.
pub fn build_scenario(
    spec: &ScenarioSpec,
    n: usize,
    seed_override: Option<u64>,
) -> Result<Scenario, Error> {
    let initial = match &spec.initial {
        InitialSpec::BlackStart { scale } => InitialState::BlackStart { scale: *scale },
        InitialSpec::OnTarget { phase } => InitialState::OnTarget { phase: *phase },
        InitialSpec::Explicit { re, im } => {
            if re.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "initial.re",
                    expected: n,
                    got: re.len(),
                });
            }
            if im.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "initial.im",
                    expected: n,
                    got: im.len(),
                });
            }
            InitialState::Explicit(CVector::from_fn(n, |k, _| C64::new(re[k], im[k])))
        }
    };
    let seed = match (seed_override, spec.seed) {
        (Some(s), _) => s,
        (None, Some(s)) => s,
        (None, None) => {
            if matches!(initial, InitialState::BlackStart { .. }) {
                return Err(Error::InvalidParameter(
                    "black_start scenarios need an explicit seed (config `scenario.seed` \
                     or --seed); there is no wall-clock fallback"
                        .into(),
                ));
            }
            0
        }
    };
    let events = spec
        .events
        .iter()
        .map(build_event)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Scenario {
        t_end: spec.t_end,
        initial,
        events,
        seed,
    })
}

fn build_event(spec: &EventSpec) -> Result<Event, Error> {
    let kind = match &spec.apply {
        ActionSpec::SetAlpha { alpha } => EventKind::SetAlpha(*alpha),
        ActionSpec::ScaleVStar { factor } => EventKind::ScaleVStar(*factor),
        ActionSpec::SetSetpoints { p, q, v } => {
            if p.len() != v.len() || q.len() != v.len() {
                return Err(Error::InvalidParameter(format!(
                    "event setpoints have mismatched lengths (p: {}, q: {}, v: {})",
                    p.len(),
                    q.len(),
                    v.len()
                )));
            }
            EventKind::SetSetpoints(Setpoints::new(
                RVector::from_vec(p.clone()),
                RVector::from_vec(q.clone()),
                RVector::from_vec(v.clone()),
            )?)
        }
        ActionSpec::SwapNetwork { network } => EventKind::SwapNetwork(network.build()?),
    };
    Ok(Event { t: spec.t, kind })
}

/// Solver settings with the config overrides applied.
pub fn build_sim_config(spec: Option<&SimSpec>) -> SimConfig {
    let mut cfg = SimConfig::default();
    if let Some(s) = spec {
        if let Some(v) = s.rtol {
            cfg.rtol = v;
        }
        if let Some(v) = s.atol {
            cfg.atol = v;
        }
        cfg.max_step = s.max_step.or(cfg.max_step);
        cfg.sample_dt = s.sample_dt.or(cfg.sample_dt);
        cfg.fixed_step = s.fixed_step.or(cfg.fixed_step);
        if let Some(v) = s.sync_tol {
            cfg.sync_tol = v;
        }
        cfg.sync_window = s.sync_window.or(cfg.sync_window);
        if let Some(v) = s.max_steps {
            cfg.max_steps = v;
        }
    }
    cfg
}
