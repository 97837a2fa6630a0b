//! Time-domain simulation of the closed loop.
//!
//! The vector field is smooth between events, so an explicit embedded
//! Runge-Kutta pair of orders 5(4) with the first-same-as-last property
//! drives the integration. Steps are clamped so the solver lands exactly
//! on every sample time, event time and the final time — no interpolation
//! is ever used for output.
//!
//! Events partition a run into segments. Each segment gets a fresh
//! closed-loop matrix, a fresh eigenanalysis for the distance columns,
//! and its own synchronization verdict. The state is continuous across an
//! event; the complex frequency is not, so boundary samples appear twice,
//! once under each regime.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certify::{check_condition3, point_on_target, OperatingEnvelope, StabilityCertificate};
use crate::dynamics::{build_system_matrix, dvoc_rhs, ControlGains, Setpoints, SystemMatrix};
use crate::lyapunov::{lyapunov_value, LyapunovContext};
use crate::net::NetworkModel;
use crate::spectral::{analyze, distance_to_s, distance_to_t, SpectralReport};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default relative step-error tolerance.
pub const DEFAULT_RTOL: f64 = 1e-8;
/// Default absolute step-error tolerance.
pub const DEFAULT_ATOL: f64 = 1e-10;
/// Default frequency-agreement tolerance for the sync verdict, rad/s.
pub const DEFAULT_SYNC_TOL: f64 = 1e-6;

const SAFETY: f64 = 0.9;
const FACTOR_MIN: f64 = 0.2;
const FACTOR_MAX: f64 = 5.0;

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// A timed change to the running system.
#[derive(Debug, Clone)]
pub struct Event {
    /// When the change applies. Must lie strictly inside `(0, t_end)`.
    pub t: f64,
    pub kind: EventKind,
}

/// What an event changes.
#[derive(Debug, Clone)]
pub enum EventKind {
    /// Replace the amplitude-regulation gain.
    SetAlpha(f64),
    /// Rescale the voltage setpoints by a factor, adjusting the power
    /// setpoints quadratically so the normalized setpoints are unchanged.
    ScaleVStar(f64),
    /// Replace the full setpoint triple.
    SetSetpoints(Setpoints),
    /// Replace the reduced network (line tripping, reconnection, ...).
    SwapNetwork(NetworkModel),
}

/// Integration and sampling controls.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Hard step ceiling. Default: a quarter period of the nominal
    /// rotation, `pi / (4 omega0)`, or a twentieth of the span when the
    /// nominal frequency is zero.
    pub max_step: Option<f64>,
    /// Output spacing; defaults to the resolved `max_step` and must not
    /// exceed it.
    pub sample_dt: Option<f64>,
    /// Disable adaptivity and march with this step instead.
    pub fixed_step: Option<f64>,
    /// Frequency-agreement tolerance for the sync verdict, rad/s.
    pub sync_tol: f64,
    /// Trailing window over which the sync verdict is formed; defaults to
    /// `max(0.05, 0.05 * segment span)`, capped at the segment span.
    pub sync_window: Option<f64>,
    /// Step budget (accepted plus rejected) for a whole run.
    pub max_steps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            max_step: None,
            sample_dt: None,
            fixed_step: None,
            sync_tol: DEFAULT_SYNC_TOL,
            sync_window: None,
            max_steps: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Resolved {
    max_step: f64,
    sample_dt: f64,
}

fn resolve(cfg: &SimConfig, gains: &ControlGains, t_end: f64) -> Result<Resolved> {
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "final time must be positive and finite, got {t_end}"
        )));
    }
    for (name, value) in [
        ("rtol", cfg.rtol),
        ("atol", cfg.atol),
        ("sync_tol", cfg.sync_tol),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    let max_step = match cfg.max_step {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => {
            return Err(Error::InvalidParameter(format!(
                "max_step must be positive and finite, got {h}"
            )))
        }
        None => {
            if gains.omega0 > 0.0 {
                std::f64::consts::PI / (4.0 * gains.omega0)
            } else {
                t_end / 20.0
            }
        }
    };
    let sample_dt = cfg.sample_dt.unwrap_or(max_step);
    if !sample_dt.is_finite() || sample_dt <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sample_dt must be positive and finite, got {sample_dt}"
        )));
    }
    if sample_dt > max_step * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "sample spacing {sample_dt} exceeds the step ceiling {max_step}; \
             raise max_step or sample more densely"
        )));
    }
    if let Some(h) = cfg.fixed_step {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "fixed_step must be positive and finite, got {h}"
            )));
        }
    }
    if t_end / sample_dt > 2.0e7 {
        return Err(Error::InvalidParameter(format!(
            "sampling {t_end} at spacing {sample_dt} would emit more than 2e7 rows"
        )));
    }
    Ok(Resolved {
        max_step,
        sample_dt,
    })
}

/// One output row of a run.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    /// Converter voltage phasors.
    pub v: CVector,
    /// Complex frequency `dv_k/dt / v_k`; NaN where the voltage is zero.
    pub varpi: CVector,
    /// Distance to the synchronous set of the active segment; NaN when
    /// the segment's eigenanalysis failed.
    pub dist_s: f64,
    /// Distance to the predicted steady-state circle; NaN when undefined.
    pub dist_t: f64,
    /// Lyapunov certificate value; NaN unless the segment certified and
    /// the run was produced by a scenario.
    pub lyapunov: f64,
}

/// Contiguous sample range governed by one fixed system.
#[derive(Debug, Clone, Copy)]
pub struct SegmentSpan {
    pub t_start: f64,
    pub t_end: f64,
    pub first_sample: usize,
    pub last_sample: usize,
}

/// A completed run: samples plus the segment structure.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub segments: Vec<SegmentSpan>,
}

/// Synchronization verdict over a trailing window.
#[derive(Debug, Clone)]
pub struct SyncVerdict {
    /// All nodal complex frequencies agree with the window mean.
    pub synchronized: bool,
    /// Earliest sample time from which agreement holds through the end.
    pub t_sync: Option<f64>,
    /// Mean complex frequency over the trailing window.
    pub varpi_mean: C64,
    /// Largest deviation from the mean inside the window.
    pub max_deviation: f64,
    pub window: f64,
    pub tolerance: f64,
}

/// System evolution for one segment.
#[derive(Debug, Clone)]
struct SegmentCtx {
    net: NetworkModel,
    sp: Setpoints,
    gains: ControlGains,
    t_start: f64,
    t_end: f64,
}

fn apply_event(
    net: &mut NetworkModel,
    sp: &mut Setpoints,
    gains: &mut ControlGains,
    kind: &EventKind,
) -> Result<()> {
    match kind {
        EventKind::SetAlpha(alpha) => {
            *gains = ControlGains::new(gains.eta, *alpha, gains.omega0, gains.phi)?;
        }
        EventKind::ScaleVStar(factor) => sp.scale_v_star(*factor)?,
        EventKind::SetSetpoints(new_sp) => {
            new_sp.validate()?;
            if new_sp.len() != net.n {
                return Err(Error::DimensionMismatch {
                    context: "event setpoints vs network",
                    expected: net.n,
                    got: new_sp.len(),
                });
            }
            *sp = new_sp.clone();
        }
        EventKind::SwapNetwork(new_net) => {
            if new_net.n != net.n {
                return Err(Error::DimensionMismatch {
                    context: "event network vs running network",
                    expected: net.n,
                    got: new_net.n,
                });
            }
            *net = new_net.clone();
        }
    }
    Ok(())
}

fn segment_contexts(
    net: &NetworkModel,
    sp: &Setpoints,
    gains: &ControlGains,
    events: &[Event],
    t_end: f64,
) -> Result<Vec<SegmentCtx>> {
    let mut ordered: Vec<&Event> = events.iter().collect();
    for e in &ordered {
        if !e.t.is_finite() || e.t <= 0.0 || e.t >= t_end {
            return Err(Error::InvalidParameter(format!(
                "event time {} lies outside (0, {})",
                e.t, t_end
            )));
        }
    }
    ordered.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite event times"));

    let mut out = Vec::with_capacity(ordered.len() + 1);
    let mut cur_net = net.clone();
    let mut cur_sp = sp.clone();
    let mut cur_gains = *gains;
    let mut t0 = 0.0;
    for e in ordered {
        out.push(SegmentCtx {
            net: cur_net.clone(),
            sp: cur_sp.clone(),
            gains: cur_gains,
            t_start: t0,
            t_end: e.t,
        });
        apply_event(&mut cur_net, &mut cur_sp, &mut cur_gains, &e.kind)?;
        t0 = e.t;
    }
    out.push(SegmentCtx {
        net: cur_net,
        sp: cur_sp,
        gains: cur_gains,
        t_start: t0,
        t_end,
    });
    for ctx in &out {
        if (ctx.net.phi - ctx.gains.phi).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "network rotation angle {} does not match the gain angle {}",
                ctx.net.phi, ctx.gains.phi
            )));
        }
    }
    Ok(out)
}

fn combine(y: &CVector, h: f64, terms: &[(f64, &CVector)]) -> CVector {
    let one = C64::new(1.0, 0.0);
    let mut out = y.clone();
    for (c, k) in terms {
        out.axpy(C64::new(h * c, 0.0), *k, one);
    }
    out
}

/// One embedded step. Returns the 5th-order update, the local error
/// estimate and the slope at the new point (reusable as the next first
/// stage).
fn dp5_step(sys: &SystemMatrix, y: &CVector, k1: &CVector, h: f64) -> (CVector, CVector, CVector) {
    let k2 = dvoc_rhs(sys, &combine(y, h, &[(A21, k1)]));
    let k3 = dvoc_rhs(sys, &combine(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = dvoc_rhs(sys, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = dvoc_rhs(
        sys,
        &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = dvoc_rhs(
        sys,
        &combine(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y_new = combine(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = dvoc_rhs(sys, &y_new);
    let err = combine(
        &CVector::zeros(y.len()),
        h,
        &[
            (E1, k1),
            (E3, &k3),
            (E4, &k4),
            (E5, &k5),
            (E6, &k6),
            (E7, &k7),
        ],
    );
    (y_new, err, k7)
}

fn error_norm(err: &CVector, y: &CVector, y_new: &CVector, atol: f64, rtol: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..err.len() {
        let sc = atol + rtol * y[k].norm().max(y_new[k].norm());
        let r = err[k].norm() / sc;
        acc += r * r;
    }
    (acc / err.len() as f64).sqrt()
}

fn all_finite(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Starting step heuristic: match the scaled sizes of the state and its
/// first two derivative estimates.
fn initial_step(sys: &SystemMatrix, y: &CVector, k1: &CVector, h_max: f64, cfg: &SimConfig) -> f64 {
    let wnorm = |v: &CVector| -> f64 {
        let mut acc = 0.0;
        for k in 0..v.len() {
            let sc = cfg.atol + cfg.rtol * y[k].norm();
            let r = v[k].norm() / sc;
            acc += r * r;
        }
        (acc / v.len() as f64).sqrt()
    };
    let d0 = wnorm(y);
    let d1 = wnorm(k1);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * (d0 / d1)
    };
    h0 = h0.min(h_max);
    let y1 = combine(y, h0, &[(1.0, k1)]);
    let f1 = dvoc_rhs(sys, &y1);
    let d2 = wnorm(&(f1 - k1)) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(h_max)
}

/// Advance the state to `t_target` exactly.
#[allow(clippy::too_many_arguments)]
fn advance_to(
    sys: &SystemMatrix,
    y: &mut CVector,
    t: &mut f64,
    t_target: f64,
    k1: &mut CVector,
    h: &mut f64,
    res: &Resolved,
    cfg: &SimConfig,
    steps: &mut usize,
) -> Result<()> {
    let mut rejected = false;
    while *t < t_target {
        let dist = t_target - *t;
        if dist <= 4.0 * f64::EPSILON * t_target.abs().max(1.0) {
            *t = t_target;
            break;
        }
        *steps += 1;
        if *steps > cfg.max_steps {
            return Err(Error::InvalidParameter(format!(
                "step budget of {} exhausted at t = {:.6e}",
                cfg.max_steps, *t
            )));
        }
        let h_cap = res.max_step.min(dist);
        let h_use = h.min(h_cap);
        if h_use < 1e-15 * t.abs().max(1.0) {
            return Err(Error::StepSizeCollapse { t: *t, step: h_use });
        }
        let clamped = h_use < *h;
        let lands = h_use == dist;
        let (y_new, err, k7) = dp5_step(sys, y, k1, h_use);

        if cfg.fixed_step.is_some() {
            *t = if lands { t_target } else { *t + h_use };
            if !all_finite(&y_new) {
                return Err(Error::NonFinite { t: *t });
            }
            *y = y_new;
            *k1 = k7;
            continue;
        }

        let norm = error_norm(&err, y, &y_new, cfg.atol, cfg.rtol);
        if norm <= 1.0 {
            *t = if lands { t_target } else { *t + h_use };
            if !all_finite(&y_new) {
                return Err(Error::NonFinite { t: *t });
            }
            *y = y_new;
            *k1 = k7;
            let limit = if rejected { 1.0 } else { FACTOR_MAX };
            let factor = if norm == 0.0 {
                limit
            } else {
                (SAFETY * norm.powf(-0.2)).clamp(FACTOR_MIN, limit)
            };
            let h_next = h_use * factor;
            // A boundary-clamped step says nothing about full-size steps
            // unless its error was already marginal.
            *h = if clamped {
                if factor < 1.0 {
                    h_next
                } else {
                    *h
                }
            } else {
                h_next
            };
            rejected = false;
        } else {
            let factor = if norm.is_finite() {
                (SAFETY * norm.powf(-0.2)).clamp(FACTOR_MIN, 1.0)
            } else {
                FACTOR_MIN
            };
            *h = h_use * factor;
            rejected = true;
        }
    }
    Ok(())
}

fn push_sample(
    samples: &mut Vec<Sample>,
    t: f64,
    y: &CVector,
    sys: &SystemMatrix,
    analysis: &Option<(SpectralReport, CMatrix)>,
    ctx: &SegmentCtx,
) {
    let f = dvoc_rhs(sys, y);
    let varpi = CVector::from_fn(y.len(), |k, _| {
        if y[k].norm_sqr() == 0.0 {
            C64::new(f64::NAN, f64::NAN)
        } else {
            f[k] / y[k]
        }
    });
    let (dist_s, dist_t) = match analysis {
        Some((report, projector)) => (
            distance_to_s(y, projector),
            distance_to_t(y, report, &ctx.sp, &ctx.gains).unwrap_or(f64::NAN),
        ),
        None => (f64::NAN, f64::NAN),
    };
    samples.push(Sample {
        t,
        v: y.clone(),
        varpi,
        dist_s,
        dist_t,
        lyapunov: f64::NAN,
    });
}

fn integrate_segment(
    sys: &SystemMatrix,
    ctx: &SegmentCtx,
    y: &mut CVector,
    samples: &mut Vec<Sample>,
    res: &Resolved,
    cfg: &SimConfig,
    steps: &mut usize,
) -> Result<SegmentSpan> {
    let first = samples.len();
    let analysis = analyze(sys).ok().map(|report| {
        let projector = report.projector();
        (report, projector)
    });
    push_sample(samples, ctx.t_start, y, sys, &analysis, ctx);

    let span = ctx.t_end - ctx.t_start;
    if span > 0.0 {
        let dt = res.sample_dt;
        let cutoff = ctx.t_end - (1e-9 * dt).max(4.0 * f64::EPSILON * ctx.t_end.abs());
        let mut targets = Vec::new();
        let mut i = 1u64;
        loop {
            let ti = ctx.t_start + (i as f64) * dt;
            if ti >= cutoff {
                break;
            }
            targets.push(ti);
            i += 1;
        }
        targets.push(ctx.t_end);

        let mut t = ctx.t_start;
        let mut k1 = dvoc_rhs(sys, y);
        let mut h = match cfg.fixed_step {
            Some(hf) => hf,
            None => initial_step(sys, y, &k1, res.max_step, cfg),
        };
        for &t_target in &targets {
            advance_to(sys, y, &mut t, t_target, &mut k1, &mut h, res, cfg, steps)?;
            push_sample(samples, t, y, sys, &analysis, ctx);
        }
    }
    Ok(SegmentSpan {
        t_start: ctx.t_start,
        t_end: ctx.t_end,
        first_sample: first,
        last_sample: samples.len() - 1,
    })
}

/// Integrate the closed loop from `v0` over `[0, t_end]`, applying events
/// in time order. Distance columns are filled per segment; the Lyapunov
/// column is left NaN (scenarios fill it when a segment certifies).
pub fn integrate(
    v0: &CVector,
    net: &NetworkModel,
    sp: &Setpoints,
    gains: &ControlGains,
    events: &[Event],
    t_end: f64,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    gains.validate()?;
    sp.validate()?;
    if v0.len() != net.n {
        return Err(Error::DimensionMismatch {
            context: "initial state vs network",
            expected: net.n,
            got: v0.len(),
        });
    }
    if !all_finite(v0) {
        return Err(Error::NonFinite { t: 0.0 });
    }
    let res = resolve(cfg, gains, t_end)?;
    let ctxs = segment_contexts(net, sp, gains, events, t_end)?;
    let mut samples = Vec::new();
    let mut spans = Vec::with_capacity(ctxs.len());
    let mut y = v0.clone();
    let mut steps = 0usize;
    for ctx in &ctxs {
        let sys = build_system_matrix(&ctx.net, &ctx.sp, &ctx.gains)?;
        let span = integrate_segment(&sys, ctx, &mut y, &mut samples, &res, cfg, &mut steps)?;
        spans.push(span);
    }
    Ok(Trajectory {
        samples,
        segments: spans,
    })
}

/// Random de-energized initial state: every node gets the magnitude
/// `scale * v*_k` and an independent uniform phase in `(-pi, pi]`.
pub fn black_start_state(sp: &Setpoints, scale: f64, seed: u64) -> Result<CVector> {
    sp.validate()?;
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "black-start scale must be positive and finite, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(CVector::from_fn(sp.len(), |k, _| {
        let u: f64 = rng.gen();
        let theta = std::f64::consts::PI * (1.0 - 2.0 * u);
        C64::from_polar(scale * sp.v_star[k], theta)
    }))
}

/// Form a synchronization verdict over the trailing `window` of `samples`.
///
/// The verdict compares every nodal complex frequency in the window
/// against the window mean; agreement within `tol` (in rad/s, applied to
/// the complex deviation modulus) is synchronization. `t_sync` is the
/// earliest sample time from which agreement holds through the end.
pub fn detect_sync(samples: &[Sample], window: f64, tol: f64) -> Result<SyncVerdict> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { window });
    }
    let t_first = samples[0].t;
    let t_last = samples[samples.len() - 1].t;
    let span = t_last - t_first;
    if !window.is_finite() || window <= 0.0 || window > span * (1.0 + 1e-9) {
        return Err(Error::InsufficientSamples { window });
    }
    let w_start = t_last - window;
    let idx0 = samples
        .iter()
        .position(|s| s.t >= w_start - 1e-12 * span.max(1.0))
        .unwrap_or(samples.len() - 1);
    if samples.len() - idx0 < 2 {
        return Err(Error::InsufficientSamples { window });
    }

    let mut sum = C64::new(0.0, 0.0);
    let mut count = 0usize;
    for s in &samples[idx0..] {
        for k in 0..s.varpi.len() {
            sum += s.varpi[k];
            count += 1;
        }
    }
    let mean = sum / C64::new(count as f64, 0.0);

    let deviation = |s: &Sample| -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..s.varpi.len() {
            let d = (s.varpi[k] - mean).norm();
            if d.is_nan() {
                return f64::INFINITY;
            }
            worst = worst.max(d);
        }
        worst
    };

    let mut max_dev: f64 = 0.0;
    for s in &samples[idx0..] {
        max_dev = max_dev.max(deviation(s));
    }
    let synchronized = max_dev.is_finite() && max_dev < tol && mean.re.is_finite();

    let t_sync = if synchronized {
        let mut earliest = idx0;
        for i in (0..samples.len()).rev() {
            if deviation(&samples[i]) < tol {
                earliest = i;
            } else {
                break;
            }
        }
        Some(samples[earliest].t)
    } else {
        None
    };

    Ok(SyncVerdict {
        synchronized,
        t_sync,
        varpi_mean: mean,
        max_deviation: max_dev,
        window,
        tolerance: tol,
    })
}

/// How a scenario starts.
#[derive(Debug, Clone)]
pub enum InitialState {
    /// Small random voltages from a seeded generator.
    BlackStart { scale: f64 },
    /// On the predicted steady-state circle at a chosen phase.
    OnTarget { phase: f64 },
    /// Caller-supplied phasors.
    Explicit(CVector),
}

/// A full experiment: initial state, horizon and timed events.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub t_end: f64,
    pub initial: InitialState,
    pub events: Vec<Event>,
    pub seed: u64,
}

/// Per-segment analysis attached to a scenario run.
#[derive(Debug, Clone)]
pub struct SegmentReport {
    pub t_start: f64,
    pub t_end: f64,
    /// Full parametric certificate of the segment's system, or the error
    /// that prevented certification.
    pub certificate: Result<StabilityCertificate>,
    /// Synchronization verdict over the segment's trailing window.
    pub sync: Result<SyncVerdict>,
}

/// A scenario run: the trajectory plus per-segment verdicts.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trajectory: Trajectory,
    pub segments: Vec<SegmentReport>,
    /// Convenience copy of the last segment's sync verdict.
    pub final_sync: Result<SyncVerdict>,
}

/// Run a scenario end to end: resolve the initial state, integrate
/// through all events, certify every segment, fill the Lyapunov column
/// where a segment certifies, and judge synchronization per segment.
pub fn run_scenario(
    net: &NetworkModel,
    sp: &Setpoints,
    gains: &ControlGains,
    env: &OperatingEnvelope,
    scenario: &Scenario,
    cfg: &SimConfig,
) -> Result<ScenarioOutcome> {
    let v0 = match &scenario.initial {
        InitialState::BlackStart { scale } => black_start_state(sp, *scale, scenario.seed)?,
        InitialState::OnTarget { phase } => {
            let sys = build_system_matrix(net, sp, gains)?;
            let report = analyze(&sys)?;
            point_on_target(&report, sp, gains, *phase)?
        }
        InitialState::Explicit(v) => v.clone(),
    };
    let mut trajectory = integrate(&v0, net, sp, gains, &scenario.events, scenario.t_end, cfg)?;
    let ctxs = segment_contexts(net, sp, gains, &scenario.events, scenario.t_end)?;

    let mut segments = Vec::with_capacity(ctxs.len());
    for (span, ctx) in trajectory.segments.clone().iter().zip(&ctxs) {
        let certificate = check_condition3(&ctx.net, &ctx.sp, &ctx.gains, env);
        if let Ok(cert) = &certificate {
            let sys = build_system_matrix(&ctx.net, &ctx.sp, &ctx.gains)?;
            if let Ok(lctx) = LyapunovContext::new(&sys, &cert.spectral, cert, &ctx.sp) {
                for s in &mut trajectory.samples[span.first_sample..=span.last_sample] {
                    s.lyapunov = lyapunov_value(&lctx, &s.v);
                }
            }
        }
        let seg_span = span.t_end - span.t_start;
        let window = cfg
            .sync_window
            .unwrap_or_else(|| 0.05_f64.max(0.05 * seg_span))
            .min(seg_span);
        let sync = detect_sync(
            &trajectory.samples[span.first_sample..=span.last_sample],
            window,
            cfg.sync_tol,
        );
        segments.push(SegmentReport {
            t_start: span.t_start,
            t_end: span.t_end,
            certificate,
            sync,
        });
    }
    let final_sync = segments
        .last()
        .map(|s| s.sync.clone())
        .unwrap_or(Err(Error::InsufficientSamples { window: 0.0 }));
    Ok(ScenarioOutcome {
        trajectory,
        segments,
        final_sync,
    })
}
