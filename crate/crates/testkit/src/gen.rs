//! Seeded random networks and certified systems.

use cdroop_core::certify::{check_condition3, consistent_setpoints, OperatingEnvelope};
use cdroop_core::dynamics::{build_system_matrix, ControlGains, Setpoints};
use cdroop_core::net::{model_from_branches, Branch, NetworkModel};
use cdroop_core::spectral::analyze;
use cdroop_core::{RVector, C64};
use rand::Rng;

/// A random connected branch set on `n` buses: a random spanning tree
/// plus a few chords. Impedances are drawn inductive, which keeps every
/// rotated branch weight positive for any rotation angle in `[0, pi/2]`.
pub fn random_connected_branches(rng: &mut impl Rng, n: usize) -> Vec<Branch> {
    let mut branches = Vec::new();
    for k in 1..n {
        let to = rng.gen_range(0..k);
        branches.push(Branch::from_impedance(
            k,
            to,
            rng.gen_range(0.03..0.25),
            rng.gen_range(0.15..0.55),
        ));
    }
    let extra = rng.gen_range(0..=n / 2);
    let mut placed = 0;
    for _ in 0..50 {
        if placed >= extra {
            break;
        }
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let (a, b) = (i.min(j), i.max(j));
        if branches
            .iter()
            .any(|br| br.from.min(br.to) == a && br.from.max(br.to) == b)
        {
            continue;
        }
        branches.push(Branch::from_impedance(
            a,
            b,
            rng.gen_range(0.03..0.25),
            rng.gen_range(0.15..0.55),
        ));
        placed += 1;
    }
    branches
}

/// A random connected reduced network without shunts.
pub fn random_network(rng: &mut impl Rng, n: usize, phi: f64) -> NetworkModel {
    let branches = random_connected_branches(rng, n);
    let shunts = vec![C64::new(0.0, 0.0); n];
    model_from_branches(n, &branches, &shunts, phi).expect("random inductive network is valid")
}

/// A system that passes the full parametric certificate.
pub struct CertifiedSystem {
    pub net: NetworkModel,
    pub sp: Setpoints,
    pub gains: ControlGains,
    pub env: OperatingEnvelope,
}

/// Draw a random network and setpoints until the stability condition
/// certifies with at least a 10% relative margin, envelope included.
/// Setpoints are made exactly consistent by a two-pass construction that
/// holds the normalized setpoints fixed while the voltage setpoints are
/// read off the dominant eigenvector.
pub fn certified_system(rng: &mut impl Rng, n: usize) -> CertifiedSystem {
    loop {
        let phi = rng.gen_range(0.6..std::f64::consts::FRAC_PI_2);
        let net = random_network(rng, n, phi);
        let eta = rng.gen_range(0.5..2.0);
        let alpha = rng.gen_range(0.05..0.3);
        let gains = ControlGains::new(eta, alpha, 1.0, phi).expect("valid gains");
        let env = OperatingEnvelope::new(std::f64::consts::FRAC_PI_6, 0.2).expect("valid envelope");
        let mut level = 0.08;
        for _ in 0..6 {
            let p0 = RVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0) * level);
            let q0 = RVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0) * level);
            let sp0 = Setpoints::new(p0.clone(), q0.clone(), RVector::from_element(n, 1.0))
                .expect("valid setpoints");
            let Ok(sys0) = build_system_matrix(&net, &sp0, &gains) else {
                break;
            };
            let Ok(rep0) = analyze(&sys0) else {
                level *= 0.5;
                continue;
            };
            let Ok(v_star) = consistent_setpoints(&rep0.phi1, 0, 1.0) else {
                level *= 0.5;
                continue;
            };
            let sp = Setpoints::new(
                RVector::from_fn(n, |k, _| p0[k] * v_star[k] * v_star[k]),
                RVector::from_fn(n, |k, _| q0[k] * v_star[k] * v_star[k]),
                v_star,
            )
            .expect("valid scaled setpoints");
            let Ok(cert) = check_condition3(&net, &sp, &gains, &env) else {
                level *= 0.5;
                continue;
            };
            if cert.condition3
                && cert.sync.envelope_ok
                && cert.margin_c >= 0.1 * cert.sync.rhs
                && cert.predicted.is_ok()
            {
                return CertifiedSystem {
                    net,
                    sp,
                    gains,
                    env,
                };
            }
            level *= 0.5;
        }
    }
}
