//! Dual-route agreement tests: every quantity below is computed once by
//! the library and once by an algorithmically unrelated oracle from the
//! test-support crate, and the two must coincide.

use cdroop_core::certify::spectral_norm;
use cdroop_core::dynamics::{build_system_matrix, dvoc_rhs};
use cdroop_core::lyapunov::{lyapunov_rate, lyapunov_value, LyapunovContext};
use cdroop_core::net::{kron_reduce, rotated_connectivity, Branch, FullNetwork};
use cdroop_core::sim::{integrate, SimConfig};
use cdroop_core::spectral::{analyze, analyze_matrix};
use cdroop_core::{CMatrix, CVector, RVector, C64};
use cdroop_testkit::{
    certified_system, directional_derivative, eigenvalues_oracle, eliminate_trailing,
    jacobi_eigenvalues, real_embedding, spectral_norm_oracle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_state(rng: &mut impl Rng, n: usize, radius: f64) -> CVector {
    CVector::from_fn(n, |_, _| {
        C64::from_polar(rng.gen_range(0.2..radius), rng.gen_range(-3.1..3.1))
    })
}

/// Greedily match each value against the closest oracle value.
fn assert_spectra_agree(got: &[C64], oracle: &[C64], tol: f64) {
    assert_eq!(got.len(), oracle.len());
    let mut unused: Vec<C64> = oracle.to_vec();
    for g in got {
        let (idx, dist) = unused
            .iter()
            .enumerate()
            .map(|(i, o)| (i, (g - o).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        assert!(
            dist <= tol,
            "eigenvalue {g} is {dist:.3e} from its nearest oracle match"
        );
        unused.swap_remove(idx);
    }
}

#[test]
fn closed_loop_eigenvalues_match_characteristic_polynomial_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE16);
    for n in 2..=5 {
        let sysd = certified_system(&mut rng, n);
        let sys = build_system_matrix(&sysd.net, &sysd.sp, &sysd.gains).unwrap();
        let report = analyze(&sys).unwrap();
        let oracle = eigenvalues_oracle(&sys.a);
        let scale = report
            .eigenvalues
            .iter()
            .map(|e| e.norm())
            .fold(1.0, f64::max);
        assert_spectra_agree(&report.eigenvalues, &oracle, 1e-7 * scale);
    }
}

#[test]
fn connectivity_matches_jacobi_on_the_rotated_laplacian() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    for n in 2..=6 {
        let sysd = certified_system(&mut rng, n);
        let lambda2 = rotated_connectivity(&sysd.net).unwrap();
        let ev = jacobi_eigenvalues(&sysd.net.rotated_laplacian());
        assert!(ev[0].abs() < 1e-9 * ev[n - 1].max(1.0), "kernel eigenvalue");
        assert!(
            (lambda2 - ev[1]).abs() <= 1e-9 * ev[n - 1].max(1.0),
            "connectivity {lambda2} vs jacobi {}",
            ev[1]
        );
    }
}

#[test]
fn spectral_norm_matches_the_real_embedding_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EC);
    for n in 1..=6 {
        let m = CMatrix::from_fn(n, n, |_, _| {
            c64(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
        });
        let got = spectral_norm(&m);
        let want = spectral_norm_oracle(&m);
        assert!(
            (got - want).abs() <= 1e-9 * want.max(1.0),
            "spectral norm {got} vs oracle {want}"
        );
    }
}

#[test]
fn kron_reduction_matches_sequential_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
    for _ in 0..6 {
        let n_total = rng.gen_range(3..8);
        let n_conv = rng.gen_range(2..n_total);
        let mut branches = Vec::new();
        for k in 1..n_total {
            branches.push(Branch::from_impedance(
                k,
                rng.gen_range(0..k),
                rng.gen_range(0.03..0.2),
                rng.gen_range(0.2..0.6),
            ));
        }
        // Interior shunts exercise the shunt bookkeeping.
        let shunts: Vec<C64> = (0..n_total)
            .map(|_| c64(rng.gen_range(0.0..0.05), -rng.gen_range(0.0..0.2)))
            .collect();
        let full = FullNetwork::new(n_total, branches, shunts, (0..n_conv).collect()).unwrap();
        let net = kron_reduce(&full, 0.9).unwrap();

        let y_full = full.admittance_matrix();
        let oracle = eliminate_trailing(&y_full, n_conv);
        let mut rebuilt = net.y.clone();
        for k in 0..n_conv {
            rebuilt[(k, k)] += net.shunts[k];
        }
        let scale = oracle.norm().max(1.0);
        assert!(
            (&rebuilt - &oracle).norm() <= 1e-10 * scale,
            "reduced matrices differ by {:.3e}",
            (&rebuilt - &oracle).norm()
        );
    }
}

#[test]
fn analytic_lyapunov_rate_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xDEC);
    for n in 2..=4 {
        let sysd = certified_system(&mut rng, n);
        let sys = build_system_matrix(&sysd.net, &sysd.sp, &sysd.gains).unwrap();
        let report = analyze(&sys).unwrap();
        let cert =
            cdroop_core::certify::check_condition3(&sysd.net, &sysd.sp, &sysd.gains, &sysd.env)
                .unwrap();
        let ctx = LyapunovContext::new(&sys, &report, &cert, &sysd.sp).unwrap();
        for _ in 0..4 {
            let v = random_state(&mut rng, n, 1.4);
            let vdot = dvoc_rhs(&sys, &v);
            let (rate, bound) = lyapunov_rate(&ctx, &v);
            let fd = directional_derivative(|x| lyapunov_value(&ctx, x), &v, &vdot, 1e-6);
            let scale = rate.abs().max(bound.abs()).max(1e-6);
            assert!(
                (rate - fd).abs() <= 1e-4 * scale,
                "analytic {rate} vs finite-difference {fd}"
            );
            assert!(rate <= bound + 1e-9 * (1.0 + bound.abs()));
        }
    }
}

#[test]
fn amplitude_coupling_form_matches_its_real_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAB);
    for n in 2..=4 {
        let sysd = certified_system(&mut rng, n);
        let sys = build_system_matrix(&sysd.net, &sysd.sp, &sysd.gains).unwrap();
        let report = analyze(&sys).unwrap();
        let p = report.projector();
        let p_tilde = real_embedding(&p);
        for _ in 0..4 {
            let v = random_state(&mut rng, n, 1.3);
            // Complex route: v^H (Phi P + P Phi) v = 2 Re((Phi v)^H P v).
            let phi_v = CVector::from_fn(n, |k, _| {
                let vs2 = sysd.sp.v_star[k] * sysd.sp.v_star[k];
                v[k] * ((vs2 - v[k].norm_sqr()) / vs2)
            });
            let complex_route = 2.0 * phi_v.dotc(&(&p * &v)).re;

            // Real route: stack [Re v; Im v] and embed both operators.
            let v_tilde = RVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im });
            let psi = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
                if i != j {
                    0.0
                } else {
                    let k = i % n;
                    let vs2 = sysd.sp.v_star[k] * sysd.sp.v_star[k];
                    (vs2 - v[k].norm_sqr()) / vs2
                }
            });
            let m = &psi * &p_tilde + &p_tilde * &psi;
            let real_route = (v_tilde.transpose() * m * &v_tilde)[(0, 0)];
            assert!(
                (complex_route - real_route).abs() <= 1e-11 * complex_route.abs().max(1.0),
                "complex {complex_route} vs embedded {real_route}"
            );
        }
    }
}

#[test]
fn isolated_node_trajectory_matches_the_logistic_law() {
    let net = cdroop_core::net::model_from_branches(1, &[], &[c64(0.0, 0.0)], 0.0).unwrap();
    let sp = cdroop_core::dynamics::Setpoints::new(
        RVector::from_vec(vec![0.0]),
        RVector::from_vec(vec![0.0]),
        RVector::from_vec(vec![1.0]),
    )
    .unwrap();
    let gains = cdroop_core::dynamics::ControlGains::new(2.0, 0.4, 3.0, 0.0).unwrap();
    let v0 = CVector::from_vec(vec![c64(0.25, -0.1)]);
    let cfg = SimConfig {
        rtol: 1e-10,
        atol: 1e-12,
        max_step: Some(0.05),
        sample_dt: Some(0.05),
        ..SimConfig::default()
    };
    let traj = integrate(&v0, &net, &sp, &gains, &[], 4.0, &cfg).unwrap();
    let ea = 2.0 * 0.4;
    for s in &traj.samples {
        let r0sq = v0[0].norm_sqr();
        let rsq = r0sq / (r0sq + (1.0 - r0sq) * (-2.0 * ea * s.t).exp());
        let expect = C64::from_polar(rsq.sqrt(), v0[0].arg() + 3.0 * s.t);
        assert!(
            (s.v[0] - expect).norm() < 1e-8,
            "t = {}: {} vs {}",
            s.t,
            s.v[0],
            expect
        );
    }
}

#[test]
fn dominant_mode_matches_oracle_even_with_a_matrix_entry_point() {
    // analyze_matrix on a hand-built non-normal matrix, cross-checked
    // against the polynomial oracle.
    let a = CMatrix::from_row_slice(
        3,
        3,
        &[
            c64(0.1, 2.0),
            c64(-1.0, 0.4),
            c64(0.3, -0.2),
            c64(-1.0, 0.4),
            c64(-0.6, 1.1),
            c64(0.8, 0.0),
            c64(0.3, -0.2),
            c64(0.8, 0.0),
            c64(-1.4, 0.9),
        ],
    );
    let report = analyze_matrix(&a).unwrap();
    let oracle = eigenvalues_oracle(&a);
    assert_spectra_agree(&report.eigenvalues, &oracle, 1e-8);
    // The dominant pair satisfies the eigen equation.
    let resid = (&a * &report.phi1 - &report.phi1 * report.lambda1).norm();
    assert!(resid < 1e-12);
}
