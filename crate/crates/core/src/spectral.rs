//! Spectrum of the closed-loop matrix and distances to the synchronous sets.
//!
//! Everything the certificates and steady-state predictions need comes from
//! the dominant eigenpair of `A` (the eigenvalue of largest real part and
//! its eigenvector `phi1`):
//!
//! - the synchronous frequency is `Im(lambda1)` and the amplitude ratios
//!   follow `|phi1|`,
//! - the synchronous set `S = span(phi1)` carries the distance
//!   `||v||_S = ||P v||` with the orthogonal projector
//!   `P = I - phi1 phi1^H / (phi1^H phi1)`,
//! - the target set `T` is the circle inside `S` whose radius matches the
//!   drooped amplitude profile.
//!
//! `A` is complex symmetric, not Hermitian, so a general dense route is
//! used: the complex Schur form provides the eigenvalues, and the dominant
//! eigenvector is recovered by back-substitution through the triangular
//! factor. The dominant eigenvalue must be simple; a gap below
//! `1e-9 * max(1, |Re lambda1|)` is reported as degenerate rather than
//! silently returning an arbitrary basis vector.

use nalgebra::DVector;

use crate::dynamics::{ControlGains, Setpoints, SystemMatrix};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative factor for the dominant-gap degeneracy test.
pub const GAP_RTOL: f64 = 1e-9;

/// Spectrum summary of one system matrix.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// All eigenvalues, sorted by descending real part (ties by descending
    /// imaginary part).
    pub eigenvalues: Vec<C64>,
    /// Dominant eigenvalue `lambda1 = eigenvalues[0]`.
    pub lambda1: C64,
    /// Unit dominant eigenvector; its first entry of maximal modulus is
    /// rotated to the positive real axis, so the representative is unique.
    pub phi1: CVector,
    /// `Re(lambda1) - Re(lambda2)`; infinite for a 1x1 system.
    pub gap: f64,
    /// Threshold the gap was tested against.
    pub gap_tolerance: f64,
    /// True on every successful analysis (kept for report serialization).
    pub multiplicity_ok: bool,
}

impl SpectralReport {
    /// Orthogonal projector `P = I - phi1 phi1^H` onto the complement of
    /// the synchronous span (`phi1` is unit).
    pub fn projector(&self) -> CMatrix {
        let n = self.phi1.len();
        let mut p = CMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] -= self.phi1[i] * self.phi1[j].conj();
            }
        }
        p
    }
}

/// Analyze the closed-loop matrix of an assembled system.
pub fn analyze(sys: &SystemMatrix) -> Result<SpectralReport> {
    analyze_matrix(&sys.a)
}

/// Dense eigenanalysis of an arbitrary complex matrix.
///
/// No Hermitian or normal-matrix shortcut is taken anywhere: the matrix is
/// brought to complex Schur form and the dominant eigenvector extracted
/// from the triangular factor.
pub fn analyze_matrix(a: &CMatrix) -> Result<SpectralReport> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "system matrix",
            expected: n,
            got: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter(
            "system matrix contains non-finite entries".into(),
        ));
    }

    if n == 1 {
        let lambda1 = a[(0, 0)];
        return Ok(SpectralReport {
            eigenvalues: vec![lambda1],
            lambda1,
            phi1: CVector::from_vec(vec![C64::new(1.0, 0.0)]),
            gap: f64::INFINITY,
            gap_tolerance: GAP_RTOL * lambda1.re.abs().max(1.0),
            multiplicity_ok: true,
        });
    }

    let schur = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or(Error::EigenFailure)?;
    let (q, t) = schur.unpack();

    let mut eigenvalues: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    eigenvalues.sort_by(|x, y| {
        (y.re, y.im)
            .partial_cmp(&(x.re, x.im))
            .expect("eigenvalues are finite")
    });
    let lambda1 = eigenvalues[0];
    let gap = lambda1.re - eigenvalues[1].re;
    let gap_tolerance = GAP_RTOL * lambda1.re.abs().max(1.0);
    if gap <= gap_tolerance {
        return Err(Error::DegenerateDominantMode {
            gap,
            tolerance: gap_tolerance,
        });
    }

    // First Schur position holding the dominant eigenvalue.
    let pivot = (0..n)
        .min_by(|&i, &j| {
            let zi = t[(i, i)];
            let zj = t[(j, j)];
            (-zi.re, -zi.im)
                .partial_cmp(&(-zj.re, -zj.im))
                .expect("eigenvalues are finite")
        })
        .expect("n > 0");

    // Solve (T - lambda1 I) y = 0 with y supported on 0..=pivot by
    // back-substitution. All denominators are other eigenvalues' distance
    // to lambda1, bounded below by the verified gap.
    let mut y = DVector::<C64>::zeros(n);
    y[pivot] = C64::new(1.0, 0.0);
    for i in (0..pivot).rev() {
        let mut s = C64::new(0.0, 0.0);
        for j in (i + 1)..=pivot {
            s += t[(i, j)] * y[j];
        }
        let mut d = t[(i, i)] - lambda1;
        if d.norm() < 1e-300 {
            d = C64::new(1e-300, 0.0);
        }
        y[i] = -s / d;
    }
    let mut phi1 = &q * y;

    phi1 /= C64::new(phi1.norm(), 0.0);
    let lead = leading_max_modulus(&phi1);
    let m = phi1[lead].norm();
    let rot = phi1[lead].conj() / C64::new(m, 0.0);
    phi1 *= rot;
    phi1[lead] = C64::new(phi1[lead].re.abs(), 0.0);

    // Residual guard: a wrong vector (e.g. from a near-defective pair that
    // slipped past the gap test) is a silent poison for everything above.
    let scale = a.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let residual = (a * &phi1 - &phi1 * lambda1).norm();
    if residual > 1e-7 * scale.max(1.0) {
        return Err(Error::EigenFailure);
    }

    Ok(SpectralReport {
        eigenvalues,
        lambda1,
        phi1,
        gap,
        gap_tolerance,
        multiplicity_ok: true,
    })
}

fn leading_max_modulus(v: &CVector) -> usize {
    let mut best = 0usize;
    let mut best_m = v[0].norm();
    for k in 1..v.len() {
        let m = v[k].norm();
        if m > best_m {
            best = k;
            best_m = m;
        }
    }
    best
}

/// Distance `||P v||` to the synchronous span.
pub fn distance_to_s(v: &CVector, p: &CMatrix) -> f64 {
    (p * v).norm()
}

/// Distance to the target circle `T = { mu phi1 : |mu| = rho }` where the
/// radius matches the drooped amplitude profile `v*_k sqrt(1 + Re(lambda1)/(eta alpha))`.
///
/// The radius uses the least-squares fit of `v*` onto `|phi1|`, which is
/// exact when the setpoints are consistent with the eigenvector.
pub fn distance_to_t(
    v: &CVector,
    report: &SpectralReport,
    sp: &Setpoints,
    gains: &ControlGains,
) -> Result<f64> {
    let rho = target_radius(report, sp, gains)?;
    let vv = v.norm_squared();
    // |<phi1, v>|^2 = ||v||^2 - ||P v||^2 without forming P.
    let proj = report.phi1.dotc(v).norm();
    Ok((vv - 2.0 * rho * proj + rho * rho).max(0.0).sqrt())
}

/// Radius of the target circle in voltage space.
pub fn target_radius(report: &SpectralReport, sp: &Setpoints, gains: &ControlGains) -> Result<f64> {
    gains.validate()?;
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
            "target set undefined for alpha = 0 (no amplitude regulation)".into(),
        ));
    }
    let scale_sq = 1.0 + report.lambda1.re / ea;
    if scale_sq <= 0.0 {
        return Err(Error::IllPosedAmplitude { value: scale_sq });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..sp.len() {
        let m = report.phi1[k].norm();
        num += sp.v_star[k] * m;
        den += m * m;
    }
    Ok(num / den * scale_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_system_matrix, ControlGains, Setpoints};
    use crate::net::{model_from_branches, Branch};
    use crate::RVector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_system() -> SystemMatrix {
        let branches = [
            Branch::from_impedance(0, 1, 0.4, 0.8),
            Branch::from_impedance(1, 2, 0.3, 1.0),
            Branch::from_impedance(0, 2, 0.5, 0.7),
        ];
        let net = model_from_branches(3, &branches, &[c(0.0, 0.0); 3], 0.9).unwrap();
        let sp = Setpoints::new(
            RVector::from_vec(vec![0.11, 0.07, -0.05]),
            RVector::from_vec(vec![0.02, -0.04, 0.06]),
            RVector::from_vec(vec![1.0, 1.0, 1.0]),
        )
        .unwrap();
        let gains = ControlGains::new(1.3, 0.4, 1.0, 0.9).unwrap();
        build_system_matrix(&net, &sp, &gains).unwrap()
    }

    #[test]
    fn dominant_pair_satisfies_eigen_equation() {
        let sys = small_system();
        let rep = analyze(&sys).unwrap();
        let resid = (&sys.a * &rep.phi1 - &rep.phi1 * rep.lambda1).norm();
        assert!(resid < 1e-12, "residual {resid}");
        assert!((rep.phi1.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_sorted_and_gap_positive() {
        let sys = small_system();
        let rep = analyze(&sys).unwrap();
        for w in rep.eigenvalues.windows(2) {
            assert!(w[0].re >= w[1].re);
        }
        assert!(rep.gap > 0.0);
        assert!(rep.multiplicity_ok);
        assert_eq!(rep.lambda1, rep.eigenvalues[0]);
    }

    #[test]
    fn phi1_representative_is_unique_and_deterministic() {
        let sys = small_system();
        let r1 = analyze(&sys).unwrap();
        let r2 = analyze(&sys).unwrap();
        for k in 0..3 {
            assert_eq!(r1.phi1[k], r2.phi1[k]);
        }
        let lead = super::leading_max_modulus(&r1.phi1);
        assert_eq!(r1.phi1[lead].im, 0.0);
        assert!(r1.phi1[lead].re > 0.0);
    }

    #[test]
    fn identical_oscillators_are_degenerate() {
        // eta -> 0 collapses every eigenvalue onto j*w0.
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 1.0), c(0.0, 1.0)]));
        match analyze_matrix(&a) {
            Err(Error::DegenerateDominantMode { .. }) => {}
            other => panic!("expected DegenerateDominantMode, got {other:?}"),
        }
    }

    #[test]
    fn projector_annihilates_phi1_and_fixes_complement() {
        let sys = small_system();
        let rep = analyze(&sys).unwrap();
        let p = rep.projector();
        assert!((&p * &rep.phi1).norm() < 1e-14);
        // P is idempotent and Hermitian.
        assert!(((&p * &p) - &p).norm() < 1e-13);
        assert!((&p - p.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn distance_to_s_vanishes_on_span() {
        let sys = small_system();
        let rep = analyze(&sys).unwrap();
        let p = rep.projector();
        let v = rep.phi1.map(|z| z * c(1.7, -2.2));
        assert!(distance_to_s(&v, &p) < 1e-13);
        // And equals the norm for vectors orthogonal to phi1.
        let mut w = CVector::zeros(3);
        w[0] = rep.phi1[1].conj();
        w[1] = -rep.phi1[0].conj();
        let d = distance_to_s(&w, &p);
        assert!((d - w.norm()).abs() < 1e-12);
    }

    #[test]
    fn distance_to_t_radial_cases() {
        let sys = small_system();
        let rep = analyze(&sys).unwrap();
        // Consistent setpoints: v* proportional to |phi1|.
        let v_star = RVector::from_fn(3, |k, _| 0.97 * rep.phi1[k].norm());
        let sp = Setpoints::new(RVector::zeros(3), RVector::zeros(3), v_star).unwrap();
        let rho = target_radius(&rep, &sp, &sys.gains).unwrap();
        let z = rep.phi1.map(|x| x * c(0.0, rho));
        let d0 = distance_to_t(&z, &rep, &sp, &sys.gains).unwrap();
        assert!(d0 < 1e-12, "on-circle distance {d0}");
        let d2 = distance_to_t(&z.map(|x| x * c(2.0, 0.0)), &rep, &sp, &sys.gains).unwrap();
        assert!((d2 - z.norm()).abs() < 1e-12, "doubled point distance {d2}");
    }

    #[test]
    fn ill_posed_target_radius_is_reported() {
        let sys = small_system();
        let mut rep = analyze(&sys).unwrap();
        rep.lambda1 = c(-10.0, 1.0); // deep negative growth vs eta*alpha = 0.52
        let sp = Setpoints::new(
            RVector::zeros(3),
            RVector::zeros(3),
            RVector::from_vec(vec![1.0, 1.0, 1.0]),
        )
        .unwrap();
        match target_radius(&rep, &sp, &sys.gains) {
            Err(Error::IllPosedAmplitude { value }) => assert!(value <= 0.0),
            other => panic!("expected IllPosedAmplitude, got {other:?}"),
        }
    }
}
