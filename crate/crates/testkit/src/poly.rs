//! Eigenvalues via the characteristic polynomial.
//!
//! The coefficients come from the Faddeev-LeVerrier trace recurrence and
//! the roots from Durand-Kerner simultaneous iteration. Slow and only fit
//! for small matrices with separated spectra — exactly what the oracle
//! tests use, and entirely disjoint from any Schur-based code path.

use cdroop_core::{CMatrix, C64};

/// Coefficients `c[0..n]` of `p(z) = z^n + c[n-1] z^{n-1} + ... + c[0]`.
pub fn char_poly(a: &CMatrix) -> Vec<C64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "square matrix required");
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut m = CMatrix::identity(n, n);
    for k in 1..=n {
        let am = a * &m;
        let ck = -am.trace() / C64::new(k as f64, 0.0);
        c[n - k] = ck;
        m = am + CMatrix::identity(n, n) * ck;
    }
    c
}

/// All roots of the monic polynomial with low-to-high coefficients `c`
/// (leading 1 implied), by Durand-Kerner iteration.
pub fn poly_roots(c: &[C64]) -> Vec<C64> {
    let n = c.len();
    if n == 0 {
        return Vec::new();
    }
    // Rescale so every root lands within roughly the unit disk (Cauchy
    // bound), which keeps the standard starting spiral effective.
    let s = 1.0 + c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let q: Vec<C64> = c
        .iter()
        .enumerate()
        .map(|(k, &ck)| ck / C64::new(s.powi((n - k) as i32), 0.0))
        .collect();
    let eval = |z: C64| -> C64 {
        let mut p = C64::new(1.0, 0.0);
        for k in (0..n).rev() {
            p = p * z + q[k];
        }
        p
    };
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|i| seed.powu(i as u32 + 1)).collect();
    for _ in 0..2000 {
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() < 1e-280 {
                denom = C64::new(1e-280, 0.0);
            }
            let d = eval(z[i]) / denom;
            z[i] -= d;
            worst = worst.max(d.norm());
        }
        if worst < 1e-14 {
            break;
        }
    }
    z.into_iter().map(|w| w * C64::new(s, 0.0)).collect()
}

/// Eigenvalues by characteristic-polynomial roots, sorted by descending
/// real part (ties by descending imaginary part).
pub fn eigenvalues_oracle(a: &CMatrix) -> Vec<C64> {
    let mut roots = poly_roots(&char_poly(a));
    roots.sort_by(|p, q| {
        (q.re, q.im)
            .partial_cmp(&(p.re, p.im))
            .expect("finite eigenvalues")
    });
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_roundtrips() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 1.0),
            C64::new(-2.0, 0.5),
            C64::new(0.0, -4.0),
        ]));
        let eigs = eigenvalues_oracle(&d);
        assert!((eigs[0] - C64::new(3.0, 1.0)).norm() < 1e-10);
        assert!((eigs[1] - C64::new(0.0, -4.0)).norm() < 1e-10);
        assert!((eigs[2] - C64::new(-2.0, 0.5)).norm() < 1e-10);
    }

    #[test]
    fn quadratic_roots_are_exact() {
        // z^2 - 2z + 5 = 0 has roots 1 +- 2i.
        let roots = poly_roots(&[C64::new(5.0, 0.0), C64::new(-2.0, 0.0)]);
        let mut norms: Vec<f64> = roots
            .iter()
            .map(|r| {
                (r - C64::new(1.0, 2.0))
                    .norm()
                    .min((r - C64::new(1.0, -2.0)).norm())
            })
            .collect();
        norms.sort_by(f64::total_cmp);
        assert!(norms[1] < 1e-12);
    }
}
