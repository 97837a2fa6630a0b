//! Real symmetric eigenvalues by cyclic Jacobi rotations, and the
//! complex-Hermitian reductions built on top of them.

use cdroop_core::{CMatrix, RMatrix};

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn jacobi_eigenvalues(m: &RMatrix) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(m.ncols(), n, "square matrix required");
    let scale = m.norm().max(1e-300);
    let mut a = m.clone();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// The real `2n x 2n` image `[[Re H, -Im H], [Im H, Re H]]` of a complex
/// matrix. For Hermitian `H` it is symmetric and carries each eigenvalue
/// of `H` twice.
pub fn real_embedding(h: &CMatrix) -> RMatrix {
    let n = h.nrows();
    assert_eq!(h.ncols(), n, "square matrix required");
    RMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => h[(i, j)].re,
        (true, false) => -h[(i, j - n)].im,
        (false, true) => h[(i - n, j)].im,
        (false, false) => h[(i - n, j - n)].re,
    })
}

/// Largest singular value of a complex matrix, via Jacobi eigenvalues of
/// the real embedding of `B^H B`.
pub fn spectral_norm_oracle(b: &CMatrix) -> f64 {
    let h = b.adjoint() * b;
    let ev = jacobi_eigenvalues(&real_embedding(&h));
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}
