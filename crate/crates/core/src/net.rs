//! Network admittance models and graph reductions.
//!
//! A [`FullNetwork`] describes the physical grid: every bus, every branch
//! admittance, every shunt. The analysis machinery only ever sees a
//! [`NetworkModel`]: the Kron reduction of the full grid onto the converter
//! buses, split into an exact complex Laplacian `Y` (zero row sums) plus a
//! per-node shunt vector holding whatever the reduction left on the
//! diagonal. Keeping the Laplacian exact matters because the certificates
//! reason about the spectrum of the rotated Laplacian `Re(e^{j*phi} Y)`.
//!
//! Conventions: `Y[k][l]` for `k != l` is minus the branch admittance
//! between `k` and `l`, and a branch weight is "rotated" by multiplying
//! with `e^{j*phi}` before taking real parts. Rotating by the impedance
//! angle turns a resistive-inductive branch into a nonnegative weight.

use nalgebra::SymmetricEigen;

use crate::{CMatrix, CVector, Error, RMatrix, Result, C64};

/// Smallest algebraic connectivity still considered connected.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

/// Relative tolerance for symmetry and zero-row-sum checks.
pub const LAPLACIAN_TOL: f64 = 1e-12;

/// A branch between two buses with its complex admittance `1/(r + jx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub admittance: C64,
}

impl Branch {
    pub fn new(from: usize, to: usize, admittance: C64) -> Self {
        Branch {
            from,
            to,
            admittance,
        }
    }

    /// Branch from series resistance and reactance.
    pub fn from_impedance(from: usize, to: usize, r: f64, x: f64) -> Self {
        Branch::new(from, to, C64::new(1.0, 0.0) / C64::new(r, x))
    }
}

/// The physical grid before reduction: all buses, branches and shunts.
#[derive(Debug, Clone)]
pub struct FullNetwork {
    pub n_total: usize,
    pub branches: Vec<Branch>,
    /// Shunt admittance per bus (zero where absent), length `n_total`.
    pub shunts: Vec<C64>,
    /// Buses hosting converters, in the node order of the reduced model.
    pub converter_buses: Vec<usize>,
}

impl FullNetwork {
    pub fn new(
        n_total: usize,
        branches: Vec<Branch>,
        shunts: Vec<C64>,
        converter_buses: Vec<usize>,
    ) -> Result<Self> {
        if n_total == 0 {
            return Err(Error::InvalidParameter("network has no buses".into()));
        }
        if shunts.len() != n_total {
            return Err(Error::DimensionMismatch {
                context: "shunt vector",
                expected: n_total,
                got: shunts.len(),
            });
        }
        if converter_buses.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one converter bus is required".into(),
            ));
        }
        let mut seen = vec![false; n_total];
        for &b in &converter_buses {
            if b >= n_total {
                return Err(Error::InvalidParameter(format!(
                    "converter bus {b} out of range (n_total = {n_total})"
                )));
            }
            if seen[b] {
                return Err(Error::InvalidParameter(format!(
                    "converter bus {b} listed twice"
                )));
            }
            seen[b] = true;
        }
        for br in &branches {
            if br.from >= n_total || br.to >= n_total {
                return Err(Error::InvalidParameter(format!(
                    "branch ({}, {}) out of range",
                    br.from, br.to
                )));
            }
            if br.from == br.to {
                return Err(Error::InvalidParameter(format!(
                    "self-loop at bus {}",
                    br.from
                )));
            }
            if !br.admittance.re.is_finite() || !br.admittance.im.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite branch admittance on ({}, {})",
                    br.from, br.to
                )));
            }
            if br.admittance.re < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "branch ({}, {}) has negative conductance {:.3e}",
                    br.from, br.to, br.admittance.re
                )));
            }
        }
        Ok(FullNetwork {
            n_total,
            branches,
            shunts,
            converter_buses,
        })
    }

    /// Buses without converters, ascending.
    pub fn load_buses(&self) -> Vec<usize> {
        let mut conv = vec![false; self.n_total];
        for &b in &self.converter_buses {
            conv[b] = true;
        }
        (0..self.n_total).filter(|&b| !conv[b]).collect()
    }

    /// Full bus admittance matrix: branch Laplacian plus shunt diagonal.
    pub fn admittance_matrix(&self) -> CMatrix {
        let n = self.n_total;
        let mut y = CMatrix::zeros(n, n);
        for br in &self.branches {
            let (k, l, a) = (br.from, br.to, br.admittance);
            y[(k, k)] += a;
            y[(l, l)] += a;
            y[(k, l)] -= a;
            y[(l, k)] -= a;
        }
        for (b, &s) in self.shunts.iter().enumerate() {
            y[(b, b)] += s;
        }
        y
    }

    fn real_branch_laplacian(&self) -> RMatrix {
        let n = self.n_total;
        let mut l = RMatrix::zeros(n, n);
        for br in &self.branches {
            let (k, q, w) = (br.from, br.to, br.admittance.re);
            l[(k, k)] += w;
            l[(q, q)] += w;
            l[(k, q)] -= w;
            l[(q, k)] -= w;
        }
        l
    }
}

/// Reduced network as the analysis sees it: an exact complex Laplacian over
/// the converter nodes, the shunts absorbed off it, and the rotation angle.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub n: usize,
    /// Complex symmetric Laplacian (zero row sums to [`LAPLACIAN_TOL`]).
    pub y: CMatrix,
    /// Shunt admittance seen at each converter node after reduction.
    pub shunts: CVector,
    /// Rotation angle in `[0, pi/2]` applied as `e^{j*phi}`.
    pub phi: f64,
}

impl NetworkModel {
    /// Validating constructor for an already-reduced model.
    pub fn from_parts(y: CMatrix, shunts: CVector, phi: f64) -> Result<Self> {
        let n = y.nrows();
        if n == 0 || y.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "admittance matrix",
                expected: n,
                got: y.ncols(),
            });
        }
        if shunts.len() != n {
            return Err(Error::DimensionMismatch {
                context: "shunt vector",
                expected: n,
                got: shunts.len(),
            });
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&phi) {
            return Err(Error::InvalidParameter(format!(
                "rotation angle {phi} outside [0, pi/2]"
            )));
        }
        let scale = matrix_scale(&y);
        check_symmetric(&y, scale)?;
        check_zero_row_sums(&y, scale)?;
        let model = NetworkModel { n, y, shunts, phi };
        if n > 1 {
            let lam2 = second_smallest_eigenvalue(&model.real_part());
            if lam2 <= CONNECTIVITY_TOL {
                return Err(Error::DisconnectedGraph { lambda2: lam2 });
            }
        }
        Ok(model)
    }

    /// Reduced admittance with shunts reattached to the diagonal.
    pub fn full_admittance(&self) -> CMatrix {
        let mut y = self.y.clone();
        for k in 0..self.n {
            y[(k, k)] += self.shunts[k];
        }
        y
    }

    fn real_part(&self) -> RMatrix {
        self.y.map(|z| z.re)
    }

    /// Entrywise real part of `e^{j*phi} Y`.
    pub fn rotated_laplacian(&self) -> RMatrix {
        let rot = C64::from_polar(1.0, self.phi);
        self.y.map(|z| (rot * z).re)
    }
}

/// Kron-reduce the full grid onto its converter buses.
///
/// Interior (load) buses are eliminated through the Schur complement
/// `Y_cc - Y_cl Y_ll^{-1} Y_lc`, the result is symmetrized, and whatever
/// the elimination leaves on the diagonal is split off as shunts so the
/// returned model carries an exact Laplacian. `phi` becomes the rotation
/// angle of the reduced model.
pub fn kron_reduce(full: &FullNetwork, phi: f64) -> Result<NetworkModel> {
    if full.n_total > 1 {
        let lam2 = second_smallest_eigenvalue(&full.real_branch_laplacian());
        if lam2 <= CONNECTIVITY_TOL {
            return Err(Error::DisconnectedGraph { lambda2: lam2 });
        }
    }
    let y_full = full.admittance_matrix();
    let conv = &full.converter_buses;
    let loads = full.load_buses();

    let y_cc = submatrix(&y_full, conv, conv);
    let reduced = if loads.is_empty() {
        y_cc
    } else {
        let y_ll = submatrix(&y_full, &loads, &loads);
        let y_cl = submatrix(&y_full, conv, &loads);
        let y_lc = submatrix(&y_full, &loads, conv);
        let lu = y_ll.lu();
        let diag = lu.u().diagonal();
        let dmax = diag.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let dmin = diag.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if dmax == 0.0 || dmin <= 1e-12 * dmax {
            return Err(Error::SingularInterior);
        }
        let x = lu.solve(&y_lc).ok_or(Error::SingularInterior)?;
        let schur = &y_cc - &y_cl * x;
        symmetrize(&schur)
    };

    let (y_lap, shunts) = absorb_shunts(&reduced)?;
    NetworkModel::from_parts(y_lap, shunts, phi)
}

/// Split a symmetric admittance matrix into an exact Laplacian plus a shunt
/// diagonal, such that `Y + diag(shunts)` reassembles the input bitwise.
///
/// Off-diagonal entries are kept untouched; each diagonal entry is replaced
/// by the negated off-diagonal row sum and the remainder becomes the shunt.
/// A short fixed-point correction makes the `diag + shunt` pair reassemble
/// the original diagonal entry exactly in floating point.
pub fn absorb_shunts(y_in: &CMatrix) -> Result<(CMatrix, CVector)> {
    let n = y_in.nrows();
    if n == 0 || y_in.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "admittance matrix",
            expected: n,
            got: y_in.ncols(),
        });
    }
    check_symmetric(y_in, matrix_scale(y_in))?;

    let mut y = y_in.clone();
    let mut shunts = CVector::zeros(n);
    for k in 0..n {
        let mut off = C64::new(0.0, 0.0);
        for l in 0..n {
            if l != k {
                off += y_in[(k, l)];
            }
        }
        let (dr, sr) = split_exact(y_in[(k, k)].re, off.re);
        let (di, si) = split_exact(y_in[(k, k)].im, off.im);
        y[(k, k)] = C64::new(dr, di);
        shunts[k] = C64::new(sr, si);
    }
    Ok((y, shunts))
}

/// Split `total` into `diag + shunt` with `diag` close to `-offsum` and the
/// floating-point sum `diag + shunt` reproducing `total` bitwise.
fn split_exact(total: f64, offsum: f64) -> (f64, f64) {
    let mut diag = -offsum;
    let mut shunt = total - diag;
    for _ in 0..4 {
        if diag + shunt == total {
            return (diag, shunt);
        }
        diag = total - shunt;
        if diag + shunt == total {
            return (diag, shunt);
        }
        shunt = total - diag;
    }
    (diag, shunt)
}

/// Algebraic connectivity of the rotated Laplacian `Re(e^{j*phi} Y)`.
///
/// This is the second-smallest eigenvalue; it is the conservative choice of
/// "second eigenvalue" for the synchronization certificate and doubles as
/// the connectivity test of the rotated graph. Fails with
/// [`Error::NegativeWeight`] if rotation drives any effective branch weight
/// negative, and with [`Error::DisconnectedGraph`] if the connectivity
/// drops below [`CONNECTIVITY_TOL`]. A single-node model returns infinity.
pub fn rotated_connectivity(net: &NetworkModel) -> Result<f64> {
    Ok(rotated_laplacian_eigenvalues(net)?.connectivity)
}

/// Both certificate-relevant eigenvalues of the rotated Laplacian.
#[derive(Debug, Clone, Copy)]
pub struct RotatedSpectrum {
    /// Second-smallest eigenvalue (algebraic connectivity).
    pub connectivity: f64,
    /// Second-largest eigenvalue, reported alongside for comparison.
    pub second_largest: f64,
}

/// Eigenvalues of `Re(e^{j*phi} Y)` distilled to the two "second" readings.
pub fn rotated_laplacian_eigenvalues(net: &NetworkModel) -> Result<RotatedSpectrum> {
    let l = net.rotated_laplacian();
    let n = l.nrows();
    let tol = LAPLACIAN_TOL * matrix_scale(&net.y).max(1.0);
    for k in 0..n {
        for q in 0..n {
            if k != q && l[(k, q)] > tol {
                return Err(Error::NegativeWeight {
                    k,
                    l: q,
                    weight: -l[(k, q)],
                });
            }
        }
    }
    if n == 1 {
        return Ok(RotatedSpectrum {
            connectivity: f64::INFINITY,
            second_largest: f64::INFINITY,
        });
    }
    let mut eigs: Vec<f64> = SymmetricEigen::new(symmetrize_real(&l))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let connectivity = eigs[1];
    if connectivity <= CONNECTIVITY_TOL {
        return Err(Error::DisconnectedGraph {
            lambda2: connectivity,
        });
    }
    Ok(RotatedSpectrum {
        connectivity,
        second_largest: eigs[n - 2],
    })
}

fn second_smallest_eigenvalue(l: &RMatrix) -> f64 {
    let mut eigs: Vec<f64> = SymmetricEigen::new(symmetrize_real(l))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs[1]
}

fn submatrix(y: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| y[(rows[i], cols[j])])
}

fn symmetrize(y: &CMatrix) -> CMatrix {
    let mut s = y.clone();
    for k in 0..y.nrows() {
        for l in (k + 1)..y.ncols() {
            let m = (y[(k, l)] + y[(l, k)]) * 0.5;
            s[(k, l)] = m;
            s[(l, k)] = m;
        }
    }
    s
}

fn symmetrize_real(l: &RMatrix) -> RMatrix {
    let mut s = l.clone();
    for k in 0..l.nrows() {
        for q in (k + 1)..l.ncols() {
            let m = 0.5 * (l[(k, q)] + l[(q, k)]);
            s[(k, q)] = m;
            s[(q, k)] = m;
        }
    }
    s
}

pub(crate) fn matrix_scale(y: &CMatrix) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0_f64, f64::max)
}

fn check_symmetric(y: &CMatrix, scale: f64) -> Result<()> {
    let mut max_asym = 0.0_f64;
    for k in 0..y.nrows() {
        for l in (k + 1)..y.ncols() {
            max_asym = max_asym.max((y[(k, l)] - y[(l, k)]).norm());
        }
    }
    if max_asym > LAPLACIAN_TOL * scale.max(1.0) {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }
    Ok(())
}

fn check_zero_row_sums(y: &CMatrix, scale: f64) -> Result<()> {
    for k in 0..y.nrows() {
        let sum: C64 = y.row(k).iter().sum();
        if sum.norm() > LAPLACIAN_TOL * scale.max(1.0) * y.nrows() as f64 {
            return Err(Error::InvalidParameter(format!(
                "row {k} of the Laplacian sums to {:.3e}, not zero",
                sum.norm()
            )));
        }
    }
    Ok(())
}

/// Build a reduced model directly from converter-level branches and shunts.
///
/// Convenience for test systems and configs whose buses all host
/// converters; equivalent to [`kron_reduce`] with no interior buses.
pub fn model_from_branches(
    n: usize,
    branches: &[Branch],
    shunts: &[C64],
    phi: f64,
) -> Result<NetworkModel> {
    let full = FullNetwork::new(n, branches.to_vec(), shunts.to_vec(), (0..n).collect())?;
    kron_reduce(&full, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn line(n: usize, y: C64) -> Vec<Branch> {
        (0..n - 1).map(|k| Branch::new(k, k + 1, y)).collect()
    }

    #[test]
    fn two_bus_identity_reduction() {
        // No interior buses: reduction must return the assembled Laplacian.
        let y = c(1.0, -2.0);
        let full = FullNetwork::new(2, line(2, y), vec![c(0.0, 0.0); 2], vec![0, 1]).unwrap();
        let net = kron_reduce(&full, 0.3).unwrap();
        assert_eq!(net.y[(0, 0)], y);
        assert_eq!(net.y[(0, 1)], -y);
        assert_eq!(net.shunts[0], c(0.0, 0.0));
        assert_eq!(net.shunts[1], c(0.0, 0.0));
    }

    #[test]
    fn chain_through_interior_bus() {
        // Two branches y1, y2 in series through one interior bus reduce to
        // the harmonic combination y1*y2/(y1+y2) between the endpoints.
        let y1 = c(2.0, -1.0);
        let y2 = c(1.0, -3.0);
        let branches = vec![Branch::new(0, 2, y1), Branch::new(2, 1, y2)];
        let full = FullNetwork::new(3, branches, vec![c(0.0, 0.0); 3], vec![0, 1]).unwrap();
        let net = kron_reduce(&full, 0.0).unwrap();
        let expected = y1 * y2 / (y1 + y2);
        assert!((net.y[(0, 1)] + expected).norm() < 1e-14 * expected.norm());
        assert!((net.y[(0, 0)] - expected).norm() < 1e-14 * expected.norm());
    }

    #[test]
    fn interior_shunt_becomes_converter_shunt() {
        // A shunt on the eliminated bus must reappear distributed onto the
        // converter diagonal, not vanish: row sums of the raw reduction are
        // nonzero, and absorb_shunts splits them off.
        let y1 = c(2.0, -1.0);
        let y2 = c(1.0, -3.0);
        let sh = c(0.3, 0.7);
        let branches = vec![Branch::new(0, 2, y1), Branch::new(2, 1, y2)];
        let mut shunts = vec![c(0.0, 0.0); 3];
        shunts[2] = sh;
        let full = FullNetwork::new(3, branches, shunts, vec![0, 1]).unwrap();
        let net = kron_reduce(&full, 0.0).unwrap();
        let total: C64 = net.shunts.iter().sum();
        assert!(total.norm() > 0.05);
        // Row sums of the Laplacian stay zero.
        for k in 0..2 {
            let s: C64 = net.y.row(k).iter().sum();
            assert!(s.norm() < 1e-13);
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let branches = vec![
            Branch::new(0, 1, c(1.0, -1.0)),
            Branch::new(2, 3, c(1.0, -1.0)),
        ];
        let full = FullNetwork::new(4, branches, vec![c(0.0, 0.0); 4], vec![0, 1, 2, 3]).unwrap();
        match kron_reduce(&full, 0.0) {
            Err(Error::DisconnectedGraph { .. }) => {}
            other => panic!("expected DisconnectedGraph, got {other:?}"),
        }
    }

    #[test]
    fn singular_interior_is_rejected() {
        // Interior bus with no connection to anything: Y_ll = 0.
        let branches = vec![Branch::new(0, 1, c(1.0, -1.0))];
        let full = FullNetwork::new(3, branches, vec![c(0.0, 0.0); 3], vec![0, 1]).unwrap();
        match kron_reduce(&full, 0.0) {
            Err(Error::SingularInterior) | Err(Error::DisconnectedGraph { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn absorb_shunts_rejects_asymmetric_input() {
        let mut y = CMatrix::zeros(2, 2);
        y[(0, 1)] = c(1.0, 0.0);
        y[(1, 0)] = c(2.0, 0.0);
        match absorb_shunts(&y) {
            Err(Error::NotSymmetric { .. }) => {}
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn rotation_recovers_inductive_weights() {
        // A purely inductive branch has zero conductance; rotating by
        // phi = pi/2 exposes the susceptance as a positive weight.
        let y = c(1e-9, -2.0);
        let full = FullNetwork::new(2, line(2, y), vec![c(0.0, 0.0); 2], vec![0, 1]).unwrap();
        let net = kron_reduce(&full, std::f64::consts::FRAC_PI_2).unwrap();
        let lam2 = rotated_connectivity(&net).unwrap();
        // Laplacian of a single branch of weight w has eigenvalues {0, 2w}.
        assert!((lam2 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rotated_weight_is_flagged() {
        // Capacitive branch (positive susceptance) rotated by pi/2 yields a
        // negative effective weight.
        let y = c(0.1, 2.0);
        let full = FullNetwork::new(2, line(2, y), vec![c(0.0, 0.0); 2], vec![0, 1]).unwrap();
        let net = kron_reduce(&full, 0.0).unwrap();
        let mut net_rot = net;
        net_rot.phi = std::f64::consts::FRAC_PI_2;
        match rotated_connectivity(&net_rot) {
            Err(Error::NegativeWeight { .. }) => {}
            other => panic!("expected NegativeWeight, got {other:?}"),
        }
    }

    #[test]
    fn single_node_connectivity_is_infinite() {
        let net = model_from_branches(1, &[], &[c(0.2, 0.1)], 0.0).unwrap();
        assert!(rotated_connectivity(&net).unwrap().is_infinite());
    }
}
