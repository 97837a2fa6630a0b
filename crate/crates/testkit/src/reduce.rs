//! Network reduction by sequential node elimination.

use cdroop_core::CMatrix;

/// Eliminate the trailing nodes of a nodal admittance matrix one at a
/// time (`Y'_ij = Y_ij - Y_in Y_nj / Y_nn`), keeping the first `keep`
/// nodes. Algebraically equal to the block Schur complement onto those
/// nodes, computed by a different route.
pub fn eliminate_trailing(y: &CMatrix, keep: usize) -> CMatrix {
    let mut a = y.clone();
    let mut n = a.nrows();
    assert_eq!(a.ncols(), n, "square matrix required");
    assert!(keep <= n, "cannot keep more nodes than exist");
    while n > keep {
        let d = a[(n - 1, n - 1)];
        assert!(
            d.norm() > 1e-300,
            "zero pivot while eliminating node {}",
            n - 1
        );
        let mut next = CMatrix::zeros(n - 1, n - 1);
        for i in 0..(n - 1) {
            for j in 0..(n - 1) {
                next[(i, j)] = a[(i, j)] - a[(i, n - 1)] * a[(n - 1, j)] / d;
            }
        }
        a = next;
        n -= 1;
    }
    a
}
