//! Small dense linear algebra over a [`Scalar`].

use crate::scalar::Scalar;

/// Rank of a row-major matrix by Gaussian elimination. Pivots with magnitude
/// at or below `tol` count as zero; pass `0.0` for exact backends.
pub fn rank<S: Scalar>(rows: &[Vec<S>], tol: f64) -> usize {
    let mut m: Vec<Vec<S>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        // Largest pivot, which is harmless for rationals and needed for floats.
        let best = (r..m.len())
            .max_by(|&a, &b| Scalar::to_f64(&m[a][c]).abs().total_cmp(&Scalar::to_f64(&m[b][c]).abs()));
        let Some(p) = best else { break };
        if m[p][c].is_zero() || Scalar::to_f64(&m[p][c]).abs() <= tol {
            continue;
        }
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for k in r + 1..m.len() {
            if m[k][c].is_zero() {
                continue;
            }
            let f = m[k][c].clone() / pivot.clone();
            for j in c..cols {
                let d = f.clone() * m[r][j].clone();
                m[k][j] = m[k][j].clone() - d;
            }
        }
        r += 1;
    }
    r
}
