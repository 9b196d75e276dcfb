use crate::latentmath::dot;

/// Modified Gram–Schmidt, run twice for stability. Returns `false` if a row collapses.
pub(crate) fn orthonormalize_rows(rows: &mut [Vec<f64>]) -> bool {
    for _ in 0..2 {
        for i in 0..rows.len() {
            let (done, rest) = rows.split_at_mut(i);
            let row = &mut rest[0];
            for prev in done.iter() {
                let c = dot(row, prev);
                for (r, p) in row.iter_mut().zip(prev) {
                    *r -= c * p;
                }
            }
            let n = dot(row, row).sqrt();
            if n < 1e-12 {
                return false;
            }
            for r in row.iter_mut() {
                *r /= n;
            }
        }
    }
    true
}

/// Largest `|row_i·row_j − δ_ij|` over all pairs.
pub(crate) fn orthonormality_error(rows: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i..rows.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&rows[i], &rows[j]) - target).abs());
        }
    }
    worst
}
