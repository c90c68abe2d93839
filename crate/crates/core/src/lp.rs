//! Dense tableau simplex for the one LP shape the crate needs:
//!
//! maximize `c·y` subject to `A y <= b`, `y` free, with `b >= 0`.
//!
//! Because `b >= 0` the origin is feasible and the slack basis is a valid
//! starting point, so no phase one is required. Free variables are split as
//! `y = y⁺ − y⁻`. Bland's rule is used for both pivot choices.

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpOutcome {
    Optimal(f64),
    Unbounded,
}

/// Solves `max c·y s.t. rows[i]·y <= rhs[i]` with `rhs[i] >= 0`.
///
/// `rows` is row-major with `c.len()` columns.
pub fn maximize_free(rows: &[f64], rhs: &[f64], c: &[f64]) -> Result<LpOutcome, String> {
    let n = c.len();
    let m = rhs.len();
    if rows.len() != m * n {
        return Err(format!("constraint matrix has {} entries, expected {}", rows.len(), m * n));
    }
    if rhs.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
        return Err("right-hand side must be finite and nonnegative".into());
    }

    // Columns: y+ (n), y- (n), slack (m), rhs (1).
    let width = 2 * n + m + 1;
    let rhs_col = width - 1;
    let mut tab = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut tab[i * width..(i + 1) * width];
        for j in 0..n {
            let a = rows[i * n + j];
            row[j] = a;
            row[n + j] = -a;
        }
        row[2 * n + i] = 1.0;
        row[rhs_col] = rhs[i];
    }
    // Objective row holds reduced costs; the objective value accumulates in rhs_col.
    {
        let obj = &mut tab[m * width..];
        for j in 0..n {
            obj[j] = -c[j];
            obj[n + j] = c[j];
        }
    }
    let mut basis: Vec<usize> = (0..m).map(|i| 2 * n + i).collect();

    let max_iter = 50 * (m + 2 * n + 1);
    for _ in 0..max_iter {
        let obj = &tab[m * width..];
        let entering = match (0..rhs_col).find(|&j| obj[j] < -PIVOT_TOL) {
            Some(j) => j,
            None => return Ok(LpOutcome::Optimal(tab[m * width + rhs_col])),
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab[i * width + entering];
            if a > PIVOT_TOL {
                let ratio = tab[i * width + rhs_col] / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio - PIVOT_TOL
                            || (ratio <= best_ratio + PIVOT_TOL && basis[i] < basis[best])
                        {
                            Some((i, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
        }
        let (pivot_row, _) = match leaving {
            Some(l) => l,
            None => return Ok(LpOutcome::Unbounded),
        };
        pivot(&mut tab, width, m + 1, pivot_row, entering);
        basis[pivot_row] = entering;
    }
    Err("simplex iteration limit reached".into())
}

fn pivot(tab: &mut [f64], width: usize, nrows: usize, prow: usize, pcol: usize) {
    let p = tab[prow * width + pcol];
    for v in &mut tab[prow * width..(prow + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = tab[prow * width..(prow + 1) * width].to_vec();
    for i in 0..nrows {
        if i == prow {
            continue;
        }
        let f = tab[i * width + pcol];
        if f != 0.0 {
            let row = &mut tab[i * width..(i + 1) * width];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[pcol] = 0.0;
        }
    }
}
