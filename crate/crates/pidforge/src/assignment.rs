//! Minimum-cost bipartite assignment (Hungarian algorithm, potentials
//! formulation, O(n^3)).

/// Solves the square assignment problem. `cost[i][j]` is the cost of
/// assigning row `i` to column `j`. Returns (total cost, row -> column).
///
/// Deterministic: ties between equally cheap assignments resolve by the
/// scan order of the matrix, so callers control tie-breaking by ordering
/// rows and columns.
pub fn solve_square(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));
    debug_assert!(cost.iter().flatten().all(|c| c.is_finite()));

    // 1-indexed; p[j] = row matched to column j, 0 = unmatched.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i][row_to_col[i]]).sum();
    (total, row_to_col)
}

/// Rectangular assignment: pads `rows x cols` to a square with `pad` cost
/// and returns, per real row, the real column it got (or `None` when the
/// row landed on a dummy column).
pub fn solve_rectangular(cost: &[Vec<f64>], cols: usize, pad: f64) -> Vec<Option<usize>> {
    let rows = cost.len();
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let square: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < rows && j < cols {
                        cost[i][j]
                    } else {
                        pad
                    }
                })
                .collect()
        })
        .collect();
    let (_, assign) = solve_square(&square);
    (0..rows)
        .map(|i| {
            let j = assign[i];
            (j < cols).then_some(j)
        })
        .collect()
}
