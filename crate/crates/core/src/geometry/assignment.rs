//! Minimum-cost perfect matching on square cost matrices.

use nalgebra::DMatrix;

/// Optimal assignment: `perm[i]` is the column matched to row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub cost: f64,
}

fn total(cost: &DMatrix<f64>, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
}

/// Exhaustive search over all `n!` permutations (Heap's algorithm).
pub fn exhaustive(cost: &DMatrix<f64>) -> Assignment {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = Assignment {
        cost: total(cost, &perm),
        perm: perm.clone(),
    };
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = total(cost, &perm);
            if v < best.cost {
                best = Assignment {
                    cost: v,
                    perm: perm.clone(),
                };
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Hungarian method with row/column potentials, `O(n³)`.
pub fn hungarian(cost: &DMatrix<f64>) -> Assignment {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    if n == 0 {
        return Assignment {
            perm: vec![],
            cost: 0.0,
        };
    }
    // 1-based arrays; index 0 is the virtual root of each augmenting tree
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[(r - 1, col - 1)] - u[r] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[matched_row[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            matched_row[col0] = matched_row[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for col in 1..=n {
        perm[matched_row[col] - 1] = col - 1;
    }
    Assignment {
        cost: total(cost, &perm),
        perm,
    }
}

/// Exhaustive for `n ≤ 8`, Hungarian above.
pub fn optimal_assignment(cost: &DMatrix<f64>) -> Assignment {
    if cost.nrows() <= 8 {
        exhaustive(cost)
    } else {
        hungarian(cost)
    }
}
