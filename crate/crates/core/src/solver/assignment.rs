use crate::error::{Error, Result};
use crate::model::BinaryMatrix;

/// Minimum-cost assignment of every row to a distinct column (rows ≤ cols),
/// O(rows² · cols). Infinite costs mark forbidden cells; the caller must make
/// sure a finite complete assignment exists. Returns the cost and the
/// column chosen for each row.
fn hungarian_min(a: &[Vec<f64>], cols: usize) -> (f64, Vec<usize>) {
    let n = a.len();
    let inf = f64::INFINITY;
    // 1-based potentials, column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
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
    let mut col_of = vec![0; n];
    for j in 1..=cols {
        if p[j] != 0 {
            col_of[p[j] - 1] = j - 1;
        }
    }
    let total = col_of.iter().enumerate().map(|(r, &c)| a[r][c]).sum();
    (total, col_of)
}

/// Best total weight when only `users` and `uavs` remain available.
fn best_weight(cost: &[Vec<f64>], users: &[usize], uavs: &[usize]) -> f64 {
    if users.is_empty() || uavs.is_empty() {
        return 0.0;
    }
    // rows = UAVs, columns = users followed by one zero-cost dummy per UAV
    let cols = users.len() + uavs.len();
    let a: Vec<Vec<f64>> = uavs
        .iter()
        .map(|&j| {
            let mut row: Vec<f64> = users
                .iter()
                .map(|&i| {
                    let c = cost[i][j];
                    if c.is_finite() {
                        -c
                    } else {
                        f64::INFINITY
                    }
                })
                .collect();
            row.extend(std::iter::repeat_n(0.0, uavs.len()));
            row
        })
        .collect();
    -hungarian_min(&a, cols).0
}

/// Max-weight assignment of users (rows of the N×J `cost`) to UAVs, each
/// user and each UAV used at most once. Non-finite costs forbid a pair.
///
/// Among optimal assignments the lexicographically smallest is returned:
/// user 0 takes the lowest-indexed UAV compatible with optimality (being
/// unserved ranks last), then user 1, and so on.
pub fn solve_assignment(cost: &[Vec<f64>], uavs: usize) -> Result<BinaryMatrix> {
    if let Some(i) = cost.iter().position(|r| r.len() != uavs) {
        return Err(Error::DimensionMismatch(format!(
            "cost row {i} has {} entries, expected {uavs}",
            cost[i].len()
        )));
    }
    if cost.iter().flatten().any(|c| c.is_nan()) {
        return Err(Error::InvalidParameter("NaN in assignment cost".into()));
    }
    let n = cost.len();
    let optimum = best_weight(
        cost,
        &(0..n).collect::<Vec<_>>(),
        &(0..uavs).collect::<Vec<_>>(),
    );
    let slack = 1e-9 * (1.0 + optimum.abs());

    let mut servers = vec![None; n];
    let mut free: Vec<usize> = (0..uavs).collect();
    let mut fixed = 0.0;
    for i in 0..n {
        let rest: Vec<usize> = (i + 1..n).collect();
        let mut chosen = None;
        for (pos, &j) in free.iter().enumerate() {
            let c = cost[i][j];
            if !c.is_finite() {
                continue;
            }
            let mut others = free.clone();
            others.remove(pos);
            if fixed + c + best_weight(cost, &rest, &others) >= optimum - slack {
                chosen = Some((pos, j, c));
                break;
            }
        }
        if let Some((pos, j, c)) = chosen {
            servers[i] = Some(j);
            fixed += c;
            free.remove(pos);
        }
    }
    BinaryMatrix::from_servers(&servers, uavs)
}

/// `Σ c_ij s_ij` for a delivery matrix.
pub fn assignment_weight(cost: &[Vec<f64>], s: &BinaryMatrix) -> f64 {
    let mut w = 0.0;
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if s.get(i, j) {
                w += c;
            }
        }
    }
    w
}
