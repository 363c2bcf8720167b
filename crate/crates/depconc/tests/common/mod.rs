//! Independent oracles for the test suites. Everything here deliberately
//! avoids the library's solver paths: transport values come from vertex
//! enumeration, operator norms from a Jacobi eigensolver, comparison series
//! from truncated Neumann sums.

#![allow(dead_code)]

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(sym: &[Vec<f64>]) -> Vec<f64> {
    let n = sym.len();
    let mut a: Vec<Vec<f64>> = sym.to_vec();
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[p][q].abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Largest singular value of a rectangular matrix via Jacobi on the Gram
/// matrix.
pub fn jacobi_operator_norm(m: &[Vec<f64>]) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let mut gram = vec![vec![0.0; cols]; cols];
    for (i, gi) in gram.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            *gij = (0..rows).map(|r| m[r][i] * m[r][j]).sum();
        }
    }
    jacobi_eigenvalues(&gram)
        .into_iter()
        .fold(0.0f64, f64::max)
        .max(0.0)
        .sqrt()
}

// Solves a small dense linear system in place; returns None when a pivot
// degenerates.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
        }
        b[col] /= p;
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r][j] -= factor * a[col][j];
            }
            b[r] -= factor * b[col];
        }
    }
    Some(b)
}

/// Exact minimum of `<cost, x>` over the transportation polytope by
/// enumerating every basic solution (supports of size m + k - 1). Only
/// sensible for tiny instances; that is the point of an oracle.
pub fn brute_force_transport_value(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> f64 {
    let m = p.len();
    let k = q.len();
    let cells = m * k;
    let basis_size = m + k - 1;
    assert!(cells <= 20, "oracle is for tiny instances");
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells) {
        if mask.count_ones() as usize != basis_size {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| (c / k, c % k))
            .collect();
        // Constraints: all row sums, all but the last column sum (the last
        // is implied by mass balance).
        let mut a = vec![vec![0.0; basis_size]; basis_size];
        let mut b = vec![0.0; basis_size];
        for (row, bi) in b.iter_mut().take(m).enumerate() {
            *bi = p[row];
        }
        for (col, bi) in b.iter_mut().skip(m).enumerate() {
            *bi = q[col];
        }
        for (var, &(i, j)) in chosen.iter().enumerate() {
            a[i][var] = 1.0;
            if j < k - 1 {
                a[m + j][var] = 1.0;
            }
        }
        let Some(x) = solve_dense(a, b) else { continue };
        if x.iter().any(|v| *v < -1e-9) {
            continue;
        }
        let value: f64 = chosen.iter().zip(&x).map(|(&(i, j), v)| cost[i][j] * v).sum();
        best = best.min(value);
    }
    best
}

/// Truncated Neumann series `sum_{m <= terms} C^m`.
pub fn neumann_sum(c: &[Vec<f64>], terms: usize) -> Vec<Vec<f64>> {
    let n = c.len();
    let mut sum = vec![vec![0.0; n]; n];
    let mut power = vec![vec![0.0; n]; n];
    for i in 0..n {
        sum[i][i] = 1.0;
        power[i][i] = 1.0;
    }
    for _ in 1..=terms {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in 0..n {
                let w = power[i][l];
                if w == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i][j] += w * c[l][j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += next[i][j];
            }
        }
        power = next;
    }
    sum
}
