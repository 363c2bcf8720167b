//! Exact distances and divergences on finite spaces: total variation,
//! L1-Wasserstein with primal and dual certificates, the coupling functional
//! `Wbar`, relative entropy, exponential tilting, and log-moment-generating
//! functions.
//!
//! The Wasserstein solver is an exact transportation simplex. It returns the
//! optimal coupling together with dual potentials, and every solve is
//! certified by its primal-dual gap; at desk scale that beats approximate
//! entropic solvers, which cannot feed tolerance-pinned acceptance tests.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{CoordinateSpace, ProductModel};

/// Hard cap on the per-law state count accepted by [`wbar`]. The coupling
/// lives on the square of the state space, so this keeps a single solve under
/// ~10^6 variables.
pub const WBAR_STATE_CAP: usize = 1024;

const W1_GAP_TOL: f64 = 1e-8;
const MARGINAL_TOL: f64 = 1e-10;

/// A coupling of two finite distributions: a nonnegative matrix whose row
/// sums are the first marginal and column sums the second.
#[derive(Clone, Debug)]
pub struct CouplingTable {
    weights: Matrix,
}

impl CouplingTable {
    pub fn new(weights: Matrix, first: &[f64], second: &[f64]) -> Result<Self> {
        if weights.rows() != first.len() || weights.cols() != second.len() {
            return Err(Error::DimensionMismatch(weights.rows(), first.len()));
        }
        let mut total = 0.0;
        for i in 0..weights.rows() {
            let mut row = 0.0;
            for j in 0..weights.cols() {
                let w = weights[(i, j)];
                if w < -MARGINAL_TOL {
                    return Err(Error::SolverFailure(format!("negative coupling weight {w}")));
                }
                row += w;
            }
            total += row;
            if (row - first[i]).abs() > MARGINAL_TOL {
                return Err(Error::SolverFailure(format!(
                    "coupling row {i} sums to {row}, marginal is {}",
                    first[i]
                )));
            }
        }
        for j in 0..weights.cols() {
            let col: f64 = (0..weights.rows()).map(|i| weights[(i, j)]).sum();
            if (col - second[j]).abs() > MARGINAL_TOL {
                return Err(Error::SolverFailure(format!(
                    "coupling column {j} sums to {col}, marginal is {}",
                    second[j]
                )));
            }
        }
        if (total - 1.0).abs() > MARGINAL_TOL {
            return Err(Error::SolverFailure(format!("coupling mass is {total}")));
        }
        Ok(CouplingTable { weights })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }
}

/// Result of an exact W1 solve.
#[derive(Clone, Debug)]
pub struct TransportResult {
    pub value: f64,
    pub coupling: CouplingTable,
    /// Kantorovich dual potentials `(u, v)` with `u_i + v_j <= d(i, j)`.
    pub dual_potentials: (Vec<f64>, Vec<f64>),
    pub duality_gap: f64,
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &v in p {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidLaw(format!("{what} has entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidLaw(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Total variation distance `0.5 * ||p - q||_1 = sup_A |p(A) - q(A)|`.
pub fn tv(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Exact L1-Wasserstein distance between `p` and `q` under `metric`, with the
/// optimal coupling, dual potentials, and a primal-dual gap certificate.
pub fn w1(p: &[f64], q: &[f64], metric: &Matrix) -> Result<TransportResult> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    if metric.rows() != p.len() || metric.cols() != q.len() {
        return Err(Error::DimensionMismatch(metric.rows(), p.len()));
    }
    check_distribution(p, "w1 first argument")?;
    check_distribution(q, "w1 second argument")?;
    let sol = simplex::solve(p, q, metric)?;
    let gap = (sol.value - sol.dual_value).abs();
    if gap > W1_GAP_TOL {
        return Err(Error::SolverFailure(format!("duality gap {gap:e} exceeds {W1_GAP_TOL:e}")));
    }
    let coupling = CouplingTable::new(sol.flow, p, q)?;
    Ok(TransportResult {
        value: sol.value,
        coupling,
        dual_potentials: (sol.row_potentials, sol.col_potentials),
        duality_gap: gap,
    })
}

/// W1 under a coordinate metric, using the total-variation shortcut for
/// scaled trivial metrics.
pub fn coordinate_w1(p: &[f64], q: &[f64], space: &CoordinateSpace) -> Result<f64> {
    if let Some(alpha) = space.scaled_trivial_alpha() {
        return Ok(alpha * tv(p, q)?);
    }
    Ok(w1(p, q, space.metric())?.value)
}

/// Result of a [`wbar`] solve: a feasible value and a convexity lower bound.
#[derive(Clone, Debug)]
pub struct WbarResult {
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

const WBAR_MAX_ITERS: usize = 500;
const WBAR_REL_GAP: f64 = 1e-6;

/// Minimizes `sqrt(sum_i (E_P rho_i(X_i, Y_i))^2)` over couplings of `mu` and
/// `nu` by conditional-gradient iteration with exact line search.
///
/// Each linear subproblem is an exact transport solve. The iteration starts
/// from the W1-optimal coupling under the product metric and the line search
/// is monotone, so the returned `upper` never exceeds `W1(mu, nu)`. The
/// `lower` value is the best Frank-Wolfe convexity bound seen; `converged`
/// records whether `upper - lower <= 1e-6 * (1 + upper)` was reached within
/// the iteration budget.
pub fn wbar(mu: &[f64], nu: &[f64], model: &ProductModel) -> Result<WbarResult> {
    let total = model.state_count();
    if mu.len() != total || nu.len() != total {
        return Err(Error::DimensionMismatch(mu.len(), total));
    }
    if total > WBAR_STATE_CAP {
        return Err(Error::CapExceeded { states: total, cap: WBAR_STATE_CAP });
    }
    check_distribution(mu, "wbar first argument")?;
    check_distribution(nu, "wbar second argument")?;
    let n = model.dimension();
    let grid = model.grid();

    // Per-state digit table so coordinate distances are O(1) lookups.
    let mut digits = vec![0usize; n];
    let mut digit_table = vec![vec![0usize; total]; n];
    for idx in 0..total {
        grid.decode_into(idx, &mut digits);
        for c in 0..n {
            digit_table[c][idx] = digits[c];
        }
    }
    let coord_dist = |c: usize, x: usize, y: usize| -> f64 {
        model.coordinate(c).metric()[(digit_table[c][x], digit_table[c][y])]
    };

    // Warm start from the W1-optimal coupling under the product metric.
    let mut product_cost = Matrix::zeros(total, total);
    for x in 0..total {
        for y in 0..total {
            let mut d = 0.0;
            for c in 0..n {
                d += coord_dist(c, x, y);
            }
            product_cost[(x, y)] = d;
        }
    }
    let init = simplex::solve(mu, nu, &product_cost)?;
    let mut plan = init.flow;

    let expectations = |p: &Matrix| -> Vec<f64> {
        let mut l = vec![0.0; n];
        for x in 0..total {
            for y in 0..total {
                let w = p[(x, y)];
                if w == 0.0 {
                    continue;
                }
                for (c, lc) in l.iter_mut().enumerate() {
                    *lc += w * coord_dist(c, x, y);
                }
            }
        }
        l
    };

    let mut lower: f64 = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut current = expectations(&plan);
    let mut upper = current.iter().map(|v| v * v).sum::<f64>().sqrt();
    for iter in 0..WBAR_MAX_ITERS {
        iterations = iter;
        if upper <= 1e-15 {
            upper = 0.0;
            converged = true;
            break;
        }
        // Gradient of the objective at the current plan.
        let mut grad_cost = Matrix::zeros(total, total);
        for x in 0..total {
            for y in 0..total {
                let mut g = 0.0;
                for c in 0..n {
                    g += current[c] / upper * coord_dist(c, x, y);
                }
                grad_cost[(x, y)] = g;
            }
        }
        let sub = simplex::solve(mu, nu, &grad_cost)?;
        let target = expectations(&sub.flow);
        let inner: f64 = current.iter().zip(&target).map(|(a, b)| a * b).sum();
        let gap = upper - inner / upper;
        lower = lower.max(upper - gap.max(0.0)).min(upper);
        if upper - lower <= WBAR_REL_GAP * (1.0 + upper) {
            converged = true;
            break;
        }
        // Exact line search: the expectations are affine in the step, so the
        // squared objective is a quadratic in gamma.
        let dir: Vec<f64> = target.iter().zip(&current).map(|(b, a)| b - a).collect();
        let denom: f64 = dir.iter().map(|d| d * d).sum();
        if denom <= 0.0 {
            break;
        }
        let num: f64 = current.iter().zip(&dir).map(|(a, d)| a * d).sum();
        let gamma = (-num / denom).clamp(0.0, 1.0);
        if gamma == 0.0 {
            break;
        }
        for x in 0..total {
            for y in 0..total {
                plan[(x, y)] = (1.0 - gamma) * plan[(x, y)] + gamma * sub.flow[(x, y)];
            }
        }
        current = expectations(&plan);
        upper = current.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    Ok(WbarResult { upper, lower: lower.min(upper), iterations, converged })
}

/// Relative entropy `D(nu || mu)` in nats, `+inf` when `nu` charges a
/// `mu`-null state.
pub fn kl(nu: &[f64], mu: &[f64]) -> Result<f64> {
    if nu.len() != mu.len() {
        return Err(Error::DimensionMismatch(nu.len(), mu.len()));
    }
    let mut d = 0.0;
    for (&nv, &mv) in nu.iter().zip(mu) {
        if nv == 0.0 {
            continue;
        }
        if mv == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += nv * (nv / mv).ln();
    }
    Ok(d)
}

/// The tilted measure `e^{t f} mu / Z`, guarded against overflow by shifting
/// the exponent. Preserves the support of `mu`; `t = 0` returns `mu` exactly.
pub fn tilt(mu: &[f64], f: &[f64], t: f64) -> Result<Vec<f64>> {
    if mu.len() != f.len() {
        return Err(Error::DimensionMismatch(mu.len(), f.len()));
    }
    if t == 0.0 {
        return Ok(mu.to_vec());
    }
    let shift = mu
        .iter()
        .zip(f)
        .filter(|(m, _)| **m > 0.0)
        .map(|(_, v)| t * v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::InvalidLaw("tilting a law with empty support".into()));
    }
    let mut out: Vec<f64> = mu
        .iter()
        .zip(f)
        .map(|(&m, &v)| if m > 0.0 { m * (t * v - shift).exp() } else { 0.0 })
        .collect();
    let z: f64 = out.iter().sum();
    for o in out.iter_mut() {
        *o /= z;
    }
    Ok(out)
}

/// Logarithmic moment-generating function of the centered variable:
/// `psi_f(lambda) = log E_mu exp(lambda (f - E_mu f))`.
pub fn log_mgf(mu: &[f64], f: &[f64], lambda: f64) -> Result<f64> {
    if mu.len() != f.len() {
        return Err(Error::DimensionMismatch(mu.len(), f.len()));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let mass: f64 = mu.iter().sum();
    let mean: f64 = mu.iter().zip(f).map(|(m, v)| m * v).sum::<f64>() / mass;
    let shift = mu
        .iter()
        .zip(f)
        .filter(|(m, _)| **m > 0.0)
        .map(|(_, v)| lambda * (v - mean))
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = mu
        .iter()
        .zip(f)
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, v)| m * (lambda * (v - mean) - shift).exp())
        .sum();
    Ok(shift + (z / mass).ln())
}

/// Variance of `f` under `mu`.
pub fn variance(mu: &[f64], f: &[f64]) -> f64 {
    let mass: f64 = mu.iter().sum();
    let mean: f64 = mu.iter().zip(f).map(|(m, v)| m * v).sum::<f64>() / mass;
    mu.iter().zip(f).map(|(m, v)| m * (v - mean) * (v - mean)).sum::<f64>() / mass
}

const HERBST_EPS: f64 = 1e-4;
const HERBST_QUAD_TOL: f64 = 1e-9;

/// Evaluates `lambda * int_0^lambda D(mu^{(t f)} || mu) / t^2 dt` by adaptive
/// Simpson quadrature on `[1e-4, lambda]`, closing the initial segment with
/// the analytic limit `Var_mu(f) / 2` of the integrand at `t = 0`.
pub fn herbst_integral(mu: &[f64], f: &[f64], lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::QuadratureFailure { achieved: f64::NAN });
    }
    let g = |t: f64| -> Result<f64> {
        let tilted = tilt(mu, f, t)?;
        Ok(kl(&tilted, mu)? / (t * t))
    };
    let limit = variance(mu, f) / 2.0;
    let integral = if lambda <= HERBST_EPS {
        simpson_closed(limit, g(lambda / 2.0)?, g(lambda)?, lambda)
    } else {
        let head = simpson_closed(limit, g(HERBST_EPS / 2.0)?, g(HERBST_EPS)?, HERBST_EPS);
        head + adaptive_simpson(&g, HERBST_EPS, lambda, HERBST_QUAD_TOL)?
    };
    Ok(lambda * integral)
}

fn simpson_closed(fa: f64, fm: f64, fb: f64, width: f64) -> f64 {
    width / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(
    g: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    let fa = g(a)?;
    let fm = g(0.5 * (a + b))?;
    let fb = g(b)?;
    let whole = simpson_closed(fa, fm, fb, b - a);
    let mut achieved = 0.0;
    let value = adaptive_step(g, a, b, fa, fm, fb, whole, tol, 40, &mut achieved)?;
    if achieved > tol * 16.0 {
        return Err(Error::QuadratureFailure { achieved });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    g: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    achieved: &mut f64,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let flm = g(0.5 * (a + m))?;
    let frm = g(0.5 * (m + b))?;
    let left = simpson_closed(fa, flm, fm, m - a);
    let right = simpson_closed(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 {
            *achieved += delta.abs() / 15.0;
        }
        return Ok(left + right + delta / 15.0);
    }
    let l = adaptive_step(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, achieved)?;
    let r = adaptive_step(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, achieved)?;
    Ok(l + r)
}

/// Exact transportation simplex on the bipartite flow polytope.
pub(crate) mod simplex {
    use super::*;

    pub(crate) struct Solution {
        pub flow: Matrix,
        pub row_potentials: Vec<f64>,
        pub col_potentials: Vec<f64>,
        pub value: f64,
        pub dual_value: f64,
    }

    /// Solves `min <cost, x>` subject to row sums `supply`, column sums
    /// `demand`, `x >= 0`. Supplies and demands must balance. Returns the
    /// optimal basic flow together with the dual potentials of the final
    /// basis.
    pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &Matrix) -> Result<Solution> {
        let m = supply.len();
        let k = demand.len();
        if m == 0 || k == 0 {
            return Err(Error::DimensionMismatch(m, k));
        }
        if cost.rows() != m || cost.cols() != k {
            return Err(Error::DimensionMismatch(cost.rows(), m));
        }
        let total_s: f64 = supply.iter().sum();
        let total_d: f64 = demand.iter().sum();
        if (total_s - total_d).abs() > 1e-9 {
            return Err(Error::SolverFailure(format!(
                "unbalanced problem: supply {total_s} vs demand {total_d}"
            )));
        }
        if supply.iter().chain(demand).any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::SolverFailure("negative or non-finite mass".into()));
        }

        // Northwest-corner initial basis: a staircase spanning tree with
        // exactly m + k - 1 cells (degenerate zero cells included).
        let mut flow = Matrix::zeros(m, k);
        let mut in_basis = vec![false; m * k];
        let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + k - 1);
        {
            let mut a = supply.to_vec();
            let mut b = demand.to_vec();
            let (mut i, mut j) = (0usize, 0usize);
            loop {
                let x = a[i].min(b[j]).max(0.0);
                flow[(i, j)] = x;
                in_basis[i * k + j] = true;
                basis.push((i, j));
                a[i] -= x;
                b[j] -= x;
                if basis.len() == m + k - 1 {
                    break;
                }
                if i == m - 1 {
                    j += 1;
                } else if j == k - 1 || a[i] <= b[j] {
                    i += 1;
                } else {
                    j += 1;
                }
            }
        }

        let eps = 1e-12 * cost.max_abs().max(1.0);
        let bland_after = 2 * m * k + 100;
        let max_pivots = 40 * (m * k + 10) + 10_000;
        let mut u = vec![0.0; m];
        let mut v = vec![0.0; k];

        for pivot in 0..max_pivots {
            potentials_from_basis(m, k, &basis, cost, &mut u, &mut v)?;
            let entering = if pivot < bland_after {
                most_negative(m, k, &in_basis, cost, &u, &v, eps)
            } else {
                // Bland's rule: smallest improving index, which precludes
                // cycling on degenerate bases.
                first_negative(m, k, &in_basis, cost, &u, &v, eps)
            };
            let Some((ei, ej)) = entering else {
                let value: f64 = (0..m)
                    .map(|i| (0..k).map(|j| flow[(i, j)] * cost[(i, j)]).sum::<f64>())
                    .sum();
                let dual_value: f64 = u.iter().zip(supply).map(|(a, b)| a * b).sum::<f64>()
                    + v.iter().zip(demand).map(|(a, b)| a * b).sum::<f64>();
                return Ok(Solution {
                    flow,
                    row_potentials: u,
                    col_potentials: v,
                    value,
                    dual_value,
                });
            };

            let path = tree_path(m, k, &basis, ei, m + ej)?;
            // Cells along the tree path alternate signs starting with minus
            // (the entering cell itself carries plus).
            let mut cells: Vec<((usize, usize), f64)> = Vec::with_capacity(path.len());
            for (t, pair) in path.windows(2).enumerate() {
                let (a, b) = (pair[0], pair[1]);
                let cell = if a < m { (a, b - m) } else { (b, a - m) };
                let sign = if t % 2 == 0 { -1.0 } else { 1.0 };
                cells.push((cell, sign));
            }
            let mut theta = f64::INFINITY;
            let mut leaving: Option<(usize, usize)> = None;
            for &(cell, sign) in &cells {
                if sign < 0.0 && flow[cell] < theta {
                    theta = flow[cell];
                    leaving = Some(cell);
                }
            }
            let leaving = leaving.ok_or_else(|| {
                Error::SolverFailure("simplex cycle without a leaving cell".into())
            })?;
            let theta = theta.max(0.0);
            flow[(ei, ej)] += theta;
            for &(cell, sign) in &cells {
                flow[cell] += sign * theta;
                if flow[cell] < 0.0 {
                    flow[cell] = 0.0;
                }
            }
            flow[leaving] = 0.0;
            in_basis[leaving.0 * k + leaving.1] = false;
            in_basis[ei * k + ej] = true;
            let pos = basis
                .iter()
                .position(|c| *c == leaving)
                .ok_or_else(|| Error::SolverFailure("leaving cell missing from basis".into()))?;
            basis[pos] = (ei, ej);
        }
        Err(Error::SolverFailure("pivot limit reached".into()))
    }

    fn most_negative(
        m: usize,
        k: usize,
        in_basis: &[bool],
        cost: &Matrix,
        u: &[f64],
        v: &[f64],
        eps: f64,
    ) -> Option<(usize, usize)> {
        let mut best = -eps;
        let mut cell = None;
        for i in 0..m {
            for j in 0..k {
                if in_basis[i * k + j] {
                    continue;
                }
                let r = cost[(i, j)] - u[i] - v[j];
                if r < best {
                    best = r;
                    cell = Some((i, j));
                }
            }
        }
        cell
    }

    fn first_negative(
        m: usize,
        k: usize,
        in_basis: &[bool],
        cost: &Matrix,
        u: &[f64],
        v: &[f64],
        eps: f64,
    ) -> Option<(usize, usize)> {
        for i in 0..m {
            for j in 0..k {
                if in_basis[i * k + j] {
                    continue;
                }
                if cost[(i, j)] - u[i] - v[j] < -eps {
                    return Some((i, j));
                }
            }
        }
        None
    }

    // Solves u_i + v_j = c_ij over the basis tree, rooted at row 0 with
    // u_0 = 0.
    fn potentials_from_basis(
        m: usize,
        k: usize,
        basis: &[(usize, usize)],
        cost: &Matrix,
        u: &mut [f64],
        v: &mut [f64],
    ) -> Result<()> {
        let nodes = m + k;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for &(i, j) in basis {
            adj[i].push(m + j);
            adj[m + j].push(i);
        }
        let mut seen = vec![false; nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        let mut visited = 0usize;
        while let Some(node) = stack.pop() {
            visited += 1;
            for &next in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                if node < m {
                    v[next - m] = cost[(node, next - m)] - u[node];
                } else {
                    u[next] = cost[(next, node - m)] - v[node - m];
                }
                stack.push(next);
            }
        }
        if visited != nodes {
            return Err(Error::SolverFailure("basis tree is disconnected".into()));
        }
        Ok(())
    }

    // Unique path between two nodes of the basis tree (rows are 0..m, columns
    // are m..m+k).
    fn tree_path(
        m: usize,
        k: usize,
        basis: &[(usize, usize)],
        from: usize,
        to: usize,
    ) -> Result<Vec<usize>> {
        let nodes = m + k;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        for &(i, j) in basis {
            adj[i].push(m + j);
            adj[m + j].push(i);
        }
        let mut parent = vec![usize::MAX; nodes];
        let mut seen = vec![false; nodes];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from);
        seen[from] = true;
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &next in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        if !seen[to] {
            return Err(Error::SolverFailure("entering cell is not connected to the basis".into()));
        }
        let mut path = vec![to];
        let mut node = to;
        while node != from {
            node = parent[node];
            path.push(node);
        }
        path.reverse();
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tv_examples() {
        assert_eq!(tv(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(tv(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.5);
        // M1 kernel rows
        assert!((tv(&[0.9, 0.1], &[0.2, 0.8]).unwrap() - 0.7).abs() < 1e-15);
        assert!(matches!(tv(&[1.0], &[0.5, 0.5]), Err(Error::DimensionMismatch(1, 2))));
    }

    fn path_metric(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (i as f64 - j as f64).abs();
            }
        }
        m
    }

    #[test]
    fn w1_point_masses_on_path_metric() {
        let p = vec![1.0, 0.0, 0.0];
        let q = vec![0.0, 0.0, 1.0];
        let r = w1(&p, &q, &path_metric(3)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(r.duality_gap <= 1e-8);
    }

    #[test]
    fn w1_trivial_metric_is_scaled_tv() {
        let p = vec![0.2, 0.5, 0.3];
        let q = vec![0.6, 0.1, 0.3];
        let space = CoordinateSpace::trivial(3, 3.0).unwrap();
        let r = w1(&p, &q, space.metric()).unwrap();
        let expect = 3.0 * tv(&p, &q).unwrap();
        assert!((r.value - expect).abs() < 1e-12);
    }

    // Independent oracle for the shifted-mass example: on a line metric the
    // W1 distance is the L1 distance between the cumulative distributions.
    #[test]
    fn w1_shifted_mass_on_path_metric() {
        let p = vec![0.5, 0.5, 0.0];
        let q = vec![0.0, 0.5, 0.5];
        let mut cdf_gap = 0.0f64;
        let (mut fp, mut fq) = (0.0f64, 0.0f64);
        for i in 0..2 {
            fp += p[i];
            fq += q[i];
            cdf_gap += (fp - fq).abs();
        }
        assert_eq!(cdf_gap, 1.0);
        let r = w1(&p, &q, &path_metric(3)).unwrap();
        assert!((r.value - cdf_gap).abs() < 1e-12, "value {}", r.value);
    }

    #[test]
    fn w1_dual_potentials_are_feasible() {
        let p = vec![0.25, 0.25, 0.5];
        let q = vec![0.1, 0.6, 0.3];
        let metric = path_metric(3);
        let r = w1(&p, &q, &metric).unwrap();
        let (u, v) = &r.dual_potentials;
        for i in 0..3 {
            for j in 0..3 {
                assert!(u[i] + v[j] <= metric[(i, j)] + 1e-12);
            }
        }
    }

    #[test]
    fn wbar_identical_laws_is_zero() {
        let p1 = fixtures::p1();
        let pmf = p1.pmf().unwrap().to_vec();
        let r = wbar(&pmf, &pmf, &p1).unwrap();
        assert_eq!(r.upper, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn wbar_single_coordinate_equals_w1() {
        let model = crate::model::ProductModel::new(
            vec![CoordinateSpace::trivial(3, 1.0).unwrap()],
            crate::model::JointLaw::Explicit(vec![0.2, 0.5, 0.3]),
        )
        .unwrap();
        let mu = vec![0.2, 0.5, 0.3];
        let nu = vec![0.6, 0.1, 0.3];
        let r = wbar(&mu, &nu, &model).unwrap();
        let direct = w1(&mu, &nu, model.coordinate(0).metric()).unwrap().value;
        assert!((r.upper - direct).abs() < 1e-8);
        assert!(r.converged);
    }

    #[test]
    fn wbar_p1_against_point_mass() {
        let p1 = fixtures::p1();
        let mu = p1.pmf().unwrap().to_vec();
        let mut nu = vec![0.0; 8];
        nu[0] = 1.0;
        let r = wbar(&mu, &nu, &p1).unwrap();
        // Every coupling is forced to E rho_i = P(X_i = 1) = 0.5.
        let expect = 0.75f64.sqrt();
        assert!((r.upper - expect).abs() < 1e-9, "upper {}", r.upper);
        assert!(r.lower <= r.upper + 1e-12);
    }

    #[test]
    fn kl_examples() {
        let mu = vec![0.5, 0.5];
        assert_eq!(kl(&mu, &mu).unwrap(), 0.0);
        let point = vec![1.0, 0.0, 0.0];
        let uniform = vec![1.0 / 3.0; 3];
        assert!((kl(&point, &uniform).unwrap() - 3.0f64.ln()).abs() < 1e-15);
        let nu = vec![0.75, 0.25];
        let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((kl(&nu, &mu).unwrap() - expect).abs() < 1e-15);
        // nu charging a mu-null state
        assert_eq!(kl(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tilt_examples() {
        let mu = vec![0.3, 0.7];
        let f = vec![1.0, -1.0];
        assert_eq!(tilt(&mu, &f, 0.0).unwrap(), mu);
        // Uniform binary with f(x) = x tilts to Bernoulli(e^l / (1 + e^l)).
        let lam = 0.8;
        let tilted = tilt(&[0.5, 0.5], &[0.0, 1.0], lam).unwrap();
        let expect = lam.exp() / (1.0 + lam.exp());
        assert!((tilted[1] - expect).abs() < 1e-15);
        // Constants cancel.
        let tilted = tilt(&mu, &[5.0, 5.0], 3.0).unwrap();
        for (a, b) in tilted.iter().zip(&mu) {
            assert!((a - b).abs() < 1e-15);
        }
        // Support is preserved.
        let tilted = tilt(&[0.0, 1.0], &[10.0, 0.0], 5.0).unwrap();
        assert_eq!(tilted[0], 0.0);
    }

    #[test]
    fn log_mgf_examples() {
        let mu = vec![0.5, 0.5];
        let f = vec![-1.0, 1.0];
        assert_eq!(log_mgf(&mu, &f, 0.0).unwrap(), 0.0);
        assert!(log_mgf(&mu, &[2.0, 2.0], 1.3).unwrap().abs() < 1e-15);
        for lam in [0.25, 1.0, 3.0] {
            let psi = log_mgf(&mu, &f, lam).unwrap();
            assert!((psi - lam.cosh().ln()).abs() < 1e-12, "lambda {lam}");
        }
    }

    #[test]
    fn herbst_integral_matches_log_mgf_on_p1() {
        let p1 = fixtures::p1();
        let f = fixtures::hamming_weight(&p1);
        let mu = p1.pmf().unwrap().to_vec();
        for lam in [0.25, 0.5, 1.0] {
            let psi = log_mgf(&mu, f.values(), lam).unwrap();
            let integral = herbst_integral(&mu, f.values(), lam).unwrap();
            assert!((psi - integral).abs() < 1e-8, "lambda {lam}: {psi} vs {integral}");
        }
    }

    // Below the quadrature cut the whole integral runs on the closed-form
    // limit segment.
    #[test]
    fn herbst_integral_handles_tiny_lambda() {
        let p1 = fixtures::p1();
        let f = fixtures::hamming_weight(&p1);
        let mu = p1.pmf().unwrap().to_vec();
        let lam = 5e-5;
        let psi = log_mgf(&mu, f.values(), lam).unwrap();
        let integral = herbst_integral(&mu, f.values(), lam).unwrap();
        assert!((psi - integral).abs() < 1e-12, "{psi} vs {integral}");
    }
}
