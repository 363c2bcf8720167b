//! Mixing and comparison machinery: Dobrushin contraction coefficients, the
//! interdependence matrix `C` with its uniqueness gate, the comparison series
//! `D = (I - C)^{-1}`, the comparison bound on expectation differences, the
//! conditional-expectation kernels along the coordinate filtration, and
//! randomized verification of Wasserstein matrices.
//!
//! Zero-probability conditioning events are excluded from every supremum
//! (they are null for the law in question); each exclusion is counted and
//! surfaced on the result types.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::{gauss_jordan_inverse, spectral_radius_nonneg, Matrix};
use crate::model::{oscillation_vector, FunctionTable, ProductModel};
use crate::transport::coordinate_w1;

const RADIUS_MARGIN: f64 = 1e-9;
const RADIUS_TOL: f64 = 1e-12;
const RADIUS_MAX_ITER: usize = 200_000;

/// Dobrushin contraction coefficient: the maximal total-variation distance
/// between rows of a row-stochastic kernel.
pub fn dobrushin_theta(kernel: &Matrix) -> Result<f64> {
    for r in 0..kernel.rows() {
        let row = kernel.row(r);
        let sum: f64 = row.iter().sum();
        if row.iter().any(|v| *v < 0.0 || !v.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLaw(format!("kernel row {r} is not a distribution")));
        }
    }
    let mut theta: f64 = 0.0;
    for a in 0..kernel.rows() {
        for b in a + 1..kernel.rows() {
            let d = crate::transport::tv(kernel.row(a), kernel.row(b))?;
            theta = theta.max(d);
        }
    }
    Ok(theta.min(1.0))
}

/// The Dobrushin interdependence matrix of a law, with its spectral radius
/// and the uniqueness gate.
#[derive(Clone, Debug)]
pub struct InterdependenceMatrix {
    /// Entry `(i, j)`: sensitivity of the one-site conditional at `i` to a
    /// change at `j`, in W1 per unit distance. Zero diagonal.
    pub c: Matrix,
    /// Perron root of `c`, by shifted power iteration, clamped to the
    /// max-row-sum upper bound.
    pub spectral_radius: f64,
    /// `spectral_radius < 1 - 1e-9`.
    pub uniqueness_holds: bool,
    /// Conditioning pairs skipped because one side had zero probability.
    pub skipped_pairs: usize,
    /// Entries `(i, j)` where every pair was skipped; those are set to 0.
    pub degenerate_entries: Vec<(usize, usize)>,
}

/// Computes the interdependence matrix exactly: every entry is the supremum
/// over configuration pairs differing at one coordinate, both sides taken
/// over positive-probability conditioning events.
pub fn interdependence_matrix(model: &ProductModel) -> Result<InterdependenceMatrix> {
    let pmf = model.pmf()?;
    interdependence_of(model, pmf)
}

pub(crate) fn interdependence_of(
    model: &ProductModel,
    pmf: &[f64],
) -> Result<InterdependenceMatrix> {
    let n = model.dimension();
    let grid = model.grid();
    let total = grid.len();
    let mut c = Matrix::zeros(n, n);
    let mut skipped_pairs = 0usize;
    let mut degenerate = Vec::new();
    let mut cond_a = Vec::new();
    let mut cond_b = Vec::new();
    for i in 0..n {
        let m_i = model.coordinate(i).size();
        let stride_i = grid.stride(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let m_j = model.coordinate(j).size();
            let stride_j = grid.stride(j);
            let mut best: f64 = 0.0;
            let mut any = false;
            let mut local_skipped = 0usize;
            for base in 0..total {
                if grid.digit(base, i) != 0 || grid.digit(base, j) != 0 {
                    continue;
                }
                for a in 0..m_j {
                    let ok_a = conditional_into(pmf, base + a * stride_j, stride_i, m_i, &mut cond_a);
                    for b in a + 1..m_j {
                        let ok_b =
                            conditional_into(pmf, base + b * stride_j, stride_i, m_i, &mut cond_b);
                        if !ok_a || !ok_b {
                            local_skipped += 1;
                            continue;
                        }
                        let w = coordinate_w1(&cond_a, &cond_b, model.coordinate(i))?;
                        let rho_j = model.coordinate(j).distance(a, b);
                        best = best.max(w / rho_j);
                        any = true;
                    }
                }
            }
            skipped_pairs += local_skipped;
            if !any {
                degenerate.push((i, j));
            }
            c[(i, j)] = best;
        }
    }
    let spectral_radius = spectral_radius_nonneg(&c, RADIUS_TOL, RADIUS_MAX_ITER);
    Ok(InterdependenceMatrix {
        uniqueness_holds: spectral_radius < 1.0 - RADIUS_MARGIN,
        c,
        spectral_radius,
        skipped_pairs,
        degenerate_entries: degenerate,
    })
}

// One-site conditional along `stride` starting at `base`, normalized into
// `out`. Returns false when the conditioning event has zero mass.
fn conditional_into(pmf: &[f64], base: usize, stride: usize, m: usize, out: &mut Vec<f64>) -> bool {
    out.clear();
    let mut mass = 0.0;
    for a in 0..m {
        let v = pmf[base + a * stride];
        out.push(v);
        mass += v;
    }
    if mass <= 0.0 {
        return false;
    }
    for v in out.iter_mut() {
        *v /= mass;
    }
    true
}

/// The comparison series `D = sum_m C^m = (I - C)^{-1}`.
#[derive(Clone, Debug)]
pub struct ComparisonMatrix {
    pub d: Matrix,
}

/// Inverts `I - C` by dense elimination. Requires the uniqueness gate and
/// certifies the residual `||(I - C) D - I||_max <= 1e-10`.
pub fn comparison_matrix(c: &InterdependenceMatrix) -> Result<ComparisonMatrix> {
    if !c.uniqueness_holds {
        return Err(Error::UniquenessFails(c.spectral_radius));
    }
    let n = c.c.rows();
    let mut i_minus_c = Matrix::identity(n);
    for r in 0..n {
        for s in 0..n {
            i_minus_c[(r, s)] -= c.c[(r, s)];
        }
    }
    let d = gauss_jordan_inverse(&i_minus_c)
        .ok_or_else(|| Error::SolverFailure("I - C is numerically singular".into()))?;
    let residual = {
        let prod = i_minus_c.matmul(&d);
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for s in 0..n {
                let expect = if r == s { 1.0 } else { 0.0 };
                worst = worst.max((prod[(r, s)] - expect).abs());
            }
        }
        worst
    };
    if residual > 1e-10 {
        return Err(Error::SolverFailure(format!("comparison inverse residual {residual:e}")));
    }
    Ok(ComparisonMatrix { d })
}

/// The comparison bound on `|E_nu f - E_nu_tilde f|`: the bilinear form
/// `sum_{j,k} delta_j(f) D^nu_{jk} b_k` with
/// `b_k = E_{nu_tilde} W1(nu_k(.|.), nu_tilde_k(.|.))`.
///
/// Conditioning configurations that are null for `nu_tilde` do not contribute
/// to `b`; configurations that are `nu_tilde`-positive but `nu`-null are
/// skipped and counted in the returned diagnostics.
pub fn comparison_bound(
    model: &ProductModel,
    nu: &[f64],
    nu_tilde: &[f64],
    f: &FunctionTable,
) -> Result<f64> {
    let total = model.state_count();
    if nu.len() != total || nu_tilde.len() != total {
        return Err(Error::DimensionMismatch(nu.len(), total));
    }
    f.check_model(model)?;
    let model_nu = model.with_explicit_law(nu.to_vec())?;
    let c = interdependence_of(&model_nu, nu)?;
    let d = comparison_matrix(&c)?;
    let n = model.dimension();
    let grid = model.grid();
    let mut b = vec![0.0; n];
    let mut cond_nu = Vec::new();
    let mut cond_nt = Vec::new();
    for k in 0..n {
        let m_k = model.coordinate(k).size();
        let stride_k = grid.stride(k);
        for base in 0..total {
            if grid.digit(base, k) != 0 {
                continue;
            }
            let weight: f64 = (0..m_k).map(|a| nu_tilde[base + a * stride_k]).sum();
            if weight <= 0.0 {
                continue;
            }
            if !conditional_into(nu, base, stride_k, m_k, &mut cond_nu) {
                // nu-null but nu_tilde-positive configuration: no conditional
                // to compare against.
                continue;
            }
            let ok = conditional_into(nu_tilde, base, stride_k, m_k, &mut cond_nt);
            debug_assert!(ok, "positive weight implies a defined conditional");
            let w = coordinate_w1(&cond_nu, &cond_nt, model.coordinate(k))?;
            b[k] += weight * w;
        }
    }
    let delta = oscillation_vector(f, model)?;
    let db = d.d.matvec(&b);
    Ok(delta.deltas().iter().zip(&db).map(|(x, y)| x * y).sum())
}

/// Conditional expectation of `f` given a coordinate prefix, as a full table
/// with a definedness mask. Entries over zero-probability prefixes carry a
/// sentinel and are excluded from oscillation suprema.
#[derive(Clone, Debug)]
pub struct CondExpTable {
    values: Vec<f64>,
    defined: Vec<bool>,
    prefix_len: usize,
}

impl CondExpTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    /// Local oscillation at `coord`, restricted to pairs whose entries are
    /// both defined.
    pub fn oscillation(&self, model: &ProductModel, coord: usize) -> f64 {
        let grid = model.grid();
        let m = model.coordinate(coord).size();
        let stride = grid.stride(coord);
        let metric = model.coordinate(coord).metric();
        let mut best: f64 = 0.0;
        for idx in 0..grid.len() {
            if grid.digit(idx, coord) != 0 {
                continue;
            }
            for a in 0..m {
                let ia = idx + a * stride;
                if !self.defined[ia] {
                    continue;
                }
                for b in a + 1..m {
                    let ib = idx + b * stride;
                    if !self.defined[ib] {
                        continue;
                    }
                    best = best.max((self.values[ia] - self.values[ib]).abs() / metric[(a, b)]);
                }
            }
        }
        best
    }
}

// Conditional expectations of `f` at prefix resolution: values and masses per
// prefix of length `len`. The canonical order makes prefix blocks contiguous.
pub(crate) fn prefix_cond_exp(
    model: &ProductModel,
    f: &FunctionTable,
    len: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pmf = model.pmf()?;
    let grid = model.grid();
    let prefixes = grid.prefix_count(len);
    let tail = grid.suffix_count(len);
    let values = f.values();
    let mut means = vec![0.0; prefixes];
    let mut probs = vec![0.0; prefixes];
    for p in 0..prefixes {
        let mut mass = 0.0;
        let mut acc = 0.0;
        let base = p * tail;
        for t in 0..tail {
            let w = pmf[base + t];
            mass += w;
            acc += w * values[base + t];
        }
        probs[p] = mass;
        if mass > 0.0 {
            means[p] = acc / mass;
        }
    }
    Ok((means, probs))
}

/// The conditional-expectation operator along the coordinate filtration:
/// returns `x -> E[f(X) | X^{[prefix_len]} = x^{[prefix_len]}]` as a full
/// table, constant in the remaining coordinates. `prefix_len = 0` gives the
/// constant mean and `prefix_len = n` returns `f` itself.
pub fn cond_exp_operator(
    model: &ProductModel,
    prefix_len: usize,
    f: &FunctionTable,
) -> Result<CondExpTable> {
    f.check_model(model)?;
    let n = model.dimension();
    if prefix_len > n {
        return Err(Error::DimensionMismatch(prefix_len, n));
    }
    let grid = model.grid();
    let total = grid.len();
    if prefix_len == n {
        return Ok(CondExpTable {
            values: f.values().to_vec(),
            defined: vec![true; total],
            prefix_len,
        });
    }
    let (means, probs) = prefix_cond_exp(model, f, prefix_len)?;
    let tail = grid.suffix_count(prefix_len);
    let mut values = vec![0.0; total];
    let mut defined = vec![false; total];
    for (p, (&mean, &prob)) in means.iter().zip(&probs).enumerate() {
        let ok = prob > 0.0;
        for t in 0..tail {
            values[p * tail + t] = mean;
            defined[p * tail + t] = ok;
        }
    }
    Ok(CondExpTable { values, defined, prefix_len })
}

/// Exact conditional ranges of the Doob martingale differences: entry `i` is
/// `||B^(i) - A^(i)||_inf`, the worst range over positive-probability
/// prefixes of the next conditional expectation as the next coordinate
/// varies over the support of its conditional law.
pub fn martingale_widths(model: &ProductModel, f: &FunctionTable) -> Result<Vec<f64>> {
    f.check_model(model)?;
    let n = model.dimension();
    let grid = model.grid();
    let mut widths = vec![0.0; n];
    for c in 0..n {
        let (means, probs) = prefix_cond_exp(model, f, c + 1)?;
        let m_c = model.coordinate(c).size();
        let parents = grid.prefix_count(c);
        let mut worst: f64 = 0.0;
        for parent in 0..parents {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for a in 0..m_c {
                let child = parent * m_c + a;
                if probs[child] > 0.0 {
                    lo = lo.min(means[child]);
                    hi = hi.max(means[child]);
                }
            }
            if hi > lo {
                worst = worst.max(hi - lo);
            }
        }
        widths[c] = worst;
    }
    Ok(widths)
}

/// Outcome of a randomized Wasserstein-matrix check.
#[derive(Clone, Debug)]
pub struct WassersteinCheck {
    pub holds: bool,
    /// First violating function and the row it violates, when one was found.
    pub witness: Option<(FunctionTable, usize)>,
    pub trials_run: usize,
}

/// Randomized certification that `V` is a Wasserstein matrix for the
/// conditional-expectation kernel with the given prefix length: samples
/// random tables with entries uniform in [-1, 1] and checks
/// `delta_r(K f) <= (V delta(f))_r` exactly on the requested rows
/// (all rows when `rows` is `None`), with `1e-10` slack.
pub fn verify_wasserstein_matrix(
    model: &ProductModel,
    prefix_len: usize,
    v: &Matrix,
    rows: Option<&[usize]>,
    trials: usize,
    seed: u64,
) -> Result<WassersteinCheck> {
    let n = model.dimension();
    if v.rows() != n || v.cols() != n {
        return Err(Error::DimensionMismatch(v.rows(), n));
    }
    let total = model.state_count();
    let all_rows: Vec<usize> = (0..n).collect();
    let rows = rows.unwrap_or(&all_rows);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let values: Vec<f64> = (0..total).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let f = FunctionTable::new(values)?;
        let delta = oscillation_vector(&f, model)?;
        let table = cond_exp_operator(model, prefix_len, &f)?;
        for &r in rows {
            let lhs = table.oscillation(model, r);
            let rhs: f64 = v.row(r).iter().zip(delta.deltas()).map(|(a, b)| a * b).sum();
            if lhs > rhs + 1e-10 {
                return Ok(WassersteinCheck { holds: false, witness: Some((f, r)), trials_run: trial + 1 });
            }
        }
    }
    Ok(WassersteinCheck { holds: true, witness: None, trials_run: trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{CoordinateSpace, JointLaw};

    #[test]
    fn dobrushin_theta_examples() {
        let flat = Matrix::from_rows(&[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(dobrushin_theta(&flat).unwrap(), 0.0);
        let id = Matrix::identity(3);
        assert_eq!(dobrushin_theta(&id).unwrap(), 1.0);
        let m1 = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert!((dobrushin_theta(&m1).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn product_law_has_zero_interdependence() {
        let p1 = fixtures::p1();
        let c = interdependence_matrix(&p1).unwrap();
        assert!(c.c.max_abs() < 1e-14);
        assert_eq!(c.spectral_radius, 0.0);
        assert!(c.uniqueness_holds);
    }

    #[test]
    fn m1_interdependence_anchors() {
        let m1 = fixtures::m1();
        let c = interdependence_matrix(&m1).unwrap();
        // Posterior of X1 given X2 = 0 is (9/11, 2/11), given X2 = 1 it is
        // (1/9, 8/9); the TV distance is 70/99.
        assert!((c.c[(0, 1)] - 70.0 / 99.0).abs() < 1e-12, "C12 = {}", c.c[(0, 1)]);
        // Conditional independence across the middle of the chain.
        assert!(c.c[(0, 2)].abs() < 1e-12, "C13 = {}", c.c[(0, 2)]);
        assert_eq!(c.skipped_pairs, 0);
    }

    #[test]
    fn comparison_matrix_examples() {
        let zero = InterdependenceMatrix {
            c: Matrix::zeros(2, 2),
            spectral_radius: 0.0,
            uniqueness_holds: true,
            skipped_pairs: 0,
            degenerate_entries: vec![],
        };
        assert_eq!(comparison_matrix(&zero).unwrap().d, Matrix::identity(2));

        let nilpotent = InterdependenceMatrix {
            c: Matrix::from_rows(&[vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap(),
            spectral_radius: 0.0,
            uniqueness_holds: true,
            skipped_pairs: 0,
            degenerate_entries: vec![],
        };
        let d = comparison_matrix(&nilpotent).unwrap().d;
        assert!((d[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((d[(0, 1)] - 0.5).abs() < 1e-14);
        assert!(d[(1, 0)].abs() < 1e-14);

        let symmetric = InterdependenceMatrix {
            c: Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap(),
            spectral_radius: 0.5,
            uniqueness_holds: true,
            skipped_pairs: 0,
            degenerate_entries: vec![],
        };
        let d = comparison_matrix(&symmetric).unwrap().d;
        assert!((d[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
        assert!((d[(0, 1)] - 2.0 / 3.0).abs() < 1e-12);

        let failing = InterdependenceMatrix {
            c: Matrix::identity(2),
            spectral_radius: 1.0,
            uniqueness_holds: false,
            skipped_pairs: 0,
            degenerate_entries: vec![],
        };
        assert!(matches!(comparison_matrix(&failing), Err(Error::UniquenessFails(_))));
    }

    #[test]
    fn comparison_bound_is_zero_for_equal_laws() {
        let p1 = fixtures::p1();
        let f = fixtures::hamming_weight(&p1);
        let pmf = p1.pmf().unwrap().to_vec();
        let bound = comparison_bound(&p1, &pmf, &pmf, &f).unwrap();
        assert!(bound.abs() < 1e-12);
    }

    #[test]
    fn comparison_bound_on_product_laws_is_marginal_w1() {
        // Two product laws differing only in the first marginal: the bound
        // collapses to delta_1(f) * W1(nu_1, nu_tilde_1).
        let coords = vec![
            CoordinateSpace::trivial(2, 1.0).unwrap(),
            CoordinateSpace::trivial(2, 1.0).unwrap(),
        ];
        let model = ProductModel::new(
            coords,
            JointLaw::Product(vec![vec![0.5, 0.5], vec![0.3, 0.7]]),
        )
        .unwrap();
        let nu = crate::model::materialize(
            &JointLaw::Product(vec![vec![0.5, 0.5], vec![0.3, 0.7]]),
            model.coordinates(),
            1 << 20,
        )
        .unwrap();
        let nu_tilde = crate::model::materialize(
            &JointLaw::Product(vec![vec![0.9, 0.1], vec![0.3, 0.7]]),
            model.coordinates(),
            1 << 20,
        )
        .unwrap();
        let f = fixtures::hamming_weight(&model);
        let bound = comparison_bound(&model, &nu, &nu_tilde, &f).unwrap();
        // delta_1 = 1 and W1 under the unit trivial metric is TV = 0.4.
        assert!((bound - 0.4).abs() < 1e-12, "bound = {bound}");
        let exact: f64 = nu
            .iter()
            .zip(&nu_tilde)
            .zip(f.values())
            .map(|((a, b), v)| (a - b) * v)
            .sum();
        assert!(bound + 1e-10 >= exact.abs());
    }

    #[test]
    fn cond_exp_boundary_cases() {
        let p1 = fixtures::p1();
        let f = fixtures::hamming_weight(&p1);
        let full = cond_exp_operator(&p1, 3, &f).unwrap();
        assert_eq!(full.values(), f.values());
        let mean = cond_exp_operator(&p1, 0, &f).unwrap();
        for &v in mean.values() {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cond_exp_on_m1_prefix_one() {
        let m1 = fixtures::m1();
        let f = fixtures::hamming_weight(&m1);
        let table = cond_exp_operator(&m1, 1, &f).unwrap();
        // E[f | X1 = 0] = 0 + 0.1 + 0.17, E[f | X1 = 1] = 1 + 0.8 + 0.66.
        assert!((table.values()[0] - 0.27).abs() < 1e-12);
        assert!((table.values()[7] - 2.46).abs() < 1e-12);
    }

    #[test]
    fn martingale_widths_are_bounded_by_oscillations() {
        let m1 = fixtures::m1();
        let f = fixtures::hamming_weight(&m1);
        let widths = martingale_widths(&m1, &f).unwrap();
        for (c, w) in widths.iter().enumerate() {
            let table = cond_exp_operator(&m1, c + 1, &f).unwrap();
            let diam = m1.coordinate(c).diameter();
            assert!(*w <= diam * table.oscillation(&m1, c) + 1e-10);
        }
    }

    #[test]
    fn wasserstein_check_accepts_identity_row_on_product_law() {
        let p1 = fixtures::p1();
        for c in 0..3 {
            let v = Matrix::identity(3);
            let check = verify_wasserstein_matrix(&p1, c + 1, &v, Some(&[c]), 200, 5).unwrap();
            assert!(check.holds, "row {c} violated");
        }
    }

    #[test]
    fn wasserstein_check_rejects_zero_matrix() {
        let m1 = fixtures::m1();
        let v = Matrix::zeros(3, 3);
        let check = verify_wasserstein_matrix(&m1, 1, &v, Some(&[0]), 50, 7).unwrap();
        assert!(!check.holds);
        assert!(check.witness.is_some());
    }
}
