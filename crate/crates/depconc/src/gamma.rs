//! Constructors for the Gamma matrices that feed the martingale tail bound:
//! the comparison-series construction under the Dobrushin uniqueness
//! condition, the maximal-coupling (tail total-variation) construction, the
//! full-tail coupling-matrix variant, the Markov theta-product envelope, the
//! Gibbs-chain contraction estimate, and the block-partition lift.
//!
//! All coupling-based constructors share the same entry shape: row `i` is the
//! `i`-th row of a Wasserstein matrix for the conditional-expectation kernel
//! one step past `i`, scaled by the coordinate diameter. Suprema skip
//! zero-probability conditioning prefixes; every skip is counted on the
//! result.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mixing::{comparison_matrix, dobrushin_theta, interdependence_matrix};
use crate::model::{CoordinateSpace, FunctionTable, JointLaw, ProductModel};

/// Which construction produced a [`GammaMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaMethod {
    Kulske,
    Goldstein,
    Chazottes,
    MarkovTheta,
    Block,
}

impl GammaMethod {
    pub fn name(self) -> &'static str {
        match self {
            GammaMethod::Kulske => "kulske",
            GammaMethod::Goldstein => "goldstein",
            GammaMethod::Chazottes => "chazottes",
            GammaMethod::MarkovTheta => "markov_theta",
            GammaMethod::Block => "blocks",
        }
    }
}

/// A Gamma matrix with its provenance and validity flag. Invalid matrices
/// carry the reason in `notes` so comparison tables can show inapplicable
/// methods instead of erroring.
#[derive(Clone, Debug)]
pub struct GammaMatrix {
    pub entries: Matrix,
    pub method: GammaMethod,
    pub valid: bool,
    pub notes: Vec<String>,
    /// Set for the block construction: the contiguous coordinate ranges.
    pub block_partition: Option<Vec<Range<usize>>>,
    /// Conditioning pairs skipped because a prefix had zero probability.
    pub skipped_pairs: usize,
}

impl GammaMatrix {
    pub fn dimension(&self) -> usize {
        self.entries.rows()
    }
}

/// Comparison-series construction: `Gamma_ij = ||rho_i|| * D^T_ij` with
/// `D = (I - C)^{-1}`. Returns a flagged-invalid matrix instead of an error
/// when the uniqueness condition fails.
pub fn gamma_kulske(model: &ProductModel) -> Result<GammaMatrix> {
    let n = model.dimension();
    let c = interdependence_matrix(model)?;
    if !c.uniqueness_holds {
        return Ok(GammaMatrix {
            entries: Matrix::zeros(n, n),
            method: GammaMethod::Kulske,
            valid: false,
            notes: vec![format!(
                "uniqueness fails: spectral radius {:.6} is not below 1 - 1e-9",
                c.spectral_radius
            )],
            block_partition: None,
            skipped_pairs: c.skipped_pairs,
        })
    }
    let d = comparison_matrix(&c)?;
    let mut entries = Matrix::zeros(n, n);
    for i in 0..n {
        let diam = model.coordinate(i).diameter();
        for j in 0..n {
            entries[(i, j)] = diam * d.d[(j, i)];
        }
    }
    let mut notes = Vec::new();
    if !c.degenerate_entries.is_empty() {
        notes.push(format!("degenerate interdependence entries: {:?}", c.degenerate_entries));
    }
    Ok(GammaMatrix {
        entries,
        method: GammaMethod::Kulske,
        valid: true,
        notes,
        block_partition: None,
        skipped_pairs: c.skipped_pairs,
    })
}

// Total-variation profile between two conditional tail laws. `buf1`/`buf2`
// hold the normalized tails over coordinates [boundary, n); the fold
// marginalizes out one leading coordinate at a time, so `out[d]` is the TV
// between the conditional laws of the suffix starting at `boundary + d`.
fn suffix_tv_profile(
    sizes: &[usize],
    boundary: usize,
    buf1: &mut [f64],
    buf2: &mut [f64],
    out: &mut Vec<f64>,
) {
    out.clear();
    let n = sizes.len();
    let mut len = buf1.len();
    for d in 0..n - boundary {
        if d > 0 {
            let m = sizes[boundary + d - 1];
            let new_len = len / m;
            for r in 0..new_len {
                let mut s1 = buf1[r];
                let mut s2 = buf2[r];
                for a in 1..m {
                    s1 += buf1[a * new_len + r];
                    s2 += buf2[a * new_len + r];
                }
                buf1[r] = s1;
                buf2[r] = s2;
            }
            len = new_len;
        }
        let mut tv = 0.0;
        for r in 0..len {
            tv += (buf1[r] - buf2[r]).abs();
        }
        out.push(0.5 * tv);
    }
}

// Block sums of the pmf over prefixes of the given length.
fn prefix_masses(model: &ProductModel, len: usize) -> Result<Vec<f64>> {
    let pmf = model.pmf()?;
    let grid = model.grid();
    let prefixes = grid.prefix_count(len);
    let tail = grid.suffix_count(len);
    let mut out = vec![0.0; prefixes];
    for (p, o) in out.iter_mut().enumerate() {
        *o = pmf[p * tail..(p + 1) * tail].iter().sum();
    }
    Ok(out)
}

fn coupling_gamma(model: &ProductModel, method: GammaMethod) -> Result<GammaMatrix> {
    let n = model.dimension();
    let pmf = model.pmf()?;
    let grid = model.grid();
    let mut entries = Matrix::zeros(n, n);
    let mut notes = Vec::new();
    let mut skipped = 0usize;
    for c in 0..n {
        entries[(c, c)] = model.coordinate(c).diameter();
    }
    let mut buf1: Vec<f64> = Vec::new();
    let mut buf2: Vec<f64> = Vec::new();
    let mut profile: Vec<f64> = Vec::new();
    for c in 0..n - 1 {
        let boundary = c + 1;
        let tail = grid.suffix_count(boundary);
        let masses = prefix_masses(model, boundary)?;
        let parents = grid.prefix_count(c);
        let m_c = model.coordinate(c).size();
        let metric_c = model.coordinate(c).metric();
        let mut any = false;
        let mut row = vec![0.0f64; n];
        for parent in 0..parents {
            for a in 0..m_c {
                let p1 = parent * m_c + a;
                if masses[p1] <= 0.0 {
                    skipped += m_c - a - 1;
                    continue;
                }
                for b in a + 1..m_c {
                    let p2 = parent * m_c + b;
                    if masses[p2] <= 0.0 {
                        skipped += 1;
                        continue;
                    }
                    buf1.clear();
                    buf1.extend_from_slice(&pmf[p1 * tail..(p1 + 1) * tail]);
                    buf2.clear();
                    buf2.extend_from_slice(&pmf[p2 * tail..(p2 + 1) * tail]);
                    for v in buf1.iter_mut() {
                        *v /= masses[p1];
                    }
                    for v in buf2.iter_mut() {
                        *v /= masses[p2];
                    }
                    let rho_pair = metric_c[(a, b)];
                    match method {
                        GammaMethod::Goldstein => {
                            suffix_tv_profile(model.sizes(), boundary, &mut buf1, &mut buf2, &mut profile);
                            for (d, tv) in profile.iter().enumerate() {
                                let col = boundary + d;
                                let cand = model.coordinate(col).diameter() * tv / rho_pair;
                                row[col] = row[col].max(cand);
                            }
                        }
                        GammaMethod::Chazottes => {
                            let mut tv = 0.0;
                            for (x, y) in buf1.iter().zip(buf2.iter()) {
                                tv += (x - y).abs();
                            }
                            let tv = 0.5 * tv;
                            for col in boundary..n {
                                let cand = model.coordinate(col).diameter() * tv / rho_pair;
                                row[col] = row[col].max(cand);
                            }
                        }
                        _ => unreachable!("coupling constructor called with {method:?}"),
                    }
                    any = true;
                }
            }
        }
        for col in boundary..n {
            entries[(c, col)] = model.coordinate(c).diameter() * row[col];
        }
        if !any && m_c > 1 {
            notes.push(format!("row {c}: every conditioning pair was degenerate"));
        }
    }
    Ok(GammaMatrix {
        entries,
        method,
        valid: true,
        notes,
        block_partition: None,
        skipped_pairs: skipped,
    })
}

/// Maximal-coupling construction: for `j > i` the entry is the supremum over
/// positive-probability prefixes and coordinate pairs of
/// `||rho_j|| * TV(suffix laws from j) / rho_i(x_i, z_i)`, scaled by
/// `||rho_i||`; diagonal `||rho_i||`, zeros below.
pub fn gamma_goldstein(model: &ProductModel) -> Result<GammaMatrix> {
    coupling_gamma(model, GammaMethod::Goldstein)
}

/// Coupling-matrix construction: like [`gamma_goldstein`] but every column
/// `j > i` uses the total variation of the full tail `(i, n]`, which is
/// constant across `j` before metric scaling. Entrywise at least the
/// maximal-coupling entries (a suffix marginal cannot increase TV).
pub fn gamma_chazottes(model: &ProductModel) -> Result<GammaMatrix> {
    coupling_gamma(model, GammaMethod::Chazottes)
}

/// A Markov chain disintegration of a model together with the per-step
/// Dobrushin coefficients.
#[derive(Clone, Debug)]
pub struct MarkovChainView {
    pub initial: Vec<f64>,
    pub kernels: Vec<Matrix>,
    pub thetas: Vec<f64>,
}

/// Extracts the chain view of a model in the markov representation.
pub fn markov_chain_view(model: &ProductModel) -> Result<MarkovChainView> {
    match model.law() {
        JointLaw::Markov { initial, kernels } => {
            let thetas = kernels
                .iter()
                .map(dobrushin_theta)
                .collect::<Result<Vec<f64>>>()?;
            Ok(MarkovChainView { initial: initial.clone(), kernels: kernels.clone(), thetas })
        }
        _ => Err(Error::WrongRepresentation { expected: "markov" }),
    }
}

/// Theta-product envelope for a Markov chain: for `j > i` the tail total
/// variation is bounded by `theta_i * ... * theta_{j-1}` uniformly over
/// prefixes, which dominates the maximal-coupling entries on the same chain.
pub fn gamma_markov_theta(chain: &MarkovChainView, coords: &[CoordinateSpace]) -> Result<GammaMatrix> {
    let n = coords.len();
    if chain.kernels.len() != n - 1 {
        return Err(Error::DimensionMismatch(chain.kernels.len(), n - 1));
    }
    let mut entries = Matrix::zeros(n, n);
    for i in 0..n {
        entries[(i, i)] = coords[i].diameter();
        let min_off = min_offdiagonal(coords[i].metric());
        let mut prod = 1.0;
        for j in i + 1..n {
            prod *= chain.thetas[j - 1];
            entries[(i, j)] = coords[i].diameter() * (coords[j].diameter() * prod / min_off);
        }
    }
    Ok(GammaMatrix {
        entries,
        method: GammaMethod::MarkovTheta,
        valid: true,
        notes: Vec::new(),
        block_partition: None,
        skipped_pairs: 0,
    })
}

fn min_offdiagonal(metric: &Matrix) -> f64 {
    let n = metric.rows();
    if n < 2 {
        return 1.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                best = best.min(metric[(i, j)]);
            }
        }
    }
    best
}

/// Disintegrates a Gibbs chain into its initial distribution and transition
/// kernels via backward messages.
pub fn gibbs_chain_kernels(potentials: &[Matrix]) -> Result<(Vec<f64>, Vec<Matrix>)> {
    if potentials.is_empty() {
        return Err(Error::InvalidLaw("a gibbs chain needs at least one potential".into()));
    }
    for p in potentials {
        if p.data().iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::NonpositivePotential);
        }
    }
    let steps = potentials.len();
    // beta[i][x] = sum over tails of the product of potentials from i on,
    // renormalized per level to dodge overflow (kernels are scale-invariant).
    let mut betas: Vec<Vec<f64>> = vec![Vec::new(); steps + 1];
    betas[steps] = vec![1.0; potentials[steps - 1].cols()];
    for i in (0..steps).rev() {
        let rows = potentials[i].rows();
        let cols = potentials[i].cols();
        let mut b = vec![0.0; rows];
        for (x, bx) in b.iter_mut().enumerate() {
            let mut acc = 0.0;
            for y in 0..cols {
                acc += potentials[i][(x, y)] * betas[i + 1][y];
            }
            *bx = acc;
        }
        let scale = b.iter().fold(0.0f64, |m, v| m.max(*v));
        for v in b.iter_mut() {
            *v /= scale;
        }
        betas[i] = b;
    }
    let z: f64 = betas[0].iter().sum();
    let initial: Vec<f64> = betas[0].iter().map(|v| v / z).collect();
    let mut kernels = Vec::with_capacity(steps);
    for i in 0..steps {
        let rows = potentials[i].rows();
        let cols = potentials[i].cols();
        let mut k = Matrix::zeros(rows, cols);
        for x in 0..rows {
            let mut norm = 0.0;
            for y in 0..cols {
                let w = potentials[i][(x, y)] * betas[i + 1][y];
                k[(x, y)] = w;
                norm += w;
            }
            for y in 0..cols {
                k[(x, y)] /= norm;
            }
        }
        kernels.push(k);
    }
    Ok((initial, kernels))
}

/// Chain view of a Gibbs chain, for feeding [`gamma_markov_theta`].
pub fn gibbs_chain_view(potentials: &[Matrix]) -> Result<MarkovChainView> {
    let (initial, kernels) = gibbs_chain_kernels(potentials)?;
    let thetas = kernels.iter().map(dobrushin_theta).collect::<Result<Vec<f64>>>()?;
    Ok(MarkovChainView { initial, kernels, thetas })
}

/// The `(R - r) / (R + r)` contraction estimates for the kernels induced by
/// strictly positive pair potentials. Also materializes the induced kernels
/// and verifies `theta_i <= bound + 1e-10` before returning.
pub fn gibbs_theta_bounds(potentials: &[Matrix]) -> Result<Vec<f64>> {
    let (_, kernels) = gibbs_chain_kernels(potentials)?;
    let mut bounds = Vec::with_capacity(potentials.len());
    for (p, k) in potentials.iter().zip(&kernels) {
        let big = p.data().iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let small = p.data().iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let bound = (big - small) / (big + small);
        let theta = dobrushin_theta(k)?;
        if theta > bound + 1e-10 {
            return Err(Error::SolverFailure(format!(
                "induced kernel has theta {theta} above the potential estimate {bound}"
            )));
        }
        bounds.push(bound);
    }
    Ok(bounds)
}

fn validate_partition(partition: &[Range<usize>], n: usize) -> Result<()> {
    if partition.is_empty() {
        return Err(Error::BadPartition("empty partition".into()));
    }
    let mut cursor = 0usize;
    for (k, block) in partition.iter().enumerate() {
        if block.start != cursor {
            return Err(Error::BadPartition(format!(
                "block {k} starts at {} but coordinate {cursor} is next",
                block.start
            )));
        }
        if block.end <= block.start {
            return Err(Error::BadPartition(format!("block {k} is empty")));
        }
        cursor = block.end;
    }
    if cursor != n {
        return Err(Error::BadPartition(format!(
            "partition covers {cursor} of {n} coordinates"
        )));
    }
    Ok(())
}

/// Block oscillations: entry `k` is the supremum of `|f(x) - f(z)|` over
/// pairs differing only inside block `k`, per unit block product-metric
/// distance.
pub fn block_oscillation_vector(
    f: &FunctionTable,
    model: &ProductModel,
    partition: &[Range<usize>],
) -> Result<Vec<f64>> {
    f.check_model(model)?;
    validate_partition(partition, model.dimension())?;
    let grid = model.grid();
    let values = f.values();
    let mut out = Vec::with_capacity(partition.len());
    for block in partition {
        let block_sizes: Vec<usize> = block.clone().map(|i| model.coordinate(i).size()).collect();
        let block_count: usize = block_sizes.iter().product();
        // Stride of a block configuration inside the state index: the digits
        // of a contiguous block are consecutive, so the block acts with the
        // stride of its last coordinate.
        let stride = grid.stride(block.end - 1);
        let mut best: f64 = 0.0;
        let mut du = vec![0usize; block_sizes.len()];
        let mut dv = vec![0usize; block_sizes.len()];
        let block_grid = crate::model::block_grid(&block_sizes)?;
        for idx in 0..grid.len() {
            // Visit each fiber once: all block digits zero.
            if block.clone().any(|c| grid.digit(idx, c) != 0) {
                continue;
            }
            for u in 0..block_count {
                let fu = values[idx + u * stride];
                block_grid.decode_into(u, &mut du);
                for v in u + 1..block_count {
                    block_grid.decode_into(v, &mut dv);
                    let mut dist = 0.0;
                    for (off, coord) in block.clone().enumerate() {
                        dist += model.coordinate(coord).distance(du[off], dv[off]);
                    }
                    let fv = values[idx + v * stride];
                    best = best.max((fu - fv).abs() / dist);
                }
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Block-partition Gamma: the maximal-coupling construction lifted to
/// contiguous blocks. For `l > k` the entry is the supremum over
/// positive-probability prefixes and differing block-`k` configurations of
/// `sum_{j in T_l} ||rho_j|| TV(suffix laws from j) / rho^{T_k}(u, v)`,
/// scaled by the block diameter `||rho^{T_k}||`; the diagonal holds the block
/// diameters. With singleton blocks this reproduces [`gamma_goldstein`]
/// exactly.
pub fn gamma_blocks(model: &ProductModel, partition: &[Range<usize>]) -> Result<GammaMatrix> {
    let n = model.dimension();
    validate_partition(partition, n)?;
    let m = partition.len();
    let pmf = model.pmf()?;
    let grid = model.grid();
    let block_diam: Vec<f64> = partition
        .iter()
        .map(|b| b.clone().map(|i| model.coordinate(i).diameter()).sum())
        .collect();
    let mut entries = Matrix::zeros(m, m);
    for k in 0..m {
        entries[(k, k)] = block_diam[k];
    }
    let mut notes = Vec::new();
    let mut skipped = 0usize;
    let mut buf1: Vec<f64> = Vec::new();
    let mut buf2: Vec<f64> = Vec::new();
    let mut profile: Vec<f64> = Vec::new();
    for k in 0..m - 1 {
        let block = &partition[k];
        let boundary = block.end;
        let tail = grid.suffix_count(boundary);
        let masses = prefix_masses(model, boundary)?;
        let parents = grid.prefix_count(block.start);
        let block_sizes: Vec<usize> = block.clone().map(|i| model.coordinate(i).size()).collect();
        let block_count: usize = block_sizes.iter().product();
        let block_grid = crate::model::block_grid(&block_sizes)?;
        let mut du = vec![0usize; block_sizes.len()];
        let mut dv = vec![0usize; block_sizes.len()];
        let mut any = false;
        let mut row = vec![0.0f64; m];
        for parent in 0..parents {
            for u in 0..block_count {
                let p1 = parent * block_count + u;
                if masses[p1] <= 0.0 {
                    skipped += block_count - u - 1;
                    continue;
                }
                block_grid.decode_into(u, &mut du);
                for v in u + 1..block_count {
                    let p2 = parent * block_count + v;
                    if masses[p2] <= 0.0 {
                        skipped += 1;
                        continue;
                    }
                    block_grid.decode_into(v, &mut dv);
                    let mut rho_pair = 0.0;
                    for (off, coord) in block.clone().enumerate() {
                        rho_pair += model.coordinate(coord).distance(du[off], dv[off]);
                    }
                    buf1.clear();
                    buf1.extend_from_slice(&pmf[p1 * tail..(p1 + 1) * tail]);
                    buf2.clear();
                    buf2.extend_from_slice(&pmf[p2 * tail..(p2 + 1) * tail]);
                    for x in buf1.iter_mut() {
                        *x /= masses[p1];
                    }
                    for x in buf2.iter_mut() {
                        *x /= masses[p2];
                    }
                    suffix_tv_profile(model.sizes(), boundary, &mut buf1, &mut buf2, &mut profile);
                    for (l, target) in partition.iter().enumerate().skip(k + 1) {
                        let mut acc = 0.0;
                        for j in target.clone() {
                            let tv = profile[j - boundary];
                            acc += model.coordinate(j).diameter() * tv / rho_pair;
                        }
                        row[l] = row[l].max(acc);
                    }
                    any = true;
                }
            }
        }
        for l in k + 1..m {
            entries[(k, l)] = block_diam[k] * row[l];
        }
        if !any {
            notes.push(format!("block row {k}: every conditioning pair was degenerate"));
        }
    }
    Ok(GammaMatrix {
        entries,
        method: GammaMethod::Block,
        valid: true,
        notes,
        block_partition: Some(partition.to_vec()),
        skipped_pairs: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    #[test]
    fn goldstein_on_product_law_is_diagonal() {
        let p1 = fixtures::p1();
        let g = gamma_goldstein(&p1).unwrap();
        assert!(g.valid);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_close(g.entries[(i, j)], expect, 1e-14, "entry");
            }
        }
    }

    #[test]
    fn goldstein_m1_anchor() {
        let m1 = fixtures::m1();
        let g = gamma_goldstein(&m1).unwrap();
        let expect = [[1.0, 0.7, 0.49], [0.0, 1.0, 0.7], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_close(g.entries[(i, j)], expect[i][j], 1e-12, "goldstein entry");
            }
        }
    }

    #[test]
    fn goldstein_single_coordinate() {
        let model = ProductModel::new(
            vec![CoordinateSpace::trivial(3, 2.5).unwrap()],
            JointLaw::Explicit(vec![0.2, 0.5, 0.3]),
        )
        .unwrap();
        let g = gamma_goldstein(&model).unwrap();
        assert_eq!(g.entries.rows(), 1);
        assert_close(g.entries[(0, 0)], 2.5, 0.0, "diameter");
    }

    #[test]
    fn chazottes_m1_anchor() {
        let m1 = fixtures::m1();
        let g = gamma_chazottes(&m1).unwrap();
        let expect = [[1.0, 0.7, 0.7], [0.0, 1.0, 0.7], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_close(g.entries[(i, j)], expect[i][j], 1e-12, "chazottes entry");
            }
        }
    }

    #[test]
    fn chazottes_equals_goldstein_for_two_coordinates() {
        let model = ProductModel::new(
            vec![
                CoordinateSpace::trivial(2, 1.0).unwrap(),
                CoordinateSpace::trivial(3, 1.0).unwrap(),
            ],
            JointLaw::Explicit(vec![0.1, 0.2, 0.05, 0.3, 0.15, 0.2]),
        )
        .unwrap();
        let g = gamma_goldstein(&model).unwrap();
        let c = gamma_chazottes(&model).unwrap();
        assert_eq!(g.entries, c.entries);
    }

    #[test]
    fn markov_theta_m1_anchor() {
        let m1 = fixtures::m1();
        let chain = markov_chain_view(&m1).unwrap();
        assert_eq!(chain.thetas.len(), 2);
        assert_close(chain.thetas[0], 0.7, 1e-15, "theta");
        let g = gamma_markov_theta(&chain, m1.coordinates()).unwrap();
        let expect = [[1.0, 0.7, 0.49], [0.0, 1.0, 0.7], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_close(g.entries[(i, j)], expect[i][j], 1e-12, "markov entry");
            }
        }
        // Coincides with the maximal-coupling entries for this chain.
        let gold = gamma_goldstein(&m1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(g.entries[(i, j)], gold.entries[(i, j)], 1e-12, "coincidence");
            }
        }
    }

    #[test]
    fn markov_theta_vacuous_and_constant_kernels() {
        let coords: Vec<CoordinateSpace> =
            (0..3).map(|_| CoordinateSpace::trivial(2, 1.0).unwrap()).collect();
        let constant = Matrix::from_rows(&[vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap();
        let model = ProductModel::new(
            coords.clone(),
            JointLaw::Markov { initial: vec![0.5, 0.5], kernels: vec![constant.clone(), constant] },
        )
        .unwrap();
        let chain = markov_chain_view(&model).unwrap();
        let g = gamma_markov_theta(&chain, model.coordinates()).unwrap();
        assert_eq!(g.entries, Matrix::identity(3));

        let id = Matrix::identity(2);
        let model = ProductModel::new(
            coords,
            JointLaw::Markov { initial: vec![0.5, 0.5], kernels: vec![id.clone(), id] },
        )
        .unwrap();
        let chain = markov_chain_view(&model).unwrap();
        let g = gamma_markov_theta(&chain, model.coordinates()).unwrap();
        for i in 0..3 {
            for j in i..3 {
                assert_close(g.entries[(i, j)], 1.0, 0.0, "vacuous entry");
            }
        }
    }

    #[test]
    fn markov_theta_requires_markov_representation() {
        let p1 = fixtures::p1();
        assert!(matches!(
            markov_chain_view(&p1),
            Err(Error::WrongRepresentation { expected: "markov" })
        ));
    }

    #[test]
    fn gibbs_theta_examples() {
        let ones = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let b = gibbs_theta_bounds(&[ones.clone(), ones]).unwrap();
        assert_eq!(b, vec![0.0, 0.0]);

        let spread = Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = gibbs_theta_bounds(&[spread]).unwrap();
        assert_close(b[0], 0.5, 1e-15, "R=3, r=1");

        let psi = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let b = gibbs_theta_bounds(std::slice::from_ref(&psi)).unwrap();
        assert_close(b[0], 1.0 / 3.0, 1e-15, "psi bound");
        let (_, kernels) = gibbs_chain_kernels(&[psi]).unwrap();
        let theta = dobrushin_theta(&kernels[0]).unwrap();
        assert!(theta <= b[0] + 1e-10);
    }

    #[test]
    fn nonpositive_potential_is_rejected() {
        let bad = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(gibbs_theta_bounds(&[bad]), Err(Error::NonpositivePotential)));
    }

    #[test]
    fn blocks_singleton_partition_equals_goldstein_exactly() {
        let m1 = fixtures::m1();
        let singleton: Vec<std::ops::Range<usize>> = (0..3).map(|i| i..i + 1).collect();
        let blocks = gamma_blocks(&m1, &singleton).unwrap();
        let gold = gamma_goldstein(&m1).unwrap();
        assert_eq!(blocks.entries, gold.entries);
    }

    #[test]
    fn blocks_whole_space_is_total_diameter() {
        let m1 = fixtures::m1();
        let g = gamma_blocks(&m1, &[0..3]).unwrap();
        assert_eq!(g.entries.rows(), 1);
        assert_close(g.entries[(0, 0)], 3.0, 0.0, "total diameter");
    }

    #[test]
    fn blocks_m1_two_block_partition() {
        let m1 = fixtures::m1();
        let g = gamma_blocks(&m1, &[0..1, 1..3]).unwrap();
        // Off-diagonal entry: suffix TVs given X1 are 0.7 (from coordinate 2)
        // and 0.49 (from coordinate 3), summed per the per-suffix coupling
        // identities; diagonal entries are the block diameters.
        assert_close(g.entries[(0, 0)], 1.0, 0.0, "first block diameter");
        assert_close(g.entries[(1, 1)], 2.0, 0.0, "second block diameter");
        assert_close(g.entries[(0, 1)], 0.7 + 0.49, 1e-12, "lifted entry");
        assert_close(g.entries[(1, 0)], 0.0, 0.0, "lower triangle");
    }

    #[test]
    fn bad_partitions_are_rejected() {
        let m1 = fixtures::m1();
        assert!(matches!(gamma_blocks(&m1, &[0..1]), Err(Error::BadPartition(_))));
        assert!(matches!(gamma_blocks(&m1, &[0..2, 1..3]), Err(Error::BadPartition(_))));
        assert!(matches!(gamma_blocks(&m1, &[1..3, 0..1]), Err(Error::BadPartition(_))));
    }

    #[test]
    fn block_oscillations_of_hamming_weight() {
        let m1 = fixtures::m1();
        let f = fixtures::hamming_weight(&m1);
        let osc = block_oscillation_vector(&f, &m1, &[0..1, 1..3]).unwrap();
        assert_close(osc[0], 1.0, 0.0, "singleton block");
        assert_close(osc[1], 1.0, 0.0, "pair block");
    }

    #[test]
    fn kulske_product_law_is_identity() {
        let p1 = fixtures::p1();
        let g = gamma_kulske(&p1).unwrap();
        assert!(g.valid);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_close(g.entries[(i, j)], expect, 1e-12, "kulske entry");
            }
        }
    }

    #[test]
    fn kulske_m1_is_transposed_comparison_series() {
        let m1 = fixtures::m1();
        let c = interdependence_matrix(&m1).unwrap();
        assert!(c.uniqueness_holds);
        let d = comparison_matrix(&c).unwrap();
        let g = gamma_kulske(&m1).unwrap();
        assert!(g.valid);
        for i in 0..3 {
            for j in 0..3 {
                assert_close(g.entries[(i, j)], d.d[(j, i)], 1e-12, "transpose");
            }
        }
    }

    #[test]
    fn kulske_flags_uniqueness_failure() {
        // Perfectly correlated pair: conditionals are point masses, C is the
        // exchange matrix with spectral radius 1.
        let model = ProductModel::new(
            vec![
                CoordinateSpace::trivial(2, 1.0).unwrap(),
                CoordinateSpace::trivial(2, 1.0).unwrap(),
            ],
            JointLaw::Explicit(vec![0.5, 0.0, 0.0, 0.5]),
        )
        .unwrap();
        let g = gamma_kulske(&model).unwrap();
        assert!(!g.valid);
        assert!(!g.notes.is_empty());
    }
}
