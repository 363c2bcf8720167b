//! Finite metric product spaces and joint laws.
//!
//! A [`ProductModel`] couples an ordered list of coordinate spaces (finite
//! alphabets with metrics) with a joint law in one of four representations:
//! an explicit dense pmf, a Markov chain, a Gibbs chain given by pair
//! potentials, or a product of marginals. Everything downstream works on the
//! materialized dense pmf in the canonical state order: lexicographic with
//! coordinate 1 most significant.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default cap on the materialized state-space size. Every algorithm in this
/// crate is enumeration-based, so the cap is a guard rail, not a tuning knob.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

const NORMALIZATION_TOL: f64 = 1e-12;

/// Mixed-radix indexing for the canonical state order (coordinate 1 most
/// significant).
#[derive(Clone, Debug)]
pub(crate) struct Grid {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Grid {
    pub(crate) fn new(sizes: &[usize]) -> Result<Grid> {
        let n = sizes.len();
        let mut strides = vec![1usize; n];
        let mut total: usize = 1;
        for i in (0..n).rev() {
            strides[i] = total;
            total = total.checked_mul(sizes[i]).ok_or(Error::CapExceeded {
                states: usize::MAX,
                cap: DEFAULT_STATE_CAP,
            })?;
        }
        Ok(Grid { sizes: sizes.to_vec(), strides, total })
    }

    pub(crate) fn len(&self) -> usize {
        self.total
    }

    pub(crate) fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub(crate) fn stride(&self, coord: usize) -> usize {
        self.strides[coord]
    }

    pub(crate) fn encode(&self, state: &[usize]) -> usize {
        debug_assert_eq!(state.len(), self.sizes.len());
        state.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub(crate) fn decode_into(&self, index: usize, out: &mut [usize]) {
        let mut rest = index;
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = rest / s;
            rest %= s;
        }
    }

    pub(crate) fn digit(&self, index: usize, coord: usize) -> usize {
        (index / self.strides[coord]) % self.sizes[coord]
    }

    /// Number of states of the prefix `[0, len)` block.
    pub(crate) fn prefix_count(&self, len: usize) -> usize {
        self.sizes[..len].iter().product()
    }

    /// Number of states of the suffix `[from, n)` block.
    pub(crate) fn suffix_count(&self, from: usize) -> usize {
        self.sizes[from..].iter().product()
    }
}

// Standalone grid over a subset of coordinate sizes (used by block code).
pub(crate) fn block_grid(sizes: &[usize]) -> Result<Grid> {
    Grid::new(sizes)
}

/// One coordinate of the product space: a finite alphabet with a metric.
#[derive(Clone, Debug)]
pub struct CoordinateSpace {
    size: usize,
    metric: Matrix,
    labels: Option<Vec<String>>,
    diameter: f64,
}

impl CoordinateSpace {
    /// Validates the metric axioms: symmetric, zero diagonal, strictly
    /// positive off-diagonal, triangle inequality.
    pub fn new(size: usize, metric: Matrix, labels: Option<Vec<String>>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidMetric("alphabet must be nonempty".into()));
        }
        if metric.rows() != size || metric.cols() != size {
            return Err(Error::DimensionMismatch(metric.rows(), size));
        }
        if let Some(ls) = &labels {
            if ls.len() != size {
                return Err(Error::DimensionMismatch(ls.len(), size));
            }
        }
        let mut diameter: f64 = 0.0;
        for i in 0..size {
            for j in 0..size {
                let d = metric[(i, j)];
                if !d.is_finite() {
                    return Err(Error::InvalidMetric(format!("metric[{i}][{j}] is not finite")));
                }
                if i == j && d != 0.0 {
                    return Err(Error::InvalidMetric(format!("metric[{i}][{i}] must be 0")));
                }
                if i != j && d <= 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "metric[{i}][{j}] must be strictly positive"
                    )));
                }
                if (d - metric[(j, i)]).abs() > 0.0 {
                    return Err(Error::InvalidMetric(format!(
                        "metric must be symmetric at ({i},{j})"
                    )));
                }
                diameter = diameter.max(d);
            }
        }
        for i in 0..size {
            for j in 0..size {
                for k in 0..size {
                    if metric[(i, j)] > metric[(i, k)] + metric[(k, j)] + 1e-12 {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails for ({i},{j}) via {k}"
                        )));
                    }
                }
            }
        }
        Ok(CoordinateSpace { size, metric, labels, diameter })
    }

    /// The scaled trivial metric `alpha * 1{x != z}`.
    ///
    /// Metrics are stored densely, so the alphabet size is capped at 4096
    /// here; untrusted documents reach this constructor with a bare integer.
    pub fn trivial(size: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidMetric(format!("alpha must be positive, got {alpha}")));
        }
        if size > 4096 {
            return Err(Error::InvalidMetric(format!(
                "alphabet of size {size} is too large for a dense metric"
            )));
        }
        let mut m = Matrix::zeros(size, size);
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    m[(i, j)] = alpha;
                }
            }
        }
        CoordinateSpace::new(size, m, None)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn metric(&self) -> &Matrix {
        &self.metric
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.metric[(a, b)]
    }

    /// Metric diameter `max_{x,z} rho(x,z)`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Returns `Some(alpha)` when the metric is exactly `alpha * 1{x != z}`.
    pub fn scaled_trivial_alpha(&self) -> Option<f64> {
        if self.size == 1 {
            return Some(self.diameter.max(1.0));
        }
        let alpha = self.metric[(0, 1)];
        for i in 0..self.size {
            for j in 0..self.size {
                if i != j && self.metric[(i, j)] != alpha {
                    return None;
                }
            }
        }
        Some(alpha)
    }
}

/// Joint law over the product space in one of four representations.
#[derive(Clone, Debug)]
pub enum JointLaw {
    /// Dense pmf over all states in canonical order.
    Explicit(Vec<f64>),
    /// Markov chain: initial distribution plus one kernel per transition.
    Markov { initial: Vec<f64>, kernels: Vec<Matrix> },
    /// Chain-graph Gibbs measure given by strictly positive pair potentials.
    GibbsChain { potentials: Vec<Matrix> },
    /// Product of per-coordinate marginals.
    Product(Vec<Vec<f64>>),
}

impl JointLaw {
    pub fn family_name(&self) -> &'static str {
        match self {
            JointLaw::Explicit(_) => "explicit",
            JointLaw::Markov { .. } => "markov",
            JointLaw::GibbsChain { .. } => "gibbs_chain",
            JointLaw::Product(_) => "product",
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidLaw(format!("{what}[{i}] = {v} is not a probability")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidLaw(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// A real-valued function on the full product space, stored densely in
/// canonical index order.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionTable {
    values: Vec<f64>,
}

impl FunctionTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidFunction("empty value table".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidFunction(format!("value[{i}] = {v} is not finite")));
            }
        }
        Ok(FunctionTable { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_model(&self, model: &ProductModel) -> Result<()> {
        if self.values.len() != model.state_count() {
            return Err(Error::DimensionMismatch(self.values.len(), model.state_count()));
        }
        Ok(())
    }
}

/// The vector of per-coordinate local oscillations `delta_i(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillationVector {
    deltas: Vec<f64>,
}

impl OscillationVector {
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn max(&self) -> f64 {
        self.deltas.iter().fold(0.0, |m, d| m.max(*d))
    }

    pub fn l2_norm(&self) -> f64 {
        self.deltas.iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

/// The product space together with its joint law.
#[derive(Debug)]
pub struct ProductModel {
    coordinates: Vec<CoordinateSpace>,
    law: JointLaw,
    grid: Grid,
    state_cap: usize,
    pmf_cache: OnceLock<Vec<f64>>,
}

impl Clone for ProductModel {
    fn clone(&self) -> Self {
        let pmf_cache = OnceLock::new();
        if let Some(p) = self.pmf_cache.get() {
            let _ = pmf_cache.set(p.clone());
        }
        ProductModel {
            coordinates: self.coordinates.clone(),
            law: self.law.clone(),
            grid: self.grid.clone(),
            state_cap: self.state_cap,
            pmf_cache,
        }
    }
}

impl ProductModel {
    pub fn new(coordinates: Vec<CoordinateSpace>, law: JointLaw) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::InvalidLaw("a model needs at least one coordinate".into()));
        }
        let sizes: Vec<usize> = coordinates.iter().map(|c| c.size()).collect();
        let grid = Grid::new(&sizes)?;
        validate_law(&law, &sizes, grid.len())?;
        Ok(ProductModel {
            coordinates,
            law,
            grid,
            state_cap: DEFAULT_STATE_CAP,
            pmf_cache: OnceLock::new(),
        })
    }

    pub fn with_state_cap(mut self, cap: usize) -> Self {
        self.state_cap = cap;
        self
    }

    /// A model with the same coordinates but a different explicit law.
    pub fn with_explicit_law(&self, pmf: Vec<f64>) -> Result<ProductModel> {
        let m = ProductModel::new(self.coordinates.clone(), JointLaw::Explicit(pmf))?;
        Ok(m.with_state_cap(self.state_cap))
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    pub fn sizes(&self) -> &[usize] {
        self.grid.sizes()
    }

    pub fn state_count(&self) -> usize {
        self.grid.len()
    }

    pub fn state_cap(&self) -> usize {
        self.state_cap
    }

    pub fn coordinates(&self) -> &[CoordinateSpace] {
        &self.coordinates
    }

    pub fn coordinate(&self, i: usize) -> &CoordinateSpace {
        &self.coordinates[i]
    }

    pub fn law(&self) -> &JointLaw {
        &self.law
    }

    pub(crate) fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn encode_state(&self, state: &[usize]) -> usize {
        self.grid.encode(state)
    }

    pub fn decode_state(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.dimension()];
        self.grid.decode_into(index, &mut out);
        out
    }

    /// Product metric `rho(x, z) = sum_i rho_i(x_i, z_i)`.
    pub fn product_distance(&self, x: &[usize], z: &[usize]) -> f64 {
        self.coordinates
            .iter()
            .zip(x.iter().zip(z))
            .map(|(c, (a, b))| c.distance(*a, *b))
            .sum()
    }

    /// The materialized dense pmf in canonical order, cached after the first
    /// call.
    pub fn pmf(&self) -> Result<&[f64]> {
        if self.grid.len() > self.state_cap {
            return Err(Error::CapExceeded { states: self.grid.len(), cap: self.state_cap });
        }
        if let Some(p) = self.pmf_cache.get() {
            return Ok(p);
        }
        let p = materialize(&self.law, &self.coordinates, self.state_cap)?;
        let _ = self.pmf_cache.set(p);
        Ok(self.pmf_cache.get().expect("pmf cache was just set"))
    }

    /// Exact marginal/conditional law of the coordinates in `target`, given
    /// the configuration pairs `(coordinate, value)` in `given`.
    ///
    /// The result is a dense pmf over the target coordinates in ascending
    /// coordinate order (first listed most significant).
    pub fn marginal_conditional(
        &self,
        target: &[usize],
        given: &[(usize, usize)],
    ) -> Result<Vec<f64>> {
        let n = self.dimension();
        let tgt: BTreeSet<usize> = target.iter().copied().collect();
        let cond: BTreeSet<usize> = given.iter().map(|(i, _)| *i).collect();
        if tgt.is_empty() {
            return Err(Error::InvalidLaw("empty marginal target".into()));
        }
        if cond.len() != given.len() {
            return Err(Error::InvalidLaw("repeated conditioning coordinate".into()));
        }
        for &i in tgt.iter().chain(cond.iter()) {
            if i >= n {
                return Err(Error::DimensionMismatch(i, n));
            }
        }
        if !tgt.is_disjoint(&cond) {
            return Err(Error::InvalidLaw("target and conditioning sets intersect".into()));
        }
        for &(i, v) in given {
            if v >= self.coordinates[i].size() {
                return Err(Error::DimensionMismatch(v, self.coordinates[i].size()));
            }
        }
        let pmf = self.pmf()?;
        let tgt: Vec<usize> = tgt.into_iter().collect();
        let tgt_sizes: Vec<usize> = tgt.iter().map(|&i| self.coordinates[i].size()).collect();
        let out_grid = Grid::new(&tgt_sizes)?;
        let mut out = vec![0.0; out_grid.len()];
        let mut digits = vec![0usize; n];
        let mut total = 0.0;
        'states: for (idx, &mass) in pmf.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            self.grid.decode_into(idx, &mut digits);
            for &(i, v) in given {
                if digits[i] != v {
                    continue 'states;
                }
            }
            let key: Vec<usize> = tgt.iter().map(|&i| digits[i]).collect();
            out[out_grid.encode(&key)] += mass;
            total += mass;
        }
        if total <= 0.0 {
            return Err(Error::ZeroConditioningEvent);
        }
        for v in out.iter_mut() {
            *v /= total;
        }
        Ok(out)
    }

    /// Conditional law of coordinate `i` given the values of all other
    /// coordinates taken from `config` (the `i`-th entry of `config` is
    /// ignored). Errors with [`Error::ZeroConditioningEvent`] when the
    /// conditioning configuration has zero mass.
    pub fn one_site_conditional(&self, i: usize, config: &[usize]) -> Result<Vec<f64>> {
        let pmf = self.pmf()?;
        let m = self.coordinates[i].size();
        let stride = self.grid.stride(i);
        let mut base = self.grid.encode(config);
        base -= config[i] * stride;
        let mut out = vec![0.0; m];
        let mut total = 0.0;
        for (a, o) in out.iter_mut().enumerate() {
            let v = pmf[base + a * stride];
            *o = v;
            total += v;
        }
        if total <= 0.0 {
            return Err(Error::ZeroConditioningEvent);
        }
        for v in out.iter_mut() {
            *v /= total;
        }
        Ok(out)
    }

    /// Stable digest of the full model (coordinates, metrics, law numbers).
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"depconc-model-v1");
        h.update((self.dimension() as u64).to_le_bytes());
        for c in &self.coordinates {
            h.update((c.size() as u64).to_le_bytes());
            for v in c.metric().data() {
                h.update(v.to_le_bytes());
            }
            if let Some(labels) = c.labels() {
                for l in labels {
                    h.update((l.len() as u64).to_le_bytes());
                    h.update(l.as_bytes());
                }
            }
        }
        match &self.law {
            JointLaw::Explicit(p) => {
                h.update(b"explicit");
                for v in p {
                    h.update(v.to_le_bytes());
                }
            }
            JointLaw::Markov { initial, kernels } => {
                h.update(b"markov");
                for v in initial {
                    h.update(v.to_le_bytes());
                }
                for k in kernels {
                    for v in k.data() {
                        h.update(v.to_le_bytes());
                    }
                }
            }
            JointLaw::GibbsChain { potentials } => {
                h.update(b"gibbs_chain");
                for p in potentials {
                    for v in p.data() {
                        h.update(v.to_le_bytes());
                    }
                }
            }
            JointLaw::Product(ms) => {
                h.update(b"product");
                for m in ms {
                    for v in m {
                        h.update(v.to_le_bytes());
                    }
                }
            }
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn validate_law(law: &JointLaw, sizes: &[usize], total: usize) -> Result<()> {
    let n = sizes.len();
    match law {
        JointLaw::Explicit(p) => {
            if p.len() != total {
                return Err(Error::DimensionMismatch(p.len(), total));
            }
            check_distribution(p, "pmf")
        }
        JointLaw::Markov { initial, kernels } => {
            if initial.len() != sizes[0] {
                return Err(Error::DimensionMismatch(initial.len(), sizes[0]));
            }
            check_distribution(initial, "initial")?;
            if kernels.len() != n - 1 {
                return Err(Error::DimensionMismatch(kernels.len(), n - 1));
            }
            for (i, k) in kernels.iter().enumerate() {
                if k.rows() != sizes[i] || k.cols() != sizes[i + 1] {
                    return Err(Error::DimensionMismatch(k.rows() * k.cols(), sizes[i] * sizes[i + 1]));
                }
                for r in 0..k.rows() {
                    check_distribution(k.row(r), &format!("kernel[{i}] row {r}"))?;
                }
            }
            Ok(())
        }
        JointLaw::GibbsChain { potentials } => {
            if n < 2 {
                return Err(Error::InvalidLaw("a gibbs_chain law needs at least 2 coordinates".into()));
            }
            if potentials.len() != n - 1 {
                return Err(Error::DimensionMismatch(potentials.len(), n - 1));
            }
            for (i, p) in potentials.iter().enumerate() {
                if p.rows() != sizes[i] || p.cols() != sizes[i + 1] {
                    return Err(Error::DimensionMismatch(p.rows() * p.cols(), sizes[i] * sizes[i + 1]));
                }
                for v in p.data() {
                    if !v.is_finite() || *v <= 0.0 {
                        return Err(Error::NonpositivePotential);
                    }
                }
            }
            Ok(())
        }
        JointLaw::Product(marginals) => {
            if marginals.len() != n {
                return Err(Error::DimensionMismatch(marginals.len(), n));
            }
            for (i, m) in marginals.iter().enumerate() {
                if m.len() != sizes[i] {
                    return Err(Error::DimensionMismatch(m.len(), sizes[i]));
                }
                check_distribution(m, &format!("marginal[{i}]"))?;
            }
            Ok(())
        }
    }
}

/// Materializes a joint law to the explicit dense pmf in canonical order.
///
/// For the markov form the entry at `x` is `mu_1(x_1) * prod K_i(x_i, x_{i+1})`,
/// for the gibbs form the normalized product of potentials, and for the
/// product form the product of marginals. Idempotent on explicit laws.
pub fn materialize(
    law: &JointLaw,
    coordinates: &[CoordinateSpace],
    cap: usize,
) -> Result<Vec<f64>> {
    let sizes: Vec<usize> = coordinates.iter().map(|c| c.size()).collect();
    let grid = Grid::new(&sizes)?;
    let total = grid.len();
    if total > cap {
        return Err(Error::CapExceeded { states: total, cap });
    }
    validate_law(law, &sizes, total)?;
    let n = sizes.len();
    let mut out = vec![0.0; total];
    let mut digits = vec![0usize; n];
    match law {
        JointLaw::Explicit(p) => out.copy_from_slice(p),
        JointLaw::Markov { initial, kernels } => {
            for (idx, o) in out.iter_mut().enumerate() {
                grid.decode_into(idx, &mut digits);
                let mut mass = initial[digits[0]];
                for (i, k) in kernels.iter().enumerate() {
                    if mass == 0.0 {
                        break;
                    }
                    mass *= k[(digits[i], digits[i + 1])];
                }
                *o = mass;
            }
        }
        JointLaw::GibbsChain { potentials } => {
            let mut z = 0.0;
            for (idx, o) in out.iter_mut().enumerate() {
                grid.decode_into(idx, &mut digits);
                let mut w = 1.0;
                for (i, p) in potentials.iter().enumerate() {
                    w *= p[(digits[i], digits[i + 1])];
                }
                *o = w;
                z += w;
            }
            if !(z > 0.0) || !z.is_finite() {
                return Err(Error::InvalidLaw(format!("gibbs partition sum is {z}")));
            }
            for o in out.iter_mut() {
                *o /= z;
            }
        }
        JointLaw::Product(marginals) => {
            for (idx, o) in out.iter_mut().enumerate() {
                grid.decode_into(idx, &mut digits);
                let mut mass = 1.0;
                for (i, m) in marginals.iter().enumerate() {
                    mass *= m[digits[i]];
                }
                *o = mass;
            }
        }
    }
    Ok(out)
}

/// Exact per-coordinate local oscillations, taking `0/0 = 0`.
pub fn oscillation_vector(f: &FunctionTable, model: &ProductModel) -> Result<OscillationVector> {
    f.check_model(model)?;
    let grid = model.grid();
    let values = f.values();
    let n = model.dimension();
    let mut deltas = vec![0.0; n];
    for c in 0..n {
        let m = model.coordinate(c).size();
        let stride = grid.stride(c);
        let metric = model.coordinate(c).metric();
        let mut best: f64 = 0.0;
        for idx in 0..grid.len() {
            if grid.digit(idx, c) != 0 {
                continue;
            }
            for a in 0..m {
                let fa = values[idx + a * stride];
                for b in a + 1..m {
                    let fb = values[idx + b * stride];
                    let d = metric[(a, b)];
                    // Off-diagonal metric entries are strictly positive, so
                    // the 0/0 convention only matters for a == b.
                    best = best.max((fa - fb).abs() / d);
                }
            }
        }
        deltas[c] = best;
    }
    Ok(OscillationVector { deltas })
}

/// Exact Lipschitz seminorm `sup |f(x) - f(y)| / rho(x, y)` by enumeration of
/// all state pairs.
pub fn lipschitz_seminorm(f: &FunctionTable, model: &ProductModel) -> Result<f64> {
    f.check_model(model)?;
    let grid = model.grid();
    let values = f.values();
    let n = model.dimension();
    let total = grid.len();
    let mut x = vec![0usize; n];
    let mut y = vec![0usize; n];
    let mut best: f64 = 0.0;
    for i in 0..total {
        grid.decode_into(i, &mut x);
        for j in i + 1..total {
            grid.decode_into(j, &mut y);
            let dist = model.product_distance(&x, &y);
            best = best.max((values[i] - values[j]).abs() / dist);
        }
    }
    Ok(best)
}
