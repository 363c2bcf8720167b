//! Ground-truth engines: exact tail probabilities by full enumeration, the
//! single-site resampling kernel and its invariance check, seeded Monte Carlo
//! sampling, reproducible random model generation, and the bound-soundness
//! harness that certifies every applicable bound against the exact tail.
//!
//! Exact enumeration is the acceptance oracle everywhere; Monte Carlo exists
//! for scale demonstrations only.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::bounds::{
    azuma_tail, chatterjee_tail, martingale_tail, samson_tail, tensorized_tc_constant, MethodTag,
};
use crate::error::{Error, Result};
use crate::gamma::{
    gamma_chazottes, gamma_goldstein, gamma_kulske, gamma_markov_theta, markov_chain_view,
    GammaMatrix,
};
use crate::linalg::Matrix;
use crate::mixing::{interdependence_matrix, martingale_widths};
use crate::model::{
    oscillation_vector, CoordinateSpace, FunctionTable, JointLaw, ProductModel,
};

/// Exact two-sided tail `P{ |f(X) - E f| >= t }` by full enumeration.
pub fn exact_tail(model: &ProductModel, f: &FunctionTable, t: f64) -> Result<f64> {
    f.check_model(model)?;
    let pmf = model.pmf()?;
    let mean: f64 = pmf.iter().zip(f.values()).map(|(m, v)| m * v).sum();
    Ok(pmf
        .iter()
        .zip(f.values())
        .filter(|(_, v)| (**v - mean).abs() >= t)
        .map(|(m, _)| m)
        .sum())
}

/// Exact one-sided upper tail `P{ f(X) - E f >= t }`.
pub fn exact_upper_tail(model: &ProductModel, f: &FunctionTable, t: f64) -> Result<f64> {
    f.check_model(model)?;
    let pmf = model.pmf()?;
    let mean: f64 = pmf.iter().zip(f.values()).map(|(m, v)| m * v).sum();
    Ok(pmf
        .iter()
        .zip(f.values())
        .filter(|(_, v)| **v - mean >= t)
        .map(|(m, _)| m)
        .sum())
}

/// The single-site resampling kernel: pick a coordinate uniformly and redraw
/// it from its conditional law given the rest. Leaves the model's law
/// invariant. Rows at zero-probability states fall back to staying put, which
/// keeps the matrix row-stochastic without affecting invariance.
pub fn gibbs_sampler_kernel(model: &ProductModel) -> Result<Matrix> {
    let pmf = model.pmf()?;
    let grid = model.grid();
    let total = grid.len();
    let n = model.dimension();
    let mut kernel = Matrix::zeros(total, total);
    let weight = 1.0 / n as f64;
    for x in 0..total {
        for i in 0..n {
            let m_i = model.coordinate(i).size();
            let stride = grid.stride(i);
            let base = x - grid.digit(x, i) * stride;
            let mass: f64 = (0..m_i).map(|a| pmf[base + a * stride]).sum();
            if mass > 0.0 {
                for a in 0..m_i {
                    kernel[(x, base + a * stride)] += weight * pmf[base + a * stride] / mass;
                }
            } else {
                kernel[(x, x)] += weight;
            }
        }
    }
    Ok(kernel)
}

/// Total variation between the law and its image under the resampling
/// kernel; the invariance certificate.
pub fn gibbs_invariance_gap(model: &ProductModel) -> Result<f64> {
    let pmf = model.pmf()?;
    let kernel = gibbs_sampler_kernel(model)?;
    let total = pmf.len();
    let mut image = vec![0.0; total];
    for x in 0..total {
        let mass = pmf[x];
        if mass == 0.0 {
            continue;
        }
        for y in 0..total {
            image[y] += mass * kernel[(x, y)];
        }
    }
    crate::transport::tv(pmf, &image)
}

/// I.i.d. draws from the model by sequential inverse-CDF sampling along the
/// coordinate order. Deterministic for a fixed seed.
pub fn mc_sample(model: &ProductModel, count: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let pmf = model.pmf()?;
    let grid = model.grid();
    let n = model.dimension();
    // Conditional tables per prefix: conditionals[i] maps a prefix of length
    // i to the conditional law of the next coordinate.
    let mut conditionals: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let prefixes = grid.prefix_count(i);
        let m_i = model.coordinate(i).size();
        let child_tail = grid.suffix_count(i + 1);
        let mut table = vec![0.0; prefixes * m_i];
        for p in 0..prefixes {
            let mut masses = vec![0.0; m_i];
            for (a, mass) in masses.iter_mut().enumerate() {
                let start = (p * m_i + a) * child_tail;
                *mass = pmf[start..start + child_tail].iter().sum();
            }
            let total: f64 = masses.iter().sum();
            if total > 0.0 {
                for (a, mass) in masses.iter().enumerate() {
                    table[p * m_i + a] = mass / total;
                }
            }
        }
        conditionals.push(table);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut state = vec![0usize; n];
        let mut prefix = 0usize;
        for (i, table) in conditionals.iter().enumerate() {
            let m_i = model.coordinate(i).size();
            let row = &table[prefix * m_i..(prefix + 1) * m_i];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = m_i - 1;
            for (a, w) in row.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = a;
                    break;
                }
            }
            state[i] = chosen;
            prefix = prefix * m_i + chosen;
        }
        out.push(state);
    }
    Ok(out)
}

/// Law families accepted by [`random_model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawFamily {
    Explicit,
    Markov,
    GibbsChain,
    Product,
}

/// Metric style for generated models.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricStyle {
    UnitTrivial,
    /// Scaled trivial metrics with alpha drawn uniformly from [0.5, 2].
    RandomAlpha,
}

/// Reproducible random models: alphabet sizes are uniform in `2..=max_size`,
/// and every generated marginal, kernel row, or conditional keeps its entries
/// well above zero (raw weights are uniform in [0.1, 1] before
/// normalization), so conditioning events stay non-degenerate.
pub fn random_model(
    seed: u64,
    n: usize,
    max_size: usize,
    family: LawFamily,
    metrics: MetricStyle,
) -> Result<ProductModel> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let max_size = max_size.max(2);
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(2..=max_size)).collect();
    let coords: Vec<CoordinateSpace> = sizes
        .iter()
        .map(|&m| {
            let alpha = match metrics {
                MetricStyle::UnitTrivial => 1.0,
                MetricStyle::RandomAlpha => rng.random_range(0.5..=2.0),
            };
            CoordinateSpace::trivial(m, alpha)
        })
        .collect::<Result<_>>()?;
    let draw_simplex = |len: usize, rng: &mut ChaCha12Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(0.1..=1.0)).collect();
        let total: f64 = v.iter().sum();
        for x in v.iter_mut() {
            *x /= total;
        }
        // Exact renormalization of the rounding tail onto the last entry.
        let s: f64 = v.iter().sum();
        let last = v.len() - 1;
        v[last] += 1.0 - s;
        v
    };
    let law = match family {
        LawFamily::Explicit => {
            let total: usize = sizes.iter().product();
            JointLaw::Explicit(draw_simplex(total, &mut rng))
        }
        LawFamily::Product => {
            let marginals = sizes.iter().map(|&m| draw_simplex(m, &mut rng)).collect();
            JointLaw::Product(marginals)
        }
        LawFamily::Markov => {
            if n == 1 {
                JointLaw::Markov { initial: draw_simplex(sizes[0], &mut rng), kernels: vec![] }
            } else {
                let initial = draw_simplex(sizes[0], &mut rng);
                let kernels = (0..n - 1)
                    .map(|i| {
                        let rows: Vec<Vec<f64>> =
                            (0..sizes[i]).map(|_| draw_simplex(sizes[i + 1], &mut rng)).collect();
                        Matrix::from_rows(&rows)
                    })
                    .collect::<Result<_>>()?;
                JointLaw::Markov { initial, kernels }
            }
        }
        LawFamily::GibbsChain => {
            if n == 1 {
                // A one-coordinate chain degenerates to a bare marginal.
                JointLaw::Explicit(draw_simplex(sizes[0], &mut rng))
            } else {
                let potentials = (0..n - 1)
                    .map(|i| {
                        let data: Vec<f64> = (0..sizes[i] * sizes[i + 1])
                            .map(|_| rng.random_range(0.2..=5.0))
                            .collect();
                        Matrix::from_vec(sizes[i], sizes[i + 1], data)
                    })
                    .collect::<Result<_>>()?;
                JointLaw::GibbsChain { potentials }
            }
        }
    };
    ProductModel::new(coords, law)
}

/// A random function on the boundary of the Lipschitz ball: a uniform table
/// rescaled so its largest local oscillation is exactly 1 (constant tables
/// come back unscaled).
pub fn random_lipschitz_function(model: &ProductModel, seed: u64) -> Result<FunctionTable> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..model.state_count())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let f = FunctionTable::new(values)?;
    let osc = oscillation_vector(&f, model)?;
    let scale = osc.max();
    if scale == 0.0 {
        return Ok(f);
    }
    FunctionTable::new(f.values().iter().map(|v| v / scale).collect())
}

/// Per-method outcome on one harness instance.
#[derive(Clone, Debug, Serialize)]
pub struct MethodSoundness {
    pub method: String,
    pub applicable: bool,
    /// `max_t (exact - bound)`; at most 0 on a passing run.
    pub max_violation: f64,
    /// `bound - exact` per grid point (empty when inapplicable).
    pub margin_profile: Vec<f64>,
}

/// Soundness record for one random instance.
#[derive(Clone, Debug, Serialize)]
pub struct SoundnessReport {
    pub model_digest: String,
    pub instance_seed: u64,
    pub family: String,
    pub dimension: usize,
    pub t_grid: Vec<f64>,
    pub exact_tails: Vec<f64>,
    pub per_method: Vec<MethodSoundness>,
    pub seed: u64,
}

/// The counterexample carried by a soundness violation.
#[derive(Debug)]
pub struct SoundnessCounterexample {
    pub instance_seed: u64,
    pub model: ProductModel,
    pub f: FunctionTable,
    pub method: MethodTag,
    pub t: f64,
    pub bound: f64,
    pub exact: f64,
}

impl std::fmt::Display for SoundnessCounterexample {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            out,
            "method {} at t = {}: bound {} < exact {} (instance seed {}, digest {})",
            self.method.name(),
            self.t,
            self.bound,
            self.exact,
            self.instance_seed,
            self.model.digest()
        )
    }
}

/// Test hook for the fault-injection contract: corrupts constructed bounds so
/// the harness must catch them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultInjection {
    /// Halves every Gamma entry, which understates the martingale bounds.
    HalveGamma,
}

/// Harness configuration. Instance seeds derive from `seed` by a splitmix
/// stream, so runs are reproducible and instances are independent.
#[derive(Clone, Debug)]
pub struct SoundnessConfig {
    pub seed: u64,
    pub instances: usize,
    pub max_dimension: usize,
    pub max_size: usize,
    pub fault: Option<FaultInjection>,
}

impl SoundnessConfig {
    pub fn new(seed: u64, instances: usize) -> Self {
        SoundnessConfig { seed, instances, max_dimension: 5, max_size: 4, fault: None }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const SOUNDNESS_SLACK: f64 = 1e-12;

/// Runs the soundness harness: on every random instance, every applicable
/// bound must dominate the exact enumerated tail at every grid point. Stops
/// at the first violation with the full counterexample.
pub fn soundness_suite(config: &SoundnessConfig) -> Result<Vec<SoundnessReport>> {
    let mut stream = config.seed;
    let mut reports = Vec::with_capacity(config.instances);
    for _ in 0..config.instances {
        let instance_seed = splitmix64(&mut stream);
        reports.push(run_instance(config, instance_seed)?);
    }
    Ok(reports)
}

fn run_instance(config: &SoundnessConfig, instance_seed: u64) -> Result<SoundnessReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(instance_seed);
    let n = rng.random_range(1..=config.max_dimension.max(1));
    let family = match rng.random_range(0..4u32) {
        0 => LawFamily::Explicit,
        1 => LawFamily::Markov,
        2 => LawFamily::GibbsChain,
        _ => LawFamily::Product,
    };
    let model_seed = rng.random::<u64>();
    let f_seed = rng.random::<u64>();
    let model = random_model(model_seed, n, config.max_size, family, MetricStyle::UnitTrivial)?;
    let f = random_lipschitz_function(&model, f_seed)?;
    let delta = oscillation_vector(&f, &model)?;

    // Grid 0.25, 0.5, ... up to n * max alpha, truncated at the range
    // diameter of f (beyond it the tail is exactly zero).
    let max_alpha = model
        .coordinates()
        .iter()
        .map(|c| c.diameter())
        .fold(0.0f64, f64::max);
    let limit = n as f64 * max_alpha;
    let range = {
        let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let mut t_grid = Vec::new();
    let mut t = 0.25;
    while t <= limit + 1e-12 {
        if t <= range {
            t_grid.push(t);
        }
        t += 0.25;
    }

    let mut exact_tails = Vec::with_capacity(t_grid.len());
    let mut exact_upper = Vec::with_capacity(t_grid.len());
    for &t in &t_grid {
        exact_tails.push(exact_tail(&model, &f, t)?);
        exact_upper.push(exact_upper_tail(&model, &f, t)?);
    }

    let inject = |mut g: GammaMatrix| -> GammaMatrix {
        if let Some(FaultInjection::HalveGamma) = config.fault {
            g.entries = g.entries.scale(0.5);
        }
        g
    };

    let mut per_method = Vec::new();
    let check = |method: MethodTag,
                     values: Option<Vec<f64>>,
                     exact: &[f64]|
     -> Result<MethodSoundness> {
        match values {
            None => Ok(MethodSoundness {
                method: method.name().to_string(),
                applicable: false,
                max_violation: 0.0,
                margin_profile: Vec::new(),
            }),
            Some(values) => {
                let mut max_violation = f64::NEG_INFINITY;
                let mut margins = Vec::with_capacity(values.len());
                for (idx, (&bound, &tail)) in values.iter().zip(exact).enumerate() {
                    let violation = tail - bound;
                    max_violation = max_violation.max(violation);
                    margins.push(bound - tail);
                    if violation > SOUNDNESS_SLACK {
                        return Err(Error::SoundnessViolation(Box::new(SoundnessCounterexample {
                            instance_seed,
                            model: model.clone(),
                            f: f.clone(),
                            method,
                            t: t_grid[idx],
                            bound,
                            exact: tail,
                        })));
                    }
                }
                Ok(MethodSoundness {
                    method: method.name().to_string(),
                    applicable: true,
                    max_violation: if margins.is_empty() { 0.0 } else { max_violation },
                    margin_profile: margins,
                })
            }
        }
    };

    // Martingale bounds from each Gamma construction.
    let gold = inject(gamma_goldstein(&model)?);
    let gold_bound = martingale_tail(&gold, delta.deltas(), &t_grid)?;
    per_method.push(check(MethodTag::Goldstein, Some(gold_bound.values.clone()), &exact_tails)?);

    let chaz = inject(gamma_chazottes(&model)?);
    let chaz_bound = martingale_tail(&chaz, delta.deltas(), &t_grid)?;
    per_method.push(check(MethodTag::Chazottes, Some(chaz_bound.values), &exact_tails)?);

    let kulske = gamma_kulske(&model)?;
    let kulske_values = if kulske.valid {
        Some(martingale_tail(&inject(kulske), delta.deltas(), &t_grid)?.values)
    } else {
        None
    };
    per_method.push(check(MethodTag::Kulske, kulske_values, &exact_tails)?);

    let markov_values = match markov_chain_view(&model) {
        Ok(chain) => {
            let g = inject(gamma_markov_theta(&chain, model.coordinates())?);
            Some(martingale_tail(&g, delta.deltas(), &t_grid)?.values)
        }
        Err(Error::WrongRepresentation { .. }) => None,
        Err(e) => return Err(e),
    };
    per_method.push(check(MethodTag::MarkovTheta, markov_values, &exact_tails)?);

    // Azuma through the exact martingale decomposition widths.
    let widths = martingale_widths(&model, &f)?;
    let azuma_values: Vec<f64> = t_grid.iter().map(|&t| azuma_tail(&widths, t)).collect();
    per_method.push(check(MethodTag::Azuma, Some(azuma_values), &exact_tails)?);

    // One-sided coupling-norm bound: rescale f to satisfy the weight
    // constraint, so the bound applies at t / ||delta||_2.
    let delta_l2 = delta.l2_norm();
    let samson_values = if delta_l2 > 0.0 {
        let alpha: Vec<f64> = delta.deltas().iter().map(|d| d / delta_l2).collect();
        let scaled_grid: Vec<f64> = t_grid.iter().map(|t| t / delta_l2).collect();
        let bound = samson_tail(&gold, &alpha, &scaled_grid)?;
        if bound.preconditions_ok {
            Some(bound.values)
        } else {
            None
        }
    } else {
        None
    };
    per_method.push(check(MethodTag::Samson, samson_values, &exact_upper)?);

    // Exchangeable-pairs bound under the metric weights.
    let interdependence = interdependence_matrix(&model)?;
    let alphas: Vec<f64> = model.coordinates().iter().map(|c| c.diameter()).collect();
    let chatterjee = chatterjee_tail(&interdependence, &alphas, &t_grid);
    let chatterjee_values =
        if chatterjee.preconditions_ok { Some(chatterjee.values) } else { None };
    per_method.push(check(MethodTag::Chatterjee, chatterjee_values, &exact_tails)?);

    // Tensorized transportation constant from the (possibly injected)
    // maximal-coupling rows: 1-Lipschitz functions are c-subgaussian, so the
    // Chernoff tail applies.
    let c_const = tensorized_tc_constant(&gold, model.coordinates(), None)?;
    let tc_values: Vec<f64> = t_grid
        .iter()
        .map(|&t| (2.0 * (-t * t / (2.0 * c_const)).exp()).min(2.0))
        .collect();
    per_method.push(check(MethodTag::TensorizedTc, Some(tc_values), &exact_tails)?);

    Ok(SoundnessReport {
        model_digest: model.digest(),
        instance_seed,
        family: model.law().family_name().to_string(),
        dimension: n,
        t_grid,
        exact_tails,
        per_method,
        seed: config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn exact_tail_examples() {
        let p1 = fixtures::p1();
        let f = fixtures::hamming_weight(&p1);
        assert!((exact_tail(&p1, &f, 1.5).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(exact_tail(&p1, &f, 0.0).unwrap(), 1.0);
        let constant = FunctionTable::new(vec![4.2; 8]).unwrap();
        assert_eq!(exact_tail(&p1, &constant, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn gibbs_kernel_invariance() {
        for model in [fixtures::p1(), fixtures::m1()] {
            let gap = gibbs_invariance_gap(&model).unwrap();
            assert!(gap <= 1e-12, "invariance gap {gap}");
        }
    }

    #[test]
    fn gibbs_kernel_on_point_mass_is_identity_on_support() {
        let mut pmf = vec![0.0; 8];
        pmf[3] = 1.0;
        let model = fixtures::p1().with_explicit_law(pmf).unwrap();
        let kernel = gibbs_sampler_kernel(&model).unwrap();
        assert!((kernel[(3, 3)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mc_sample_is_deterministic_and_consistent() {
        let p1 = fixtures::p1();
        let a = mc_sample(&p1, 200, 1).unwrap();
        let b = mc_sample(&p1, 200, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(mc_sample(&p1, 0, 9).unwrap().len(), 0);

        let big = mc_sample(&p1, 100_000, 1).unwrap();
        for coord in 0..3 {
            let mean =
                big.iter().map(|s| s[coord] as f64).sum::<f64>() / big.len() as f64;
            assert!((mean - 0.5).abs() < 0.01, "coordinate {coord} mean {mean}");
        }
    }

    #[test]
    fn random_models_are_reproducible() {
        for family in [LawFamily::Explicit, LawFamily::Markov, LawFamily::GibbsChain, LawFamily::Product] {
            let a = random_model(1, 3, 3, family, MetricStyle::UnitTrivial).unwrap();
            let b = random_model(1, 3, 3, family, MetricStyle::UnitTrivial).unwrap();
            assert_eq!(a.digest(), b.digest(), "{family:?}");
            let pmf = a.pmf().unwrap();
            let sum: f64 = pmf.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_potentials_stay_in_range() {
        let m = random_model(5, 4, 4, LawFamily::GibbsChain, MetricStyle::UnitTrivial).unwrap();
        match m.law() {
            JointLaw::GibbsChain { potentials } => {
                for p in potentials {
                    for v in p.data() {
                        assert!(*v >= 0.2 && *v <= 5.0);
                    }
                }
            }
            other => panic!("expected gibbs chain, got {}", other.family_name()),
        }
    }

    #[test]
    fn random_lipschitz_functions_sit_on_the_ball_boundary() {
        let model = random_model(11, 3, 3, LawFamily::Explicit, MetricStyle::UnitTrivial).unwrap();
        let f = random_lipschitz_function(&model, 4).unwrap();
        let osc = oscillation_vector(&f, &model).unwrap();
        assert!((osc.max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_soundness_run_passes() {
        let config = SoundnessConfig::new(7, 8);
        let reports = soundness_suite(&config).unwrap();
        assert_eq!(reports.len(), 8);
        for r in &reports {
            for m in &r.per_method {
                assert!(m.max_violation <= 0.0 || !m.applicable || m.margin_profile.is_empty());
            }
        }
    }

    #[test]
    fn fault_injection_is_caught() {
        let config = SoundnessConfig {
            fault: Some(FaultInjection::HalveGamma),
            ..SoundnessConfig::new(42, 50)
        };
        match soundness_suite(&config) {
            Err(Error::SoundnessViolation(cx)) => {
                assert!(cx.bound < cx.exact);
            }
            other => panic!("expected a soundness violation, got {other:?}"),
        }
    }
}
