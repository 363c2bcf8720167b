//! Tail-bound evaluators and inequality diagnostics: the martingale bound
//! driven by a Gamma matrix, the bounded-difference and tensorized
//! transportation constants it specializes to, the coupling-norm and
//! exchangeable-pairs bounds, and randomized subgaussian / transportation /
//! entropy checks against exact enumeration.
//!
//! Evaluators return flag-carrying [`TailBound`] values instead of erroring
//! when a precondition fails, so a comparison table can show "n/a" rows.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::gamma::{GammaMatrix, GammaMethod};
use crate::linalg::{operator_norm, Matrix};
use crate::mixing::InterdependenceMatrix;
use crate::model::{CoordinateSpace, FunctionTable, JointLaw, ProductModel};
use crate::transport::{coordinate_w1, herbst_integral, kl, log_mgf};

/// Report tag for every bound and diagnostic the crate can evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MethodTag {
    Goldstein,
    Chazottes,
    Kulske,
    MarkovTheta,
    Blocks,
    Mcdiarmid,
    Samson,
    Chatterjee,
    TensorizedTc,
    Azuma,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Goldstein => "goldstein",
            MethodTag::Chazottes => "chazottes",
            MethodTag::Kulske => "kulske",
            MethodTag::MarkovTheta => "markov_theta",
            MethodTag::Blocks => "blocks",
            MethodTag::Mcdiarmid => "mcdiarmid",
            MethodTag::Samson => "samson",
            MethodTag::Chatterjee => "chatterjee",
            MethodTag::TensorizedTc => "tensorized_tc",
            MethodTag::Azuma => "azuma",
        }
    }

    pub fn parse(s: &str) -> Option<MethodTag> {
        Some(match s {
            "goldstein" => MethodTag::Goldstein,
            "chazottes" => MethodTag::Chazottes,
            "kulske" => MethodTag::Kulske,
            "markov_theta" => MethodTag::MarkovTheta,
            "blocks" => MethodTag::Blocks,
            "mcdiarmid" => MethodTag::Mcdiarmid,
            "samson" => MethodTag::Samson,
            "chatterjee" => MethodTag::Chatterjee,
            "tensorized_tc" => MethodTag::TensorizedTc,
            "azuma" => MethodTag::Azuma,
            _ => return None,
        })
    }

    fn from_gamma(method: GammaMethod) -> MethodTag {
        match method {
            GammaMethod::Kulske => MethodTag::Kulske,
            GammaMethod::Goldstein => MethodTag::Goldstein,
            GammaMethod::Chazottes => MethodTag::Chazottes,
            GammaMethod::MarkovTheta => MethodTag::MarkovTheta,
            GammaMethod::Block => MethodTag::Blocks,
        }
    }
}

/// Tail-bound values on a grid, plus the constants that produced them.
/// `values` is empty when `preconditions_ok` is false.
#[derive(Clone, Debug)]
pub struct TailBound {
    pub method: MethodTag,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub preconditions_ok: bool,
    pub constants: BTreeMap<String, f64>,
}

impl TailBound {
    fn inapplicable(method: MethodTag, t_grid: &[f64], constants: BTreeMap<String, f64>) -> Self {
        TailBound {
            method,
            t_grid: t_grid.to_vec(),
            values: Vec::new(),
            preconditions_ok: false,
            constants,
        }
    }
}

/// Two-sided bounded-difference tail value `2 exp(-2 t^2 / sum w_i^2)`.
/// Returns 0 (trivially the degenerate tail) when every width vanishes and
/// `t > 0`.
pub fn azuma_tail(widths: &[f64], t: f64) -> f64 {
    let denom: f64 = widths.iter().map(|w| w * w).sum();
    if denom == 0.0 {
        return if t > 0.0 { 0.0 } else { 2.0 };
    }
    (2.0 * (-2.0 * t * t / denom).exp()).min(2.0)
}

/// Exponential-moment form: `exp(lambda^2 sum w_i^2 / 8)`.
pub fn azuma_mgf(widths: &[f64], lambda: f64) -> f64 {
    let sum: f64 = widths.iter().map(|w| w * w).sum();
    (lambda * lambda * sum / 8.0).exp()
}

/// The martingale tail bound `2 exp(-2 t^2 / ||Gamma delta||^2)` on a grid.
/// A zero `||Gamma delta||` (constant function) flags the degenerate case and
/// returns 0 beyond `t = 0`.
pub fn martingale_tail(gamma: &GammaMatrix, delta: &[f64], t_grid: &[f64]) -> Result<TailBound> {
    if !gamma.valid {
        return Err(Error::InvalidGamma(format!(
            "{} construction is flagged invalid: {}",
            gamma.method.name(),
            gamma.notes.join("; ")
        )));
    }
    if gamma.dimension() != delta.len() {
        return Err(Error::DimensionMismatch(gamma.dimension(), delta.len()));
    }
    if delta.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::InvalidGamma("oscillation vector must be finite and nonnegative".into()));
    }
    let gd = gamma.entries.matvec(delta);
    let norm_sq: f64 = gd.iter().map(|v| v * v).sum();
    let mut constants = BTreeMap::new();
    constants.insert("gamma_delta_norm_sq".to_string(), norm_sq);
    if norm_sq == 0.0 {
        constants.insert("degenerate".to_string(), 1.0);
    }
    let values = t_grid
        .iter()
        .map(|&t| {
            if norm_sq == 0.0 {
                if t > 0.0 {
                    0.0
                } else {
                    2.0
                }
            } else {
                (2.0 * (-2.0 * t * t / norm_sq).exp()).min(2.0)
            }
        })
        .collect();
    Ok(TailBound {
        method: MethodTag::from_gamma(gamma.method),
        t_grid: t_grid.to_vec(),
        values,
        preconditions_ok: true,
        constants,
    })
}

/// Bounded-difference tail with per-coordinate widths `alpha_i delta_i`:
/// the diagonal-Gamma specialization of the martingale bound. Only valid as a
/// concentration bound for product laws; the caller gates applicability.
pub fn mcdiarmid_tail(alphas: &[f64], delta: &[f64], t_grid: &[f64]) -> Result<TailBound> {
    if alphas.len() != delta.len() {
        return Err(Error::DimensionMismatch(alphas.len(), delta.len()));
    }
    let denom: f64 = alphas.iter().zip(delta).map(|(a, d)| (a * d) * (a * d)).sum();
    let mut constants = BTreeMap::new();
    constants.insert("sum_sq_widths".to_string(), denom);
    let values = t_grid
        .iter()
        .map(|&t| {
            if denom == 0.0 {
                if t > 0.0 {
                    0.0
                } else {
                    2.0
                }
            } else {
                (2.0 * (-2.0 * t * t / denom).exp()).min(2.0)
            }
        })
        .collect();
    Ok(TailBound {
        method: MethodTag::Mcdiarmid,
        t_grid: t_grid.to_vec(),
        values,
        preconditions_ok: true,
        constants,
    })
}

/// Tensorized transportation constant `c = sum_i c_i (sum_j V_ij)^2`, with
/// `V` recovered from the Gamma rows and `c_i` defaulting to `alpha_i^2 / 4`
/// for scaled trivial metrics.
pub fn tensorized_tc_constant(
    gamma: &GammaMatrix,
    coords: &[CoordinateSpace],
    c_coord: Option<&[f64]>,
) -> Result<f64> {
    if !gamma.valid {
        return Err(Error::InvalidGamma(format!(
            "{} construction is flagged invalid",
            gamma.method.name()
        )));
    }
    let n = coords.len();
    if gamma.dimension() != n {
        return Err(Error::DimensionMismatch(gamma.dimension(), n));
    }
    let c_values: Vec<f64> = match c_coord {
        Some(cs) => {
            if cs.len() != n {
                return Err(Error::DimensionMismatch(cs.len(), n));
            }
            cs.to_vec()
        }
        None => {
            let mut cs = Vec::with_capacity(n);
            for coord in coords {
                match coord.scaled_trivial_alpha() {
                    Some(alpha) => cs.push(alpha * alpha / 4.0),
                    None => return Err(Error::MissingCoordinateConstants),
                }
            }
            cs
        }
    };
    let mut total = 0.0;
    for i in 0..n {
        let diam = coords[i].diameter();
        if diam == 0.0 {
            // A one-state coordinate never varies; its martingale increment
            // is identically zero and contributes nothing.
            continue;
        }
        let row_sum: f64 = gamma.entries.row(i).iter().sum::<f64>() / diam;
        total += c_values[i] * row_sum * row_sum;
    }
    Ok(total)
}

/// One-sided coupling-norm bound `exp(-t^2 / (2 ||Delta||^2))` with
/// `Delta_ij = sqrt(Gamma_ij)`, for functions satisfying the asymmetric
/// Lipschitz condition with constant weights `alpha`, `sum alpha_i^2 <= 1`.
/// Requires the maximal-coupling Gamma under unit trivial metrics; other
/// inputs are flagged inapplicable.
pub fn samson_tail(gamma: &GammaMatrix, alpha: &[f64], t_grid: &[f64]) -> Result<TailBound> {
    let alpha_sq: f64 = alpha.iter().map(|a| a * a).sum();
    if alpha_sq > 1.0 + 1e-12 {
        return Err(Error::WeightsTooLarge(alpha_sq));
    }
    let mut constants = BTreeMap::new();
    constants.insert("alpha_norm_sq".to_string(), alpha_sq);
    let unit_diagonal = (0..gamma.dimension()).all(|i| (gamma.entries[(i, i)] - 1.0).abs() <= 1e-12);
    if gamma.method != GammaMethod::Goldstein || !gamma.valid || !unit_diagonal {
        return Ok(TailBound::inapplicable(MethodTag::Samson, t_grid, constants));
    }
    let n = gamma.dimension();
    let mut delta_matrix = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            delta_matrix[(i, j)] = gamma.entries[(i, j)].max(0.0).sqrt();
        }
    }
    let norm = operator_norm(&delta_matrix, 1e-10, 200_000);
    constants.insert("delta_operator_norm".to_string(), norm);
    let values = t_grid
        .iter()
        .map(|&t| (-t * t / (2.0 * norm * norm)).exp().min(1.0))
        .collect();
    Ok(TailBound {
        method: MethodTag::Samson,
        t_grid: t_grid.to_vec(),
        values,
        preconditions_ok: true,
        constants,
    })
}

/// Exchangeable-pairs bound `2 exp(-(1 - ||C||_2) t^2 / sum alpha_i^2)` for
/// functions 1-Lipschitz in the weighted Hamming metric with weights `alpha`;
/// flagged inapplicable when the operator norm of `C` reaches 1.
pub fn chatterjee_tail(c: &InterdependenceMatrix, alpha: &[f64], t_grid: &[f64]) -> TailBound {
    let norm = operator_norm(&c.c, 1e-10, 200_000);
    let alpha_sq: f64 = alpha.iter().map(|a| a * a).sum();
    let mut constants = BTreeMap::new();
    constants.insert("c_operator_norm".to_string(), norm);
    constants.insert("alpha_norm_sq".to_string(), alpha_sq);
    if norm >= 1.0 || alpha_sq == 0.0 {
        return TailBound::inapplicable(MethodTag::Chatterjee, t_grid, constants);
    }
    let values = t_grid
        .iter()
        .map(|&t| (2.0 * (-(1.0 - norm) * t * t / alpha_sq).exp()).min(2.0))
        .collect();
    TailBound {
        method: MethodTag::Chatterjee,
        t_grid: t_grid.to_vec(),
        values,
        preconditions_ok: true,
        constants,
    }
}

/// Default grid for [`subgaussian_check`].
pub const SUBGAUSSIAN_GRID: [f64; 10] =
    [-4.0, -2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0, 4.0];

/// Checks `psi_f(lambda) <= c lambda^2 / 2` on a grid of lambdas with exact
/// log-MGF evaluation. Returns the pass flag and the worst slack
/// `max(psi - c lambda^2 / 2)`.
pub fn subgaussian_check(
    model: &ProductModel,
    f: &FunctionTable,
    c: f64,
    lambda_grid: Option<&[f64]>,
) -> Result<(bool, f64)> {
    if c < 0.0 {
        return Err(Error::InvalidGamma(format!("subgaussian constant {c} must be nonnegative")));
    }
    f.check_model(model)?;
    let mu = model.pmf()?;
    let grid = lambda_grid.unwrap_or(&SUBGAUSSIAN_GRID);
    let mut worst = f64::NEG_INFINITY;
    for &lam in grid {
        let psi = log_mgf(mu, f.values(), lam)?;
        worst = worst.max(psi - c * lam * lam / 2.0);
    }
    Ok((worst <= 1e-10, worst))
}

/// Randomized transportation-inequality diagnostic: draws Dirichlet-uniform
/// laws `nu` and returns the worst ratio `W(mu, nu) / sqrt(2 c D(nu || mu))`
/// over draws with positive divergence. A value at most 1 is consistent with
/// the inequality holding at constant `c`; this samples, it does not certify.
pub fn tc_check(
    mu: &[f64],
    space: &CoordinateSpace,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if c <= 0.0 {
        return Err(Error::InvalidGamma(format!("transportation constant {c} must be positive")));
    }
    if mu.len() != space.size() {
        return Err(Error::DimensionMismatch(mu.len(), space.size()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut nu: Vec<f64> = (0..mu.len())
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = nu.iter().sum();
        for v in nu.iter_mut() {
            *v /= total;
        }
        let div = kl(&nu, mu)?;
        if !(div > 0.0) || !div.is_finite() {
            continue;
        }
        let w = coordinate_w1(mu, &nu, space)?;
        worst = worst.max(w / (2.0 * c * div).sqrt());
    }
    Ok(worst)
}

/// Exact two sides of the entropy tensorization inequality for a product
/// base measure: `D(nu || mu)` on the left and
/// `sum_i E_nu D(nu_i(.|X^{T minus i}) || mu_i)` on the right.
pub fn entropy_tensorization_check(model: &ProductModel, nu: &[f64]) -> Result<(f64, f64)> {
    let marginals = match model.law() {
        JointLaw::Product(ms) => ms.clone(),
        _ => return Err(Error::WrongRepresentation { expected: "product" }),
    };
    let total = model.state_count();
    if nu.len() != total {
        return Err(Error::DimensionMismatch(nu.len(), total));
    }
    let mu = model.pmf()?;
    let lhs = kl(nu, mu)?;
    let grid = model.grid();
    let n = model.dimension();
    let mut rhs = 0.0;
    let mut cond = Vec::new();
    for i in 0..n {
        let m_i = model.coordinate(i).size();
        let stride = grid.stride(i);
        for base in 0..total {
            if grid.digit(base, i) != 0 {
                continue;
            }
            cond.clear();
            let mut mass = 0.0;
            for a in 0..m_i {
                let v = nu[base + a * stride];
                cond.push(v);
                mass += v;
            }
            if mass <= 0.0 {
                continue;
            }
            for v in cond.iter_mut() {
                *v /= mass;
            }
            rhs += mass * kl(&cond, &marginals[i])?;
        }
    }
    Ok((lhs, rhs))
}

/// Residual of the entropy representation of the log-MGF:
/// `|psi_f(lambda) - lambda int_0^lambda D(tilt(mu, f, t) || mu) / t^2 dt|`.
pub fn herbst_residual(model: &ProductModel, f: &FunctionTable, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::QuadratureFailure { achieved: f64::NAN });
    }
    f.check_model(model)?;
    let mu = model.pmf()?;
    let psi = log_mgf(mu, f.values(), lambda)?;
    let integral = herbst_integral(mu, f.values(), lambda)?;
    Ok((psi - integral).abs())
}
