//! Command drivers behind the `depconc` binary. Each driver returns the
//! rendered report and a typed failure that maps onto the documented exit
//! codes: 2 for unreadable or invalid inputs, 3 when the single requested
//! method is inapplicable, 4 for soundness violations.

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::bounds::{
    chatterjee_tail, martingale_tail, mcdiarmid_tail, samson_tail, tensorized_tc_constant,
    MethodTag,
};
use crate::cli::document::{
    document_from_model, function_from_document, model_from_document, parse_function_document,
    parse_model_document,
};
use crate::cli::report::{AnalyzeReport, MethodReport, ValidateReport, ViolationRecord};
use crate::error::Error;
use crate::gamma::{
    block_oscillation_vector, gamma_blocks, gamma_chazottes, gamma_goldstein, gamma_kulske,
    gamma_markov_theta, markov_chain_view,
};
use crate::mixing::interdependence_matrix;
use crate::model::{lipschitz_seminorm, oscillation_vector, FunctionTable, JointLaw, ProductModel};
use crate::validate::{
    exact_tail, exact_upper_tail, mc_sample, soundness_suite, FaultInjection, SoundnessConfig,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the state-space cap.
pub const STATE_CAP_ENV: &str = "DEPCONC_STATE_CAP";

const SOUNDNESS_SLACK: f64 = 1e-12;

/// Typed command failure carrying the documented exit code.
#[derive(Debug)]
pub enum CliFailure {
    /// Exit 2: unreadable files, syntax errors, invalid documents.
    Parse(String),
    /// Exit 3: a single requested method is inapplicable to the model.
    Inapplicable(String),
    /// Exit 4: an applicable bound was violated by the exact tail.
    Soundness(String),
    /// Exit 1: internal failure.
    Internal(String),
}

impl CliFailure {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliFailure::Parse(_) => 2,
            CliFailure::Inapplicable(_) => 3,
            CliFailure::Soundness(_) => 4,
            CliFailure::Internal(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliFailure::Parse(m)
            | CliFailure::Inapplicable(m)
            | CliFailure::Soundness(m)
            | CliFailure::Internal(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliFailure>;

fn internal(e: Error) -> CliFailure {
    CliFailure::Internal(e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(CliFailure::Parse(format!("--format: expected json or csv, got {other}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub model_path: PathBuf,
    pub function_path: PathBuf,
    pub methods: Option<Vec<String>>,
    pub t_spec: String,
    pub format: OutputFormat,
    pub seed: u64,
    pub blocks: Option<String>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    pub common: AnalyzeOptions,
    pub mode: String,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    pub seed: u64,
    pub instances: usize,
    pub inject_fault: Option<String>,
    /// When set, the per-instance soundness reports are written here as JSON.
    pub out: Option<PathBuf>,
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliFailure::Parse(format!("{}: {e}", path.display())))
}

fn state_cap_from_env() -> CliResult<Option<usize>> {
    match std::env::var(STATE_CAP_ENV) {
        Ok(text) => text
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliFailure::Parse(format!("{STATE_CAP_ENV}: not a valid state count: {text}"))),
        Err(_) => Ok(None),
    }
}

fn load_model(path: &Path) -> CliResult<ProductModel> {
    let text = read_input(path)?;
    let doc = parse_model_document(&text).map_err(|e| CliFailure::Parse(e.to_string()))?;
    let mut model =
        model_from_document(&doc).map_err(|e| CliFailure::Parse(e.to_string()))?;
    if let Some(cap) = state_cap_from_env()? {
        model = model.with_state_cap(cap);
    }
    // Materialize now so cap violations surface as input errors.
    model.pmf().map_err(|e| CliFailure::Parse(e.to_string()))?;
    Ok(model)
}

fn load_function(path: &Path, model: &ProductModel) -> CliResult<FunctionTable> {
    let text = read_input(path)?;
    let doc = parse_function_document(&text).map_err(|e| CliFailure::Parse(e.to_string()))?;
    function_from_document(&doc, model).map_err(|e| CliFailure::Parse(e.to_string()))
}

// "auto" gives 11 evenly spaced points from 0 to the exact range radius of
// f; otherwise a comma-separated list of nonnegative reals.
fn parse_t_grid(spec: &str, model: &ProductModel, f: &FunctionTable) -> CliResult<Vec<f64>> {
    if spec == "auto" {
        let pmf = model.pmf().map_err(internal)?;
        let mean: f64 = pmf.iter().zip(f.values()).map(|(m, v)| m * v).sum();
        let radius = f
            .values()
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0f64, f64::max);
        return Ok((0..11).map(|k| radius * k as f64 / 10.0).collect());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let value: f64 = part
            .trim()
            .parse()
            .map_err(|_| CliFailure::Parse(format!("--t: not a number: {part}")))?;
        if !value.is_finite() || value < 0.0 {
            return Err(CliFailure::Parse(format!("--t: grid points must be nonnegative, got {part}")));
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err(CliFailure::Parse("--t: empty grid".into()));
    }
    Ok(out)
}

/// Parses a 1-based contiguous block specification, e.g. "1-2,3-5" or
/// "1,2-3", against a model of dimension `n`.
pub fn parse_blocks_spec(spec: &str, n: usize) -> CliResult<Vec<Range<usize>>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a, b),
            None => (part, part),
        };
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| CliFailure::Parse(format!("--blocks: bad index in {part}")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| CliFailure::Parse(format!("--blocks: bad index in {part}")))?;
        if lo == 0 || hi < lo || hi > n {
            return Err(CliFailure::Parse(format!(
                "--blocks: range {part} is not within 1..={n}"
            )));
        }
        out.push(lo - 1..hi);
    }
    Ok(out)
}

const DEFAULT_METHODS: [MethodTag; 8] = [
    MethodTag::Goldstein,
    MethodTag::Chazottes,
    MethodTag::Kulske,
    MethodTag::MarkovTheta,
    MethodTag::Mcdiarmid,
    MethodTag::Samson,
    MethodTag::Chatterjee,
    MethodTag::TensorizedTc,
];

fn parse_methods(list: &Option<Vec<String>>, blocks: bool) -> CliResult<Vec<MethodTag>> {
    match list {
        None => {
            let mut methods = DEFAULT_METHODS.to_vec();
            if blocks {
                methods.push(MethodTag::Blocks);
            }
            Ok(methods)
        }
        Some(names) => {
            let mut out = Vec::new();
            for name in names {
                let tag = MethodTag::parse(name).ok_or_else(|| {
                    CliFailure::Parse(format!("--methods: unknown method {name}"))
                })?;
                if tag == MethodTag::Azuma {
                    return Err(CliFailure::Parse(
                        "--methods: azuma is only evaluated inside selftest".into(),
                    ));
                }
                out.push(tag);
            }
            if out.is_empty() {
                return Err(CliFailure::Parse("--methods: empty list".into()));
            }
            Ok(out)
        }
    }
}

fn inapplicable(method: MethodTag, note: &str) -> MethodReport {
    MethodReport {
        method: method.name().to_string(),
        applicable: false,
        note: Some(note.to_string()),
        constants: BTreeMap::new(),
        gamma: None,
        values: Vec::new(),
    }
}

fn all_unit_trivial(model: &ProductModel) -> bool {
    model
        .coordinates()
        .iter()
        .all(|c| matches!(c.scaled_trivial_alpha(), Some(alpha) if (alpha - 1.0).abs() <= 1e-12))
}

fn all_scaled_trivial(model: &ProductModel) -> bool {
    model.coordinates().iter().all(|c| c.scaled_trivial_alpha().is_some())
}

fn evaluate_method(
    method: MethodTag,
    model: &ProductModel,
    f: &FunctionTable,
    delta: &[f64],
    t_grid: &[f64],
    blocks: &Option<Vec<Range<usize>>>,
) -> CliResult<MethodReport> {
    let gamma_report = |gamma: crate::gamma::GammaMatrix| -> CliResult<MethodReport> {
        if !gamma.valid {
            return Ok(inapplicable(method, &gamma.notes.join("; ")));
        }
        let bound = martingale_tail(&gamma, delta, t_grid).map_err(internal)?;
        let mut constants = bound.constants.clone();
        constants.insert("skipped_pairs".to_string(), gamma.skipped_pairs as f64);
        Ok(MethodReport {
            method: method.name().to_string(),
            applicable: true,
            note: if gamma.notes.is_empty() { None } else { Some(gamma.notes.join("; ")) },
            constants,
            gamma: Some(gamma.entries.to_nested()),
            values: bound.values,
        })
    };
    match method {
        MethodTag::Goldstein => gamma_report(gamma_goldstein(model).map_err(internal)?),
        MethodTag::Chazottes => gamma_report(gamma_chazottes(model).map_err(internal)?),
        MethodTag::Kulske => gamma_report(gamma_kulske(model).map_err(internal)?),
        MethodTag::MarkovTheta => match markov_chain_view(model) {
            Ok(chain) => {
                gamma_report(gamma_markov_theta(&chain, model.coordinates()).map_err(internal)?)
            }
            Err(Error::WrongRepresentation { .. }) => {
                Ok(inapplicable(method, "law is not in the markov representation"))
            }
            Err(e) => Err(internal(e)),
        },
        MethodTag::Blocks => match blocks {
            None => Ok(inapplicable(method, "no --blocks partition given")),
            Some(partition) => {
                let gamma = gamma_blocks(model, partition).map_err(|e| match e {
                    Error::BadPartition(m) => CliFailure::Parse(format!("--blocks: {m}")),
                    other => internal(other),
                })?;
                let block_delta =
                    block_oscillation_vector(f, model, partition).map_err(internal)?;
                let bound = martingale_tail(&gamma, &block_delta, t_grid).map_err(internal)?;
                let mut constants = bound.constants.clone();
                constants.insert("blocks".to_string(), partition.len() as f64);
                Ok(MethodReport {
                    method: method.name().to_string(),
                    applicable: true,
                    note: None,
                    constants,
                    gamma: Some(gamma.entries.to_nested()),
                    values: bound.values,
                })
            }
        },
        MethodTag::Mcdiarmid => {
            if !matches!(model.law(), JointLaw::Product(_)) {
                return Ok(inapplicable(method, "bounded-difference bound needs a product law"));
            }
            let alphas: Vec<f64> =
                model.coordinates().iter().map(|c| c.diameter()).collect();
            let bound = mcdiarmid_tail(&alphas, delta, t_grid).map_err(internal)?;
            Ok(MethodReport {
                method: method.name().to_string(),
                applicable: true,
                note: None,
                constants: bound.constants,
                gamma: None,
                values: bound.values,
            })
        }
        MethodTag::Samson => {
            if !all_unit_trivial(model) {
                return Ok(inapplicable(method, "needs unit trivial metrics"));
            }
            let norm: f64 = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(inapplicable(method, "constant function"));
            }
            let gamma = gamma_goldstein(model).map_err(internal)?;
            let alpha: Vec<f64> = delta.iter().map(|d| d / norm).collect();
            let scaled: Vec<f64> = t_grid.iter().map(|t| t / norm).collect();
            let bound = samson_tail(&gamma, &alpha, &scaled).map_err(internal)?;
            if !bound.preconditions_ok {
                return Ok(inapplicable(method, "coupling-norm preconditions failed"));
            }
            let mut constants = bound.constants.clone();
            constants.insert("delta_l2".to_string(), norm);
            Ok(MethodReport {
                method: method.name().to_string(),
                applicable: true,
                note: Some("one-sided upper-tail bound".to_string()),
                constants,
                gamma: None,
                values: bound.values,
            })
        }
        MethodTag::Chatterjee => {
            if !all_scaled_trivial(model) {
                return Ok(inapplicable(method, "needs scaled trivial metrics"));
            }
            let c = interdependence_matrix(model).map_err(internal)?;
            let alphas: Vec<f64> =
                model.coordinates().iter().map(|c| c.diameter()).collect();
            let bound = chatterjee_tail(&c, &alphas, t_grid);
            if !bound.preconditions_ok {
                return Ok(inapplicable(
                    method,
                    &format!(
                        "interdependence operator norm {:.6} is not below 1",
                        bound.constants["c_operator_norm"]
                    ),
                ));
            }
            Ok(MethodReport {
                method: method.name().to_string(),
                applicable: true,
                note: None,
                constants: bound.constants,
                gamma: None,
                values: bound.values,
            })
        }
        MethodTag::TensorizedTc => {
            if !all_scaled_trivial(model) {
                return Ok(inapplicable(method, "needs scaled trivial metrics (or explicit per-coordinate constants)"));
            }
            let gamma = gamma_goldstein(model).map_err(internal)?;
            let c = tensorized_tc_constant(&gamma, model.coordinates(), None).map_err(internal)?;
            let lip = lipschitz_seminorm(f, model).map_err(internal)?;
            let values: Vec<f64> = t_grid
                .iter()
                .map(|&t| {
                    if lip == 0.0 {
                        if t > 0.0 {
                            0.0
                        } else {
                            2.0
                        }
                    } else {
                        (2.0 * (-t * t / (2.0 * c * lip * lip)).exp()).min(2.0)
                    }
                })
                .collect();
            let mut constants = BTreeMap::new();
            constants.insert("c".to_string(), c);
            constants.insert("lipschitz".to_string(), lip);
            Ok(MethodReport {
                method: method.name().to_string(),
                applicable: true,
                note: None,
                constants,
                gamma: None,
                values,
            })
        }
        MethodTag::Azuma => Ok(inapplicable(method, "azuma is only evaluated inside selftest")),
    }
}

fn build_analysis(opts: &AnalyzeOptions) -> CliResult<(ProductModel, FunctionTable, AnalyzeReport)> {
    let model = load_model(&opts.model_path)?;
    let f = load_function(&opts.function_path, &model)?;
    let t_grid = parse_t_grid(&opts.t_spec, &model, &f)?;
    let blocks = match &opts.blocks {
        Some(spec) => Some(parse_blocks_spec(spec, model.dimension())?),
        None => None,
    };
    let methods = parse_methods(&opts.methods, blocks.is_some())?;
    let delta = oscillation_vector(&f, &model).map_err(internal)?;
    let lip = lipschitz_seminorm(&f, &model).map_err(internal)?;
    let mut results = Vec::with_capacity(methods.len());
    for &method in &methods {
        results.push(evaluate_method(method, &model, &f, delta.deltas(), &t_grid, &blocks)?);
    }
    if methods.len() == 1 && !results[0].applicable {
        return Err(CliFailure::Inapplicable(format!(
            "method {} is inapplicable: {}",
            results[0].method,
            results[0].note.as_deref().unwrap_or("precondition failed")
        )));
    }
    let report = AnalyzeReport {
        tool_version: TOOL_VERSION.to_string(),
        model_digest: model.digest(),
        seed: opts.seed,
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        dimension: model.dimension(),
        state_count: model.state_count(),
        delta: delta.deltas().to_vec(),
        lipschitz_seminorm: lip,
        t_grid,
        results,
    };
    Ok((model, f, report))
}

fn render_analyze(report: &AnalyzeReport, format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliFailure::Internal(e.to_string())),
        OutputFormat::Csv => Ok(crate::cli::report::analyze_to_csv(report)),
    }
}

fn render_validate(report: &ValidateReport, format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliFailure::Internal(e.to_string())),
        OutputFormat::Csv => Ok(crate::cli::report::validate_to_csv(report)),
    }
}

/// Writes output atomically (temp file plus rename) or to stdout.
pub fn write_output(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, content)
                .and_then(|_| fs::rename(&tmp, path))
                .map_err(|e| CliFailure::Internal(format!("{}: {e}", path.display())))
        }
    }
}

/// `depconc analyze`: per-method Gamma diagnostics and bound values.
pub fn run_analyze(opts: &AnalyzeOptions) -> CliResult<String> {
    let (_, _, report) = build_analysis(opts)?;
    render_analyze(&report, opts.format)
}

/// `depconc validate`: bounds alongside exact (or Monte Carlo) tails.
/// Returns the rendered report plus the soundness failure, if any, so the
/// caller can still write the report before exiting 4.
pub fn run_validate(opts: &ValidateOptions) -> CliResult<(String, Option<CliFailure>)> {
    let (model, f, analysis) = build_analysis(&opts.common)?;
    let mode = opts.mode.as_str();
    if mode != "exact" && mode != "mc" {
        return Err(CliFailure::Parse(format!("--mode: expected exact or mc, got {mode}")));
    }
    let t_grid = analysis.t_grid.clone();
    let (exact_tails, exact_upper_tails, standard_errors, samples) = if mode == "exact" {
        let mut tails = Vec::with_capacity(t_grid.len());
        let mut upper = Vec::with_capacity(t_grid.len());
        for &t in &t_grid {
            tails.push(exact_tail(&model, &f, t).map_err(internal)?);
            upper.push(exact_upper_tail(&model, &f, t).map_err(internal)?);
        }
        (tails, upper, None, None)
    } else {
        let count = opts.samples.unwrap_or(100_000);
        let draws = mc_sample(&model, count, opts.common.seed).map_err(internal)?;
        let pmf = model.pmf().map_err(internal)?;
        let mean: f64 = pmf.iter().zip(f.values()).map(|(m, v)| m * v).sum();
        let values: Vec<f64> = draws
            .iter()
            .map(|state| f.values()[model.encode_state(state)])
            .collect();
        let mut tails = Vec::with_capacity(t_grid.len());
        let mut upper = Vec::with_capacity(t_grid.len());
        let mut errs = Vec::with_capacity(t_grid.len());
        for &t in &t_grid {
            let hits = values.iter().filter(|v| (**v - mean).abs() >= t).count();
            let ups = values.iter().filter(|v| **v - mean >= t).count();
            let p = hits as f64 / count.max(1) as f64;
            tails.push(p);
            upper.push(ups as f64 / count.max(1) as f64);
            errs.push((p * (1.0 - p) / count.max(1) as f64).sqrt());
        }
        (tails, upper, Some(errs), Some(count))
    };

    // Violation scan (exact mode only): one-sided methods compare against
    // the one-sided tail.
    let mut violations = Vec::new();
    if mode == "exact" {
        for method in &analysis.results {
            if !method.applicable {
                continue;
            }
            let one_sided = method.method == MethodTag::Samson.name();
            for (idx, bound) in method.values.iter().enumerate() {
                let exact = if one_sided { exact_upper_tails[idx] } else { exact_tails[idx] };
                if exact > bound + SOUNDNESS_SLACK {
                    violations.push(ViolationRecord {
                        method: method.method.clone(),
                        t: t_grid[idx],
                        bound: *bound,
                        exact,
                    });
                }
            }
        }
    }
    let failure = if violations.is_empty() {
        None
    } else {
        Some(CliFailure::Soundness(format!(
            "{} bound violation(s); first: {} at t = {}",
            violations.len(),
            violations[0].method,
            violations[0].t
        )))
    };
    let report = ValidateReport {
        analysis,
        mode: mode.to_string(),
        exact_tails,
        exact_upper_tails,
        standard_errors,
        samples,
        violations,
    };
    Ok((render_validate(&report, opts.common.format)?, failure))
}

/// `depconc selftest`: the soundness harness plus quick invariant suites,
/// with a one-line-per-check summary.
pub fn run_selftest(opts: &SelftestOptions) -> CliResult<(String, i32)> {
    let fault = match opts.inject_fault.as_deref() {
        None => None,
        Some("halve-gamma") => Some(FaultInjection::HalveGamma),
        Some(other) => {
            return Err(CliFailure::Parse(format!("--inject-fault: unknown fault {other}")))
        }
    };
    let mut out = String::new();
    let mut all_pass = true;
    for (name, result) in crate::selftest::invariant_suite(opts.seed) {
        match result {
            Ok(()) => out.push_str(&format!("{name}: PASS\n")),
            Err(detail) => {
                all_pass = false;
                out.push_str(&format!("{name}: FAIL ({detail})\n"));
            }
        }
    }
    let config = SoundnessConfig { fault, ..SoundnessConfig::new(opts.seed, opts.instances) };
    match soundness_suite(&config) {
        Ok(reports) => {
            out.push_str(&format!(
                "soundness_suite: PASS ({} instances, zero violations)\n",
                reports.len()
            ));
            if let Some(path) = &opts.out {
                let json = serde_json::to_string_pretty(&reports)
                    .map_err(|e| CliFailure::Internal(e.to_string()))?;
                write_output(&Some(path.clone()), &format!("{json}\n"))?;
            }
        }
        Err(Error::SoundnessViolation(cx)) => {
            all_pass = false;
            out.push_str(&format!("soundness_suite: FAIL ({cx})\n"));
            let doc = document_from_model(&cx.model);
            let witness = serde_json::json!({
                "method": cx.method.name(),
                "t": cx.t,
                "bound": cx.bound,
                "exact": cx.exact,
                "instance_seed": cx.instance_seed,
                "model": doc,
                "function": {"type": "table", "values": cx.f.values()},
            });
            out.push_str(&serde_json::to_string_pretty(&witness).map_err(|e| CliFailure::Internal(e.to_string()))?);
            out.push('\n');
        }
        Err(e) => return Err(internal(e)),
    }
    let code = if all_pass { 0 } else { 4 };
    Ok((out, code))
}
