//! Report documents emitted by the commands. JSON is the primary format; the
//! CSV export renders the same numbers through the same float writer, so the
//! two formats never disagree.

use std::collections::BTreeMap;

use serde::Serialize;

/// Per-method section of a report.
#[derive(Clone, Debug, Serialize)]
pub struct MethodReport {
    pub method: String,
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<Vec<f64>>>,
    /// Bound values per grid point; empty when inapplicable.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub tool_version: String,
    pub model_digest: String,
    pub seed: u64,
    pub methods: Vec<String>,
    pub dimension: usize,
    pub state_count: usize,
    pub delta: Vec<f64>,
    pub lipschitz_seminorm: f64,
    pub t_grid: Vec<f64>,
    pub results: Vec<MethodReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidateReport {
    #[serde(flatten)]
    pub analysis: AnalyzeReport,
    /// "exact" or "mc".
    pub mode: String,
    /// Two-sided tails (exact, or empirical estimates in mc mode).
    pub exact_tails: Vec<f64>,
    /// One-sided upper tails, compared against one-sided bounds.
    pub exact_upper_tails: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub violations: Vec<ViolationRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationRecord {
    pub method: String,
    pub t: f64,
    pub bound: f64,
    pub exact: f64,
}

// Renders a float exactly as serde_json would, so CSV and JSON numbers are
// byte-identical.
fn json_number(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "null".to_string())
}

fn csv_preamble(out: &mut String, report: &AnalyzeReport) {
    out.push_str(&format!("# tool_version={}\n", report.tool_version));
    out.push_str(&format!("# model_digest={}\n", report.model_digest));
    out.push_str(&format!("# seed={}\n", report.seed));
    out.push_str(&format!("# methods={}\n", report.methods.join(";")));
}

pub fn analyze_to_csv(report: &AnalyzeReport) -> String {
    let mut out = String::new();
    csv_preamble(&mut out, report);
    out.push_str("method,t,bound\n");
    for method in &report.results {
        if !method.applicable {
            continue;
        }
        for (t, v) in report.t_grid.iter().zip(&method.values) {
            out.push_str(&format!("{},{},{}\n", method.method, json_number(*t), json_number(*v)));
        }
    }
    out
}

pub fn validate_to_csv(report: &ValidateReport) -> String {
    let mut out = String::new();
    csv_preamble(&mut out, &report.analysis);
    out.push_str("method,t,bound,exact,exact_upper\n");
    for method in &report.analysis.results {
        if !method.applicable {
            continue;
        }
        for (idx, v) in method.values.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                method.method,
                json_number(report.analysis.t_grid[idx]),
                json_number(*v),
                json_number(report.exact_tails[idx]),
                json_number(report.exact_upper_tails[idx]),
            ));
        }
    }
    out
}
