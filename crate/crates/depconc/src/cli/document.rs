//! On-disk JSON schemas for models and functions, and their conversions to
//! the validated in-memory types. Parsing is strict: unknown fields are
//! rejected and every semantic failure names the offending field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{CoordinateSpace, FunctionTable, JointLaw, ProductModel};

/// Versioned model document.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: String,
    pub coordinates: Vec<CoordinateDocument>,
    pub law: LawDocument,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoordinateDocument {
    pub size: usize,
    pub metric: MetricDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum MetricDocument {
    #[serde(rename = "trivial")]
    Trivial { alpha: f64 },
    #[serde(rename = "explicit")]
    Explicit { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum LawDocument {
    #[serde(rename = "explicit")]
    Explicit { pmf: Vec<f64> },
    #[serde(rename = "markov")]
    Markov { initial: Vec<f64>, kernels: Vec<Vec<Vec<f64>>> },
    #[serde(rename = "gibbs_chain")]
    GibbsChain { potentials: Vec<Vec<Vec<f64>>> },
    #[serde(rename = "product")]
    Product { marginals: Vec<Vec<f64>> },
}

/// Function document: either a dense table in canonical order or a named
/// builtin.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FunctionDocument {
    #[serde(rename = "table")]
    Table { values: Vec<f64> },
    #[serde(rename = "builtin")]
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<BuiltinParams>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BuiltinParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<usize>>,
}

/// Parses a model document, reporting the JSON line and column on syntax
/// errors.
pub fn parse_model_document(text: &str) -> Result<ModelDocument> {
    serde_json::from_str(text)
        .map_err(|e| Error::InvalidLaw(format!("model document: {e}")))
}

/// Parses a function document, reporting the JSON line and column on syntax
/// errors.
pub fn parse_function_document(text: &str) -> Result<FunctionDocument> {
    serde_json::from_str(text)
        .map_err(|e| Error::InvalidFunction(format!("function document: {e}")))
}

/// Validates a parsed model document into a [`ProductModel`].
pub fn model_from_document(doc: &ModelDocument) -> Result<ProductModel> {
    if doc.version != "1" {
        return Err(Error::InvalidLaw(format!(
            "version: expected \"1\", got \"{}\"",
            doc.version
        )));
    }
    if doc.coordinates.is_empty() {
        return Err(Error::InvalidLaw("coordinates: must be nonempty".into()));
    }
    let mut coords = Vec::with_capacity(doc.coordinates.len());
    for (i, c) in doc.coordinates.iter().enumerate() {
        let space = match &c.metric {
            MetricDocument::Trivial { alpha } => CoordinateSpace::trivial(c.size, *alpha)
                .map_err(|e| Error::InvalidMetric(format!("coordinates[{i}].metric: {e}")))?,
            MetricDocument::Explicit { matrix } => {
                let m = Matrix::from_rows(matrix).map_err(|_| {
                    Error::InvalidMetric(format!("coordinates[{i}].metric.matrix: ragged rows"))
                })?;
                CoordinateSpace::new(c.size, m, c.labels.clone())
                    .map_err(|e| Error::InvalidMetric(format!("coordinates[{i}].metric: {e}")))?
            }
        };
        if let Some(labels) = &c.labels {
            if labels.len() != c.size {
                return Err(Error::InvalidLaw(format!(
                    "coordinates[{i}].labels: {} labels for {} states",
                    labels.len(),
                    c.size
                )));
            }
        }
        coords.push(space);
    }
    let law = match &doc.law {
        LawDocument::Explicit { pmf } => JointLaw::Explicit(pmf.clone()),
        LawDocument::Markov { initial, kernels } => {
            let kernels = kernels
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    Matrix::from_rows(k).map_err(|_| {
                        Error::InvalidLaw(format!("law.kernels[{i}]: ragged rows"))
                    })
                })
                .collect::<Result<Vec<Matrix>>>()?;
            JointLaw::Markov { initial: initial.clone(), kernels }
        }
        LawDocument::GibbsChain { potentials } => {
            let potentials = potentials
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    Matrix::from_rows(p).map_err(|_| {
                        Error::InvalidLaw(format!("law.potentials[{i}]: ragged rows"))
                    })
                })
                .collect::<Result<Vec<Matrix>>>()?;
            JointLaw::GibbsChain { potentials }
        }
        LawDocument::Product { marginals } => JointLaw::Product(marginals.clone()),
    };
    ProductModel::new(coords, law).map_err(|e| Error::InvalidLaw(format!("law: {e}")))
}

/// Normalized document for a model: trivial metrics are recognized and
/// re-emitted in the compact form, laws keep their representation.
pub fn document_from_model(model: &ProductModel) -> ModelDocument {
    let coordinates = model
        .coordinates()
        .iter()
        .map(|c| CoordinateDocument {
            size: c.size(),
            metric: match c.scaled_trivial_alpha() {
                Some(alpha) => MetricDocument::Trivial { alpha },
                None => MetricDocument::Explicit { matrix: c.metric().to_nested() },
            },
            labels: c.labels().map(|l| l.to_vec()),
        })
        .collect();
    let law = match model.law() {
        JointLaw::Explicit(pmf) => LawDocument::Explicit { pmf: pmf.clone() },
        JointLaw::Markov { initial, kernels } => LawDocument::Markov {
            initial: initial.clone(),
            kernels: kernels.iter().map(Matrix::to_nested).collect(),
        },
        JointLaw::GibbsChain { potentials } => LawDocument::GibbsChain {
            potentials: potentials.iter().map(Matrix::to_nested).collect(),
        },
        JointLaw::Product(marginals) => LawDocument::Product { marginals: marginals.clone() },
    };
    ModelDocument { version: "1".to_string(), coordinates, law }
}

/// Resolves a function document against a model.
pub fn function_from_document(doc: &FunctionDocument, model: &ProductModel) -> Result<FunctionTable> {
    match doc {
        FunctionDocument::Table { values } => {
            if values.len() != model.state_count() {
                return Err(Error::InvalidFunction(format!(
                    "values: table has {} entries for {} states",
                    values.len(),
                    model.state_count()
                )));
            }
            FunctionTable::new(values.clone())
                .map_err(|e| Error::InvalidFunction(format!("values: {e}")))
        }
        FunctionDocument::Builtin { name, params } => match name.as_str() {
            "hamming_weight" => Ok(crate::fixtures::hamming_weight(model)),
            "coordinate_mean" => {
                let n = model.dimension() as f64;
                let values = (0..model.state_count())
                    .map(|idx| {
                        model.decode_state(idx).iter().map(|&x| x as f64).sum::<f64>() / n
                    })
                    .collect();
                FunctionTable::new(values)
            }
            "indicator" => {
                let state = params
                    .as_ref()
                    .and_then(|p| p.state.as_ref())
                    .ok_or_else(|| {
                        Error::InvalidFunction("params.state: required for indicator".into())
                    })?;
                if state.len() != model.dimension() {
                    return Err(Error::InvalidFunction(format!(
                        "params.state: {} coordinates for a {}-dimensional model",
                        state.len(),
                        model.dimension()
                    )));
                }
                for (i, (&x, c)) in state.iter().zip(model.coordinates()).enumerate() {
                    if x >= c.size() {
                        return Err(Error::InvalidFunction(format!(
                            "params.state[{i}]: value {x} outside alphabet of size {}",
                            c.size()
                        )));
                    }
                }
                let target = model.encode_state(state);
                let values = (0..model.state_count())
                    .map(|idx| if idx == target { 1.0 } else { 0.0 })
                    .collect();
                FunctionTable::new(values)
            }
            other => Err(Error::InvalidFunction(format!(
                "name: unknown builtin \"{other}\" (expected hamming_weight, coordinate_mean, or indicator)"
            ))),
        },
    }
}
