//! File formats, reports, and command drivers for the `depconc` binary.

pub mod commands;
pub mod document;
pub mod report;

pub use commands::{
    parse_blocks_spec, run_analyze, run_selftest, run_validate, write_output, AnalyzeOptions,
    CliFailure, OutputFormat, SelftestOptions, ValidateOptions, STATE_CAP_ENV, TOOL_VERSION,
};
pub use document::{
    document_from_model, function_from_document, model_from_document, parse_function_document,
    parse_model_document, FunctionDocument, LawDocument, MetricDocument, ModelDocument,
};
