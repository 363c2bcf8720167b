#![no_main]

use libfuzzer_sys::fuzz_target;

use depconc::cli::{function_from_document, parse_function_document};
use depconc::fixtures;
use depconc::model::oscillation_vector;

// Function documents resolved against the P1 fixture: parsing and resolution
// must never panic, and resolved tables must support the oscillation sweep.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_function_document(text) else { return };
    let model = fixtures::p1();
    let Ok(table) = function_from_document(&doc, &model) else { return };
    let osc = oscillation_vector(&table, &model).expect("resolved tables are well-formed");
    assert!(osc.deltas().iter().all(|d| d.is_finite()));
});
