#![no_main]

use libfuzzer_sys::fuzz_target;

use depconc::cli::{document_from_model, model_from_document, parse_model_document};

// Full model pipeline on arbitrary bytes: parse, validate, materialize, and
// round-trip. Must never panic; valid documents must re-serialize to a fixed
// point.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_model_document(text) else { return };
    let Ok(model) = model_from_document(&doc) else { return };
    let model = model.with_state_cap(4096);
    if model.pmf().is_err() {
        return;
    }
    let normalized = document_from_model(&model);
    let reparsed = model_from_document(&normalized).expect("normalized document is valid");
    assert_eq!(model.digest(), reparsed.digest());
    assert_eq!(normalized, document_from_model(&reparsed));
});
