#![no_main]

use libfuzzer_sys::fuzz_target;

use depconc::cli::parse_blocks_spec;

// The --blocks micro-parser: accepted specifications must be contiguous
// 1-based covers, everything else must come back as a typed error.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for n in [1usize, 3, 5] {
        if let Ok(blocks) = parse_blocks_spec(text, n) {
            for block in &blocks {
                assert!(block.start < block.end && block.end <= n);
            }
        }
    }
});
