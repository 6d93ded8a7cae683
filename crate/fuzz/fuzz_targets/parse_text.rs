#![no_main]

use libfuzzer_sys::fuzz_target;
use rhythmc_core::score::{format_text, parse_text};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(seq) = parse_text(text) {
        let again = parse_text(&format_text(&seq)).expect("formatted text parses");
        assert_eq!(again, seq);
    }
});
