#![no_main]

use libfuzzer_sys::fuzz_target;
use rhythmc_core::bracketed::{interpret, parse, BracketedString, ROOT_STATE};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(s) = BracketedString::new(text) else { return };
    let run = interpret(&s, ROOT_STATE, 1.0, 30.0);
    assert_eq!(run.final_stack_depth, 0);
    let _ = parse(&s);
});
