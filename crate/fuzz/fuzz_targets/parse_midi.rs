#![no_main]

use libfuzzer_sys::fuzz_target;
use rhythmc_core::midi::parse_midi;

fuzz_target!(|data: &[u8]| {
    if let Ok(seq) = parse_midi(data) {
        assert!(seq.is_on_grid());
    }
});
