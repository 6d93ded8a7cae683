#![no_main]

use libfuzzer_sys::fuzz_target;
use rhythmc_core::classify::ClassifiedGrammar;
use rhythmc_core::entropy::{eval_fixed_point, EvalParams};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(g) = ClassifiedGrammar::from_json(text) else {
        return;
    };
    let params = EvalParams {
        m_max: 50,
        ..EvalParams::default()
    };
    let _ = eval_fixed_point(&g, 0.5, &params);
});
