#![no_main]

use causal_dep::io::{model_from_json, model_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = model_from_json(text) {
        let again = model_from_json(&model_to_json(&m, None)).expect("written models parse");
        assert_eq!(again.dag(), m.dag());
        assert_eq!(again.coefficients(), m.coefficients());
        assert_eq!(again.disturbances(), m.disturbances());
    }
});
