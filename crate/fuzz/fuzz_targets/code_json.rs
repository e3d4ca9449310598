#![no_main]

use libfuzzer_sys::fuzz_target;
use rotcode::codefile::{code_from_json, code_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(code) = code_from_json(text) {
        let again = code_from_json(&code_to_json(&code).unwrap()).unwrap();
        assert_eq!(again, code);
    }
});
