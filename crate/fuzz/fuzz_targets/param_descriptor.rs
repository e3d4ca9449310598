#![no_main]

use libfuzzer_sys::fuzz_target;
use rotcode::codes::CodeParams;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(params) = CodeParams::parse_descriptor(text) {
        assert_eq!(CodeParams::parse_descriptor(&params.descriptor()).unwrap(), params);
    }
});
