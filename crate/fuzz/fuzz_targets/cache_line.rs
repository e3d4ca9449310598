#![no_main]

use libfuzzer_sys::fuzz_target;
use rotcode::sweep::parse_cache_line;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entry) = parse_cache_line(text) {
        assert_eq!(entry.key.len(), 64);
    }
});
