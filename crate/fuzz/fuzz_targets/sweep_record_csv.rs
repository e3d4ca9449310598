#![no_main]

use libfuzzer_sys::fuzz_target;
use rotcode::sweep::{read_records, write_records};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let again = read_records(buf.as_slice()).unwrap();
        assert_eq!(again.len(), records.len());
    }
});
