#![no_main]

use knnavg::experiment::{read_records, write_records};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).expect("records serialize");
        let back = read_records(buf.as_slice()).expect("written records parse");
        assert_eq!(back.len(), records.len());
    }
});
