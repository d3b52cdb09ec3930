#![no_main]

use libfuzzer_sys::fuzz_target;
use uavpc::harness::{read_records, records_to_string, summarize};

fuzz_target!(|data: &[u8]| {
    if let Ok(recs) = read_records(data) {
        let text = records_to_string(&recs).unwrap();
        assert_eq!(read_records(text.as_bytes()).unwrap(), recs);
        if !recs.is_empty() {
            summarize(&recs).unwrap();
        }
    }
});
