#![no_main]

use libfuzzer_sys::fuzz_target;

use clocrc::experiments::{parse_results, summarize};
use clocrc::text_metrics::Aggregation;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_results(text) {
            let _ = summarize(&rows, Aggregation::Median);
        }
    }
});
