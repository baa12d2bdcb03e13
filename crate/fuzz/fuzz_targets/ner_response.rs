#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(body) = std::str::from_utf8(data) {
        let _ = clocrc::ner::parse_ner_response(body, "Jim left London for Paris.");
    }
});
