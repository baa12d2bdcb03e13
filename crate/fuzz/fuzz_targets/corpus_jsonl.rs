#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(docs) = clocrc::corpus::parse_corpus(text) {
            let mut out = Vec::new();
            clocrc::corpus::write_corpus(&mut out, &docs).unwrap();
            let again = clocrc::corpus::parse_corpus(std::str::from_utf8(&out).unwrap()).unwrap();
            assert_eq!(docs, again);
        }
    }
});
