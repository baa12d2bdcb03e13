#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = clocrc_cli::inputs::parse_values(text) {
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
});
