#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let env = |name: &str| (name == "HOME").then(|| "/home/x".to_owned());
        let _ = clocrc_cli::config::parse_config(text, &env);
    }
});
