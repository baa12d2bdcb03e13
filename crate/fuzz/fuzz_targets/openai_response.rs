#![no_main]

use libfuzzer_sys::fuzz_target;

use clocrc::llm_client::WireFormat;

fuzz_target!(|data: &[u8]| {
    if let Ok(body) = std::str::from_utf8(data) {
        let _ = WireFormat::OpenAiChat.parse(body);
    }
});
