#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(pages) = clocrc::corpus::parse_pages(text) {
            let kept = clocrc::corpus::filter_pages(&pages, &clocrc::corpus::PageFilter::default());
            assert!(kept.len() <= pages.len());
        }
    }
});
