#![no_main]

use libfuzzer_sys::fuzz_target;
use open_mzi::config::parse_locations;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(locs) = parse_locations(text) {
            assert!(!locs.is_empty() && locs.len() <= 6);
        }
    }
});
