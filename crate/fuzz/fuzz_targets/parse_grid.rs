#![no_main]

use libfuzzer_sys::fuzz_target;
use open_mzi::config::GridSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = text.parse::<GridSpec>() {
            // Only walk grids small enough to materialize quickly.
            if spec.len() <= 100_000 {
                let points = spec.points();
                assert_eq!(points.len(), spec.len());
                assert_eq!(points[0], spec.start);
            }
        }
    }
});
