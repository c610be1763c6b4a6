#![no_main]

use libfuzzer_sys::fuzz_target;
use open_mzi::config::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(loaded) = parse_config(text) {
            let cfg = loaded.config;
            assert!(cfg.window_out().t_start() >= cfg.window0().t_stop());
            assert!(cfg.window_out().t_start() >= cfg.window1().t_stop());
        }
    }
});
