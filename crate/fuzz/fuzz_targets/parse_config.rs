#![no_main]

use libfuzzer_sys::fuzz_target;
use linescan_core::config::PlanConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = PlanConfig::from_toml_str(text) {
        let _ = cfg.validate();
    }
});
