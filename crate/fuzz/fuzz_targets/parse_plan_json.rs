#![no_main]

use libfuzzer_sys::fuzz_target;
use linescan_core::config::PlanFormat;
use linescan_core::plan_file::{emit_plan, parse_plan};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = parse_plan(text) {
        let emitted = emit_plan(&doc, PlanFormat::Json);
        let again = parse_plan(&emitted).expect("emitted plan parses");
        assert_eq!(emit_plan(&again, PlanFormat::Json), emitted);
        let _ = doc.local_paths();
    }
});
