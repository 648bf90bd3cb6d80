#![no_main]

use libfuzzer_sys::fuzz_target;
use linescan_core::cloudio::{parse_ply, write_ply};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cloud) = parse_ply(text) {
        let again = parse_ply(&write_ply(&cloud)).expect("written PLY parses");
        assert_eq!(again.points, cloud.points);
    }
});
