#![no_main]

use libfuzzer_sys::fuzz_target;
use linescan_core::cloudio::{parse_stl, write_stl};

fuzz_target!(|data: &[u8]| {
    if let Ok(mesh) = parse_stl(data) {
        let again = parse_stl(&write_stl(&mesh)).expect("written STL parses");
        assert_eq!(again.triangles.len(), mesh.triangles.len());
    }
});
