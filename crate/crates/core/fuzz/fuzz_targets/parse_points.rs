#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(points) = gbfim::graph::parse_points(text) {
        assert!(points.iter().flatten().all(|x| x.is_finite()));
    }
});
