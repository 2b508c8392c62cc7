#![no_main]

use gbfim::tuning::GridSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<GridSpec>() {
        if let Ok(values) = spec.values() {
            assert_eq!(values.len(), spec.count);
        }
    }
});
