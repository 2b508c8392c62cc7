#![no_main]

use gbfim::kernel::KernelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = text.parse::<KernelSpec>() {
        let again: KernelSpec = spec.to_string().parse().expect("display output parses");
        assert_eq!(again, spec);
    }
});
