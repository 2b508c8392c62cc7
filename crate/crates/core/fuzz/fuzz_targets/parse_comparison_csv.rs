#![no_main]

use gbfim::report::{comparison_csv, parse_comparison_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_comparison_csv(text) {
        if rows.iter().all(|r| {
            !r.method.contains(['\n', '\r']) && [r.max_std, r.mean_std, r.ic_score].iter().all(|x| !x.is_nan())
        }) {
            assert_eq!(parse_comparison_csv(&comparison_csv(&rows)).expect("round trip"), rows);
        }
    }
});
