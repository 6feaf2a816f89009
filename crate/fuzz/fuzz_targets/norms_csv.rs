#![no_main]

use eigenloc::cli::{parse_norms_csv, write_norms_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_norms_csv(text) {
            let again = parse_norms_csv(&write_norms_csv(&rows)).unwrap();
            assert_eq!(again.len(), rows.len());
        }
    }
});
