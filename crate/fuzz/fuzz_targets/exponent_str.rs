#![no_main]

use eigenloc::measures::Exponent;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = text.parse::<Exponent>() {
            assert!(p.is_infinite() || p.value() >= 1.0);
            let back: Exponent = p.to_string().parse().unwrap();
            assert_eq!(back, p);
        }
        let _ = serde_json::from_str::<Exponent>(text);
    }
});
