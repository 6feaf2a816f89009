#![no_main]

use eigenloc::cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json(text) {
            // accepted configs re-encode to an equal config
            let again = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ExperimentConfig::from_json(&again).unwrap(), cfg);
            let model = cfg.model().unwrap();
            let _ = cfg.radii(&model);
            let _ = cfg.resolution(&model);
        }
    }
});
