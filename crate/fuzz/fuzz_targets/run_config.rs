#![no_main]
//! Run configuration documents. A config that parses has already been
//! validated, so revalidation must agree.

use isochron::descriptor::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = RunConfig::from_json(text) {
        assert!(config.validate().is_ok());
    }
});
