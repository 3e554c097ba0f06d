#![no_main]
//! Forcing descriptors in JSON form. Accepted forcings must evaluate
//! without panicking and report a finite L1 norm.

use isochron::descriptor::parse_forcing_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(forcing) = parse_forcing_json(text) {
        for k in 0..8 {
            let _ = forcing.eval(k as f64 * 0.9);
        }
        assert!(forcing.l1_norm().is_finite());
    }
});
