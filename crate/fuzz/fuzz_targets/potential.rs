#![no_main]
//! Potential descriptors, both shorthand (`harmonic:2`) and JSON.
//! Accepted potentials must answer domain queries without panicking.

use isochron::descriptor::parse_potential;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pot) = parse_potential(text) {
        let _ = pot.name();
        for x in [-0.5, 0.0, 0.5, 2.0] {
            let _ = pot.v(x);
            let _ = pot.dv(x);
        }
    }
});
