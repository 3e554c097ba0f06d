#![no_main]
//! Shorthand forcing grammar such as `0.2+0.5*cos+0.5*sin2t`.

use isochron::descriptor::parse_forcing_shorthand;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(forcing) = parse_forcing_shorthand(text) {
        let _ = forcing.eval(1.0);
        let _ = forcing.fourier_coefficient(1);
    }
});
