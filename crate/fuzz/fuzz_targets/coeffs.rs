#![no_main]

use hairfield::HairCoefficients;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = HairCoefficients::from_json(data) {
        assert_eq!(HairCoefficients::from_json(c.to_json().as_bytes()).unwrap(), c);
    }
});
