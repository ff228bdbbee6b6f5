#![no_main]

use hairfield::ScalpSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = ScalpSpec::from_json(data) {
        let again = ScalpSpec::from_json(spec.to_json().as_bytes()).unwrap();
        assert_eq!(again.digest(), spec.digest());
    }
});
