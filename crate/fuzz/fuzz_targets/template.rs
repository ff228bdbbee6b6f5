#![no_main]

use hairfield::RayTemplate;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = RayTemplate::from_json(data) {
        let again = RayTemplate::from_json(t.to_json().as_bytes()).unwrap();
        assert_eq!(again.digest(), t.digest());
    }
});
