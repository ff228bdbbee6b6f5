#![no_main]

use hairfield::ExclusionMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = ExclusionMap::from_json(data) {
        assert_eq!(ExclusionMap::from_json(map.to_json().as_bytes()).unwrap(), map);
    }
});
