#![no_main]

use hairfield::RayDistanceField;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = RayDistanceField::decode(data) {
        let bytes = field.encode();
        assert_eq!(bytes.len(), data.len());
        assert_eq!(RayDistanceField::decode(&bytes).unwrap(), field);
    }
});
