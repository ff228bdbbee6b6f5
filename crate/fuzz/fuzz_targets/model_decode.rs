#![no_main]

use hairfield::MorphableHairModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = MorphableHairModel::decode(data) {
        let bytes = model.encode();
        assert_eq!(bytes.len(), data.len());
        assert_eq!(MorphableHairModel::decode(&bytes).unwrap().encode(), bytes);
    }
});
