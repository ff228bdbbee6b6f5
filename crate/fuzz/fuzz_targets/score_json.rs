#![no_main]

use hairfield::ray_field::binarize_score_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = binarize_score_json(data) {
        let (n_s, n_r) = map.shape();
        assert!(map.count() <= 2 * n_s * n_r);
    }
});
