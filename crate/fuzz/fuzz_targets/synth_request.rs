#![no_main]

use hairfield_service::SynthRequest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(req) = serde_json::from_slice::<SynthRequest>(data) {
        let text = serde_json::to_vec(&req).unwrap();
        assert_eq!(serde_json::from_slice::<SynthRequest>(&text).unwrap(), req);
    }
});
