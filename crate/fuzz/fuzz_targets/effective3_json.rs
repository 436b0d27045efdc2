#![no_main]

use libfuzzer_sys::fuzz_target;
use qst_core::effective3::Effective3;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = Effective3::from_json(text) {
        Effective3::from_json(&h.to_json()).expect("round trip");
    }
});
