#![no_main]

use libfuzzer_sys::fuzz_target;
use qst_core::spin_model::{project_single_excitation, SpinModel};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = SpinModel::from_json(text) {
        let again = SpinModel::from_json(&model.to_json()).expect("round trip");
        assert_eq!(again.n(), model.n());
        let _ = project_single_excitation(&model);
    }
});
