#![no_main]

use libfuzzer_sys::fuzz_target;
use qst_core::noise_mc::{read_sweep_csv, sweep_csv_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = read_sweep_csv(text) {
        let again = read_sweep_csv(&sweep_csv_string(&rows)).expect("round trip");
        assert_eq!(again.len(), rows.len());
    }
});
