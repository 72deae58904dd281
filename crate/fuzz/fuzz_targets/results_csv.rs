#![no_main]

use libfuzzer_sys::fuzz_target;
use sirsched::experiments::{read_results_csv, results_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = read_results_csv(text) {
        if rows.is_empty() {
            return;
        }
        let again = read_results_csv(&results_csv(&rows).unwrap()).unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
