#![no_main]

use libfuzzer_sys::fuzz_target;
use sirsched::experiments::read_results_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_results_json(text);
    }
});
