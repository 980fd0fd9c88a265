#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsyncbb::simnet::parse_cost_model;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_cost_model(text) {
        if m.validate().is_ok() {
            assert_eq!(parse_cost_model(&m.to_text()).unwrap(), m);
        }
    }
});
