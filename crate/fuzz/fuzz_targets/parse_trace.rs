#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsyncbb::audit::audit_trace;
use pcsyncbb::simnet::parse_trace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(trace) = parse_trace(text) {
        assert_eq!(parse_trace(&trace.to_text()).unwrap(), trace);
        let _ = audit_trace(&trace, Some(&[0, 1]));
    }
});
