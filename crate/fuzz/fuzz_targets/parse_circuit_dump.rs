#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsyncbb::compare::{parse_circuit_dump, CompareInput};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = parse_circuit_dump(text) {
        assert_eq!(parse_circuit_dump(&c.dump()).unwrap().dump(), c.dump());
        let _ = c.stats();
        let zeros = vec![CompareInput(0); c.parties()];
        let _ = c.evaluate(&zeros);
    }
});
