#![no_main]

use libfuzzer_sys::fuzz_target;
use pcsyncbb::dcop::{parse_instance, serialize_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(inst) = parse_instance(text) {
        let again = parse_instance(&serialize_instance(&inst)).expect("serialized instance parses");
        assert_eq!(inst, again);
        let _ = inst.public_params();
    }
});
