//! Replays the checked-in fuzz seeds through the same checks as the fuzz
//! targets, so the corpus keeps exercising the parsers on stable.

use std::path::PathBuf;

use pcsyncbb::compare::{parse_circuit_dump, CompareInput};
use pcsyncbb::crypto::{keygen, TEST_KEY_BITS};
use pcsyncbb::dcop::{parse_instance, serialize_instance};
use pcsyncbb::simnet::{parse_cost_model, parse_trace};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Returns how many seeds parsed successfully.
fn replay(target: &str, f: impl Fn(&str) -> bool) -> usize {
    seeds(target)
        .iter()
        .filter(|(_, data)| std::str::from_utf8(data).is_ok_and(&f))
        .count()
}

#[test]
fn instance_seeds() {
    let ok = replay("parse_instance", |text| match parse_instance(text) {
        Ok(inst) => {
            assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, 4);
}

#[test]
fn trace_seeds() {
    let ok = replay("parse_trace", |text| match parse_trace(text) {
        Ok(t) => {
            assert_eq!(parse_trace(&t.to_text()).unwrap(), t);
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, 3);
}

#[test]
fn cost_model_seeds() {
    let ok = replay("parse_cost_model", |text| match parse_cost_model(text) {
        Ok(m) => {
            if m.validate().is_ok() {
                assert_eq!(parse_cost_model(&m.to_text()).unwrap(), m);
            }
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, 2);
}

#[test]
fn circuit_dump_seeds() {
    let ok = replay("parse_circuit_dump", |text| match parse_circuit_dump(text) {
        Ok(c) => {
            assert_eq!(parse_circuit_dump(&c.dump()).unwrap().dump(), c.dump());
            assert!(!c.evaluate(&vec![CompareInput(0); c.parties()]).unwrap());
            true
        }
        Err(_) => false,
    });
    assert_eq!(ok, 2);
}

#[test]
fn ciphertext_seeds() {
    let ctx = keygen(TEST_KEY_BITS, &mut ChaCha20Rng::seed_from_u64(0)).unwrap();
    let pk = ctx.public();
    for (name, data) in seeds("ciphertext_from_bytes") {
        if let Ok(c) = pk.ciphertext_from_bytes(&data) {
            ctx.decrypt(&c).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(pk.ciphertext_from_bytes(&c.to_bytes(pk)).unwrap(), c);
        }
    }
}
