#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use pcsyncbb::crypto::{keygen, PaillierContext, TEST_KEY_BITS};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn ctx() -> &'static PaillierContext {
    static CTX: OnceLock<PaillierContext> = OnceLock::new();
    CTX.get_or_init(|| keygen(TEST_KEY_BITS, &mut ChaCha20Rng::seed_from_u64(0)).unwrap())
}

fuzz_target!(|data: &[u8]| {
    let pk = ctx().public();
    if let Ok(c) = pk.ciphertext_from_bytes(data) {
        let _ = ctx().decrypt(&c);
        let _ = ctx().decrypt_below(&c, 1 << 16);
        let _ = pk.scalar_exp(&c, 3);
        assert_eq!(pk.ciphertext_from_bytes(&c.to_bytes(pk)).unwrap(), c);
    }
});
