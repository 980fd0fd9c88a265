//! Cryptographic building blocks: the Paillier cipher, additive secret
//! sharing over `Z_S`, and encrypted indicator vectors.

mod indicator;
mod paillier;
mod sharing;

pub use indicator::{blinded_select, build_indicator_vectors, EncIndicatorVector};
pub use paillier::{
    keygen, Ciphertext, KeyId, PaillierContext, PublicKey, DEFAULT_KEY_BITS, MIN_KEY_BITS,
    TEST_KEY_BITS,
};
pub use sharing::{share_reconstruct, share_split, Share};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("key size {0} below the {MIN_KEY_BITS}-bit minimum")]
    KeyTooSmall(usize),
    #[error("prime generation failed after {0} attempts")]
    KeyGeneration(usize),
    #[error("ciphertext under key {found:?} used with key {expected:?}")]
    KeyMismatch { expected: KeyId, found: KeyId },
    #[error("ciphertext is not an element of Z*_(n^2)")]
    InvalidCiphertext,
    #[error("nothing to reconstruct")]
    NoShares,
    #[error("value {value} outside Z_{modulus}")]
    OutOfRange { value: u64, modulus: u64 },
    #[error("indicator vector has {got} entries, column has {want}")]
    LengthMismatch { got: usize, want: usize },
}
