use std::sync::Arc;

use rand::{CryptoRng, RngCore};

use super::{Ciphertext, CryptoError, PublicKey};

/// Encryption of the unit vector with a 1 at `position` (0-based).
///
/// All vectors built from one key are circular shifts of the same base
/// vector, so they share ciphertexts in rotated positions.
#[derive(Debug, Clone)]
pub struct EncIndicatorVector {
    base: Arc<[Ciphertext]>,
    position: usize,
}

impl EncIndicatorVector {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// The index this vector marks. Known only to its owner.
    pub fn position(&self) -> usize {
        self.position
    }

    /// Entry `i`: the base vector shifted right `position` times.
    pub fn get(&self, i: usize) -> &Ciphertext {
        let d = self.base.len();
        &self.base[(i + d - self.position % d) % d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ciphertext> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// The ciphertexts as they go on the wire.
    pub fn to_vec(&self) -> Vec<Ciphertext> {
        self.iter().cloned().collect()
    }

    /// One circular right shift.
    pub fn shifted(&self) -> Self {
        EncIndicatorVector {
            base: Arc::clone(&self.base),
            position: (self.position + 1) % self.base.len(),
        }
    }
}

/// Builds `z^1 .. z^d`: `z^1 = (E(1), E(0), ..., E(0))` with independent
/// randomness for every entry, then each next vector is the circular right
/// shift of the previous one.
pub fn build_indicator_vectors<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    domain_size: usize,
    rng: &mut R,
) -> Vec<EncIndicatorVector> {
    assert!(domain_size >= 1, "empty domain");
    let base: Arc<[Ciphertext]> = (0..domain_size)
        .map(|i| pk.encrypt_u64(u64::from(i == 0), rng))
        .collect();
    let mut out = Vec::with_capacity(domain_size);
    let mut z = EncIndicatorVector { base, position: 0 };
    for _ in 0..domain_size {
        let next = z.shifted();
        out.push(z);
        z = next;
    }
    out
}

/// Homomorphically selects row `r` of a cost column while blinding it:
/// given `z` encrypting the unit vector at `r` and the column
/// `(m_0, ..., m_{d-1})`, returns `prod_i z(i)^((m_i - rho) mod s)`, which
/// encrypts `(m_r - rho) mod s`.
pub fn blinded_select(
    pk: &PublicKey,
    z: &[Ciphertext],
    column: impl ExactSizeIterator<Item = u64>,
    rho: u64,
    s: u64,
) -> Result<Ciphertext, CryptoError> {
    if z.len() != column.len() {
        return Err(CryptoError::LengthMismatch {
            got: z.len(),
            want: column.len(),
        });
    }
    let terms: Vec<(&Ciphertext, u64)> = z
        .iter()
        .zip(column)
        .map(|(c, m)| (c, (m % s + s - rho % s) % s))
        .collect();
    pk.multi_exp(&terms)
}
