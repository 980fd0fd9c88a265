use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{CryptoRng, RngCore};

use super::CryptoError;

/// Modulus size used for benchmarks.
pub const DEFAULT_KEY_BITS: usize = 2048;
/// Modulus size used by the test suites.
pub const TEST_KEY_BITS: usize = 512;
pub const MIN_KEY_BITS: usize = 512;

const KEYGEN_ATTEMPTS: usize = 64;

/// Short fingerprint of a public modulus, used to tag ciphertexts.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyId(pub u64);

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyId({:016x})", self.0)
    }
}

/// Public half of a Paillier key pair, generator fixed to `n + 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    n_sq: BigUint,
    id: KeyId,
    bits: usize,
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PublicKey")
            .field("id", &self.id)
            .field("bits", &self.bits)
            .finish()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: BigUint,
    key: KeyId,
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext({:?}, {} bits)", self.key, self.value.bits())
    }
}

impl Ciphertext {
    pub fn key(&self) -> KeyId {
        self.key
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// Big-endian encoding, padded to the key's ciphertext width.
    pub fn to_bytes(&self, pk: &PublicKey) -> Vec<u8> {
        self.to_bytes_padded(pk.ciphertext_bytes())
    }

    pub fn to_bytes_padded(&self, width: usize) -> Vec<u8> {
        let raw = self.value.to_bytes_be();
        let mut out = vec![0u8; width.saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }
}

impl PublicKey {
    fn new(n: BigUint) -> Self {
        let n_sq = &n * &n;
        let id = KeyId(n.iter_u64_digits().next().unwrap_or(0));
        let bits = n.bits() as usize;
        PublicKey { n, n_sq, id, bits }
    }

    pub fn id(&self) -> KeyId {
        self.id
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Width of a serialized ciphertext.
    pub fn ciphertext_bytes(&self) -> usize {
        (self.n_sq.bits() as usize).div_ceil(8)
    }

    /// Width of a serialized public key (the modulus).
    pub fn key_bytes(&self) -> usize {
        (self.bits).div_ceil(8)
    }

    /// Whether the plaintext space comfortably embeds `Z_S`: `n > S^2`.
    pub fn embeds(&self, s: u64) -> bool {
        self.n > BigUint::from(s) * BigUint::from(s)
    }

    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &BigUint, rng: &mut R) -> Ciphertext {
        let r = loop {
            let r = rng.gen_biguint_below(&self.n);
            if !r.is_zero() && r.gcd(&self.n).is_one() {
                break r;
            }
        };
        // (1 + n)^m = 1 + m*n  (mod n^2)
        let gm = (BigUint::one() + (m % &self.n) * &self.n) % &self.n_sq;
        let rn = r.modpow(&self.n, &self.n_sq);
        Ciphertext {
            value: gm * rn % &self.n_sq,
            key: self.id,
        }
    }

    pub fn encrypt_u64<R: RngCore + CryptoRng>(&self, m: u64, rng: &mut R) -> Ciphertext {
        self.encrypt(&BigUint::from(m), rng)
    }

    fn check(&self, c: &Ciphertext) -> Result<(), CryptoError> {
        if c.key != self.id {
            return Err(CryptoError::KeyMismatch {
                expected: self.id,
                found: c.key,
            });
        }
        Ok(())
    }

    /// `E(x) * E(y) = E(x + y)`.
    pub fn hom_add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CryptoError> {
        self.check(a)?;
        self.check(b)?;
        Ok(Ciphertext {
            value: &a.value * &b.value % &self.n_sq,
            key: self.id,
        })
    }

    /// `E(x)^e = E(e * x)`. An exponent of zero yields the trivial
    /// encryption of zero (the value 1).
    pub fn scalar_exp(&self, c: &Ciphertext, e: u64) -> Result<Ciphertext, CryptoError> {
        self.check(c)?;
        Ok(Ciphertext {
            value: self.pow_small(&c.value, e),
            key: self.id,
        })
    }

    /// Left-to-right square-and-multiply for word-sized exponents, which
    /// avoids the Montgomery setup cost of `modpow`.
    fn pow_small(&self, base: &BigUint, e: u64) -> BigUint {
        let mut acc = BigUint::one();
        for i in (0..64 - e.leading_zeros()).rev() {
            acc = &acc * &acc % &self.n_sq;
            if e >> i & 1 == 1 {
                acc = acc * base % &self.n_sq;
            }
        }
        acc
    }

    /// `prod_i c_i^(e_i)` with shared squarings.
    pub fn multi_exp(&self, terms: &[(&Ciphertext, u64)]) -> Result<Ciphertext, CryptoError> {
        for (c, _) in terms {
            self.check(c)?;
        }
        let top = terms.iter().map(|&(_, e)| 64 - e.leading_zeros()).max().unwrap_or(0);
        let mut acc = BigUint::one();
        for i in (0..top).rev() {
            acc = &acc * &acc % &self.n_sq;
            for (c, e) in terms {
                if e >> i & 1 == 1 {
                    acc = acc * &c.value % &self.n_sq;
                }
            }
        }
        Ok(Ciphertext {
            value: acc,
            key: self.id,
        })
    }

    /// The multiplicative identity, a valid (non-random) encryption of 0.
    pub fn identity(&self) -> Ciphertext {
        Ciphertext {
            value: BigUint::one(),
            key: self.id,
        }
    }

    /// Rebuilds a ciphertext from bytes received over the wire.
    pub fn ciphertext_from_bytes(&self, bytes: &[u8]) -> Result<Ciphertext, CryptoError> {
        let value = BigUint::from_bytes_be(bytes);
        if value.is_zero() || value >= self.n_sq || !value.gcd(&self.n).is_one() {
            return Err(CryptoError::InvalidCiphertext);
        }
        Ok(Ciphertext {
            value,
            key: self.id,
        })
    }
}

/// A full key pair. Decryption uses the CRT over `p^2` and `q^2`.
#[derive(Clone)]
pub struct PaillierContext {
    public: PublicKey,
    p: BigUint,
    q: BigUint,
    p_sq: BigUint,
    q_sq: BigUint,
    hp: BigUint,
    hq: BigUint,
    q_inv_p: BigUint,
}

impl fmt::Debug for PaillierContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PaillierContext")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

/// `L_p(x) = (x - 1) / p`; zero only arises from non-unit ciphertexts.
fn ell(x: &BigUint, p: &BigUint) -> Result<BigUint, CryptoError> {
    if x.is_zero() {
        return Err(CryptoError::InvalidCiphertext);
    }
    Ok((x - 1u32) / p)
}

/// Generates a key pair whose modulus has exactly `bits` bits.
pub fn keygen<R: RngCore + CryptoRng>(bits: usize, rng: &mut R) -> Result<PaillierContext, CryptoError> {
    if bits < MIN_KEY_BITS {
        return Err(CryptoError::KeyTooSmall(bits));
    }
    let half = bits / 2;
    for _ in 0..KEYGEN_ATTEMPTS {
        let p = glass_pumpkin::prime::from_rng(half, rng).map_err(|_| CryptoError::KeyGeneration(0))?;
        let q = glass_pumpkin::prime::from_rng(bits - half, rng)
            .map_err(|_| CryptoError::KeyGeneration(0))?;
        if p == q {
            continue;
        }
        let n = &p * &q;
        if n.bits() as usize != bits {
            continue;
        }
        let phi = (&p - 1u32) * (&q - 1u32);
        if !n.gcd(&phi).is_one() {
            continue;
        }
        return Ok(PaillierContext::from_primes(p, q));
    }
    Err(CryptoError::KeyGeneration(KEYGEN_ATTEMPTS))
}

impl PaillierContext {
    fn from_primes(p: BigUint, q: BigUint) -> Self {
        let n = &p * &q;
        let g = &n + 1u32;
        let p_sq = &p * &p;
        let q_sq = &q * &q;
        let hp = ell(&g.modpow(&(&p - 1u32), &p_sq), &p)
            .expect("g is a unit")
            .modinv(&p)
            .expect("gcd(q, p) = 1");
        let hq = ell(&g.modpow(&(&q - 1u32), &q_sq), &q)
            .expect("g is a unit")
            .modinv(&q)
            .expect("gcd(p, q) = 1");
        let q_inv_p = q.modinv(&p).expect("distinct primes");
        PaillierContext {
            public: PublicKey::new(n),
            p,
            q,
            p_sq,
            q_sq,
            hp,
            hq,
            q_inv_p,
        }
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint, CryptoError> {
        self.public.check(c)?;
        if c.value.is_zero() || c.value >= self.public.n_sq {
            return Err(CryptoError::InvalidCiphertext);
        }
        let mp = ell(&c.value.modpow(&(&self.p - 1u32), &self.p_sq), &self.p)? * &self.hp % &self.p;
        let mq = ell(&c.value.modpow(&(&self.q - 1u32), &self.q_sq), &self.q)? * &self.hq % &self.q;
        // Garner: m = mq + q * ((mp - mq) * q^-1 mod p)
        let diff = (&mp + &self.p - (&mq % &self.p)) % &self.p;
        let h = diff * &self.q_inv_p % &self.p;
        Ok(mq + h * &self.q)
    }

    /// Decrypts a ciphertext whose plaintext is known to be below `bound`,
    /// using only the smaller prime. Falls back to full decryption when
    /// `bound` does not fit below both primes. A plaintext at or above the
    /// bound gives an unspecified result.
    pub fn decrypt_below(&self, c: &Ciphertext, bound: u64) -> Result<u64, CryptoError> {
        self.public.check(c)?;
        if c.value.is_zero() || c.value >= self.public.n_sq {
            return Err(CryptoError::InvalidCiphertext);
        }
        let b = BigUint::from(bound);
        if b > self.p || b > self.q {
            return self.decrypt_mod(c, bound);
        }
        let cp = &c.value % &self.p_sq;
        let mp = ell(&cp.modpow(&(&self.p - 1u32), &self.p_sq), &self.p)? * &self.hp % &self.p;
        Ok(mp.iter_u64_digits().next().unwrap_or(0))
    }

    /// Decrypts and reduces into `Z_modulus`.
    pub fn decrypt_mod(&self, c: &Ciphertext, modulus: u64) -> Result<u64, CryptoError> {
        let m = self.decrypt(c)? % BigUint::from(modulus);
        Ok(m.iter_u64_digits().next().unwrap_or(0))
    }
}
