use rand::Rng;

use super::CryptoError;

/// An additive share: an element of `Z_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Share(pub u64);

impl Share {
    pub fn value(self) -> u64 {
        self.0
    }
}

/// Splits `v` into `parts` shares summing to `v` mod `s`. All shares but
/// the last are uniform on `Z_s`.
pub fn share_split<R: Rng + ?Sized>(
    v: u64,
    parts: usize,
    s: u64,
    rng: &mut R,
) -> Result<Vec<Share>, CryptoError> {
    if v >= s {
        return Err(CryptoError::OutOfRange { value: v, modulus: s });
    }
    if parts == 0 {
        return Err(CryptoError::NoShares);
    }
    let mut shares: Vec<Share> = (0..parts - 1).map(|_| Share(rng.gen_range(0..s))).collect();
    let sum = shares.iter().fold(0u64, |acc, x| (acc + x.0) % s);
    shares.push(Share((v + s - sum) % s));
    Ok(shares)
}

pub fn share_reconstruct(shares: &[Share], s: u64) -> Result<u64, CryptoError> {
    if shares.is_empty() {
        return Err(CryptoError::NoShares);
    }
    let mut acc = 0u64;
    for sh in shares {
        if sh.0 >= s {
            return Err(CryptoError::OutOfRange { value: sh.0, modulus: s });
        }
        acc = (acc + sh.0) % s;
    }
    Ok(acc)
}
