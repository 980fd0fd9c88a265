use super::DcopError;

/// Public parameters derived from the agent count and the maximal
/// single-constraint cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PublicParams {
    /// Strict upper bound on the cost of any full assignment: `C(n,2)*q + 1`.
    pub q_inf: u64,
    /// Share modulus; the smallest power of two strictly greater than `2*q_inf`.
    pub s: u64,
    /// Bit length of `s`, i.e. `log2(s)`.
    pub ell: u32,
}

impl PublicParams {
    /// Reduces a signed quantity into `Z_S`.
    pub fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.s as i128) as u64
    }
}

pub fn public_params(n: usize, q: u64) -> Result<PublicParams, DcopError> {
    if n < 2 {
        return Err(DcopError::TooFewAgents(n));
    }
    if q < 1 {
        return Err(DcopError::ZeroQ);
    }
    let overflow = DcopError::Overflow { n, q };
    let pairs = (n as u64)
        .checked_mul(n as u64 - 1)
        .ok_or(overflow.clone())?
        / 2;
    let q_inf = pairs
        .checked_mul(q)
        .and_then(|x| x.checked_add(1))
        .ok_or(overflow.clone())?;
    // 2*q_inf is not itself a power of two in general; when it is, step past it.
    let twice = q_inf.checked_mul(2).ok_or(overflow.clone())?;
    let s = twice
        .checked_add(1)
        .and_then(u64::checked_next_power_of_two)
        .ok_or(overflow)?;
    Ok(PublicParams {
        q_inf,
        s,
        ell: s.trailing_zeros(),
    })
}
