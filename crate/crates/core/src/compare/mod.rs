//! Secure evaluation of the bound comparison.
//!
//! Every party `k` holds `x_k = (b_k - a_k) mod S`, where `a_k` is its share
//! of the CPA cost and `b_k` its share of the upper bound. The parties learn
//! one bit: whether `sum(a) mod S < sum(b) mod S`, and nothing else.
//!
//! Two interchangeable backends implement [`CompareBackend`]: an ideal
//! functionality that computes the bit in the clear, and a GMW-style
//! protocol over XOR shares with Beaver triples from an offline phase.

mod circuit;
mod gmw;

pub use circuit::{build_circuit, parse_circuit_dump, CircuitStats, ComparisonCircuit, Gate, Wire};
pub use gmw::{TranscriptKind, 
    offline_phase, online_phase, CorrelatedRandomness, OnlineStats, TranscriptEntry, TripleProvider,
    TripleShare, TrustedDealer,
};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("comparison needs at least 2 parties and 2 bits, got n={n}, ell={ell}")]
    Params { n: usize, ell: u32 },
    #[error("expected {expected} inputs, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("input {value} outside Z_{modulus}")]
    InputRange { value: u64, modulus: u64 },
    #[error("correlated randomness was prepared for a different circuit")]
    Fingerprint,
    #[error("correlated randomness exhausted: need {need} triples, have {have}")]
    Exhausted { need: usize, have: usize },
    #[error("triple provider failed: {0}")]
    Provider(String),
    #[error("circuit dump line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// Party input `x_k = (b_k - a_k) mod S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompareInput(pub u64);

impl CompareInput {
    pub fn new(a_share: u64, b_share: u64, s: u64) -> Self {
        CompareInput((b_share % s + s - a_share % s) % s)
    }
}

/// The comparison in the clear: true iff `(sum(x) - 1) mod S < S/2`, i.e.
/// `sum(x) mod S` lies in `[1, S/2]`. With `alpha, beta <= q_inf < S/2` the
/// sum is `(beta - alpha) mod S` and this is exactly `alpha < beta`.
pub fn ideal_compare(inputs: &[CompareInput], s: u64) -> Result<bool, CompareError> {
    let mut sum = 0u64;
    for x in inputs {
        if x.0 >= s {
            return Err(CompareError::InputRange { value: x.0, modulus: s });
        }
        sum = (sum + x.0) % s;
    }
    Ok((sum + s - 1) % s < s / 2)
}

/// Result of one secure comparison.
#[derive(Debug, Clone, Default)]
pub struct CompareOutcome {
    pub result: bool,
    pub stats: OnlineStats,
    /// Messages exchanged in the online phase, when recording is enabled.
    pub transcript: Vec<TranscriptEntry>,
}

/// A pluggable comparison protocol.
pub trait CompareBackend {
    fn name(&self) -> &'static str;

    fn compare(&mut self, inputs: &[CompareInput]) -> Result<CompareOutcome, CompareError>;
}

/// Trusted-evaluator reference.
#[derive(Debug, Clone)]
pub struct IdealBackend {
    parties: usize,
    s: u64,
}

impl IdealBackend {
    pub fn new(parties: usize, s: u64) -> Self {
        IdealBackend { parties, s }
    }
}

impl CompareBackend for IdealBackend {
    fn name(&self) -> &'static str {
        "ideal"
    }

    fn compare(&mut self, inputs: &[CompareInput]) -> Result<CompareOutcome, CompareError> {
        if inputs.len() != self.parties {
            return Err(CompareError::InputCount {
                expected: self.parties,
                got: inputs.len(),
            });
        }
        Ok(CompareOutcome {
            result: ideal_compare(inputs, self.s)?,
            ..Default::default()
        })
    }
}

/// GMW evaluation of [`build_circuit`] with a fresh offline phase per call.
pub struct MpcBackend<P: TripleProvider = TrustedDealer> {
    circuit: ComparisonCircuit,
    provider: P,
    rng: ChaCha20Rng,
    record: bool,
}

impl MpcBackend<TrustedDealer> {
    pub fn with_dealer(parties: usize, ell: u32, seed: u64) -> Result<Self, CompareError> {
        let circuit = build_circuit(parties, ell)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(MpcBackend {
            circuit,
            provider: TrustedDealer::new(seed),
            rng,
            record: false,
        })
    }
}

impl<P: TripleProvider> MpcBackend<P> {
    pub fn new(circuit: ComparisonCircuit, provider: P, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(1);
        MpcBackend {
            circuit,
            provider,
            rng,
            record: false,
        }
    }

    /// Keep the online transcript of every comparison.
    pub fn recording(mut self, on: bool) -> Self {
        self.record = on;
        self
    }

    pub fn circuit(&self) -> &ComparisonCircuit {
        &self.circuit
    }
}

impl<P: TripleProvider> CompareBackend for MpcBackend<P> {
    fn name(&self) -> &'static str {
        "mpc"
    }

    fn compare(&mut self, inputs: &[CompareInput]) -> Result<CompareOutcome, CompareError> {
        let materials = offline_phase(&self.circuit, &mut self.provider)?;
        let mut transcript = Vec::new();
        let sink = if self.record { Some(&mut transcript) } else { None };
        let (result, stats) = online_phase(&self.circuit, inputs, &materials, &mut self.rng, sink)?;
        Ok(CompareOutcome {
            result,
            stats,
            transcript,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcop::public_params;

    #[test]
    fn ideal_edge_cases() {
        let s = 2048;
        assert!(!ideal_compare(&[CompareInput(0); 5], s).unwrap());
        // beta - alpha = q_inf
        let p = public_params(5, 100).unwrap();
        let mut xs = vec![CompareInput(0); 5];
        xs[2] = CompareInput::new(0, p.q_inf, p.s);
        assert!(ideal_compare(&xs, p.s).unwrap());
        // alpha - beta = q_inf
        xs[2] = CompareInput::new(p.q_inf, 0, p.s);
        assert!(!ideal_compare(&xs, p.s).unwrap());
        assert!(ideal_compare(&[CompareInput(s)], s).is_err());
    }

    #[test]
    fn backends_reject_wrong_arity() {
        let mut ideal = IdealBackend::new(3, 16);
        assert!(matches!(
            ideal.compare(&[CompareInput(1)]),
            Err(CompareError::InputCount { expected: 3, got: 1 })
        ));
        let mut mpc = MpcBackend::with_dealer(3, 4, 0).unwrap();
        assert!(mpc.compare(&[CompareInput(1)]).is_err());
    }
}
