//! GMW-style evaluation over XOR shares. AND gates consume one Beaver
//! triple each; all AND gates of one depth level share a single broadcast
//! round.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{CompareError, CompareInput, ComparisonCircuit, Gate};

/// One party's XOR share of a triple `(a, b, c = a & b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TripleShare {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

/// Source of multiplication triples for the offline phase.
pub trait TripleProvider {
    /// `count` triples, returned as one share vector per party.
    fn triples(&mut self, parties: usize, count: usize) -> Result<Vec<Vec<TripleShare>>, CompareError>;
}

/// Local dealer that samples triples and hands out XOR shares. The
/// parties must trust it with the offline material.
#[derive(Debug, Clone)]
pub struct TrustedDealer {
    rng: ChaCha20Rng,
}

impl TrustedDealer {
    pub fn new(seed: u64) -> Self {
        TrustedDealer {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }
}

fn xor_share<R: RngCore>(bit: bool, parties: usize, rng: &mut R) -> Vec<bool> {
    let mut out: Vec<bool> = (0..parties - 1).map(|_| rng.gen()).collect();
    let acc = out.iter().fold(bit, |acc, &b| acc ^ b);
    out.push(acc);
    out
}

impl TripleProvider for TrustedDealer {
    fn triples(&mut self, parties: usize, count: usize) -> Result<Vec<Vec<TripleShare>>, CompareError> {
        if parties == 0 {
            return Err(CompareError::Provider("no parties".into()));
        }
        let mut per_party = vec![Vec::with_capacity(count); parties];
        for _ in 0..count {
            let a: bool = self.rng.gen();
            let b: bool = self.rng.gen();
            let sa = xor_share(a, parties, &mut self.rng);
            let sb = xor_share(b, parties, &mut self.rng);
            let sc = xor_share(a & b, parties, &mut self.rng);
            for (p, share) in per_party.iter_mut().enumerate() {
                share.push(TripleShare {
                    a: sa[p],
                    b: sb[p],
                    c: sc[p],
                });
            }
        }
        Ok(per_party)
    }
}

/// Offline material held by one party.
#[derive(Debug, Clone)]
pub struct CorrelatedRandomness {
    pub party: usize,
    pub parties: usize,
    pub fingerprint: u64,
    pub triples: Vec<TripleShare>,
}

/// Prepares one triple per AND gate for every party. Input independent.
pub fn offline_phase<P: TripleProvider + ?Sized>(
    circuit: &ComparisonCircuit,
    provider: &mut P,
) -> Result<Vec<CorrelatedRandomness>, CompareError> {
    let parties = circuit.parties();
    let fingerprint = circuit.fingerprint();
    let per_party = provider.triples(parties, circuit.and_count())?;
    if per_party.len() != parties {
        return Err(CompareError::Provider(format!(
            "provider returned {} share sets for {parties} parties",
            per_party.len()
        )));
    }
    Ok(per_party
        .into_iter()
        .enumerate()
        .map(|(party, triples)| CorrelatedRandomness {
            party,
            parties,
            fingerprint,
            triples,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TranscriptKind {
    /// Share of another party's input bits.
    Input,
    /// Masked `(x ^ a, y ^ b)` pairs of one AND layer.
    Open,
    /// Share of the output wire.
    Output,
}

/// One message of the online phase. `to == None` is a broadcast.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TranscriptEntry {
    pub round: usize,
    pub from: usize,
    pub to: Option<usize>,
    pub kind: TranscriptKind,
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OnlineStats {
    /// Communication rounds, including input sharing and output opening.
    pub rounds: usize,
    /// Rounds spent opening masked AND inputs; equals the AND depth.
    pub and_rounds: usize,
    /// Point-to-point bits on the network, all parties together.
    pub bits_sent: u64,
    /// Bits sent plus received by a single party.
    pub party_bits: u64,
    /// Triples consumed.
    pub triples_used: usize,
}

/// Evaluates the circuit on XOR-shared inputs. Every party learns the
/// output bit; the transcript holds only random input shares, masked
/// openings and output shares.
pub fn online_phase<R: RngCore>(
    circuit: &ComparisonCircuit,
    inputs: &[CompareInput],
    materials: &[CorrelatedRandomness],
    rng: &mut R,
    mut transcript: Option<&mut Vec<TranscriptEntry>>,
) -> Result<(bool, OnlineStats), CompareError> {
    let n = circuit.parties();
    let l = circuit.ell() as usize;
    if inputs.len() != n {
        return Err(CompareError::InputCount {
            expected: n,
            got: inputs.len(),
        });
    }
    if materials.len() != n {
        return Err(CompareError::Provider(format!(
            "material for {} parties, circuit has {n}",
            materials.len()
        )));
    }
    let fp = circuit.fingerprint();
    let ands = circuit.and_count();
    for (p, m) in materials.iter().enumerate() {
        if m.fingerprint != fp || m.parties != n || m.party != p {
            return Err(CompareError::Fingerprint);
        }
        if m.triples.len() < ands {
            return Err(CompareError::Exhausted {
                need: ands,
                have: m.triples.len(),
            });
        }
    }
    for x in inputs {
        if x.0 >> l != 0 {
            return Err(CompareError::InputRange {
                value: x.0,
                modulus: 1 << l,
            });
        }
    }

    let peers = (n - 1) as u64;
    let mut stats = OnlineStats::default();
    let mut log = |e: TranscriptEntry| {
        if let Some(t) = transcript.as_deref_mut() {
            t.push(e);
        }
    };
    let mut shares = vec![vec![false; circuit.wire_count()]; n];

    // Round 0: every party XOR-shares its input bits.
    for (p, x) in inputs.iter().enumerate() {
        let mut own: Vec<bool> = (0..l).map(|i| (x.0 >> i) & 1 == 1).collect();
        for j in (0..n).filter(|&j| j != p) {
            let r: Vec<bool> = (0..l).map(|_| rng.gen()).collect();
            for i in 0..l {
                own[i] ^= r[i];
                shares[j][circuit.input_wire(p, i)] = r[i];
            }
            log(TranscriptEntry {
                round: 0,
                from: p,
                to: Some(j),
                kind: TranscriptKind::Input,
                bits: r,
            });
        }
        for (i, bit) in own.into_iter().enumerate() {
            shares[p][circuit.input_wire(p, i)] = bit;
        }
    }
    stats.rounds = 1;
    stats.bits_sent += n as u64 * peers * l as u64;
    stats.party_bits += 2 * peers * l as u64;

    let depth = circuit.wire_depths();
    let max_depth = depth.iter().copied().max().unwrap_or(0);
    let mut by_level: Vec<(Vec<&Gate>, Vec<&Gate>)> = vec![(Vec::new(), Vec::new()); max_depth + 1];
    for g in circuit.gates() {
        let slot = &mut by_level[depth[g.output()]];
        match g {
            Gate::And(..) => slot.0.push(g),
            _ => slot.1.push(g),
        }
    }

    let mut next_triple = 0usize;
    for (level, (and_gates, linear)) in by_level.iter().enumerate() {
        if !and_gates.is_empty() {
            let round = stats.rounds;
            let base = next_triple;
            // Each party opens d_i = x_i ^ a_i and e_i = y_i ^ b_i.
            let mut opened = vec![(false, false); and_gates.len()];
            for p in 0..n {
                let mut bits = Vec::with_capacity(2 * and_gates.len());
                for (g_idx, g) in and_gates.iter().enumerate() {
                    let Gate::And(x, y, _) = **g else { unreachable!() };
                    let t = materials[p].triples[base + g_idx];
                    let d = shares[p][x] ^ t.a;
                    let e = shares[p][y] ^ t.b;
                    opened[g_idx].0 ^= d;
                    opened[g_idx].1 ^= e;
                    bits.push(d);
                    bits.push(e);
                }
                log(TranscriptEntry {
                    round,
                    from: p,
                    to: None,
                    kind: TranscriptKind::Open,
                    bits,
                });
            }
            for (g_idx, g) in and_gates.iter().enumerate() {
                let Gate::And(_, _, o) = **g else { unreachable!() };
                let (d, e) = opened[g_idx];
                for (p, sh) in shares.iter_mut().enumerate() {
                    let t = materials[p].triples[base + g_idx];
                    sh[o] = t.c ^ (d & t.b) ^ (e & t.a) ^ (p == 0 && d & e);
                }
            }
            next_triple += and_gates.len();
            let opened_bits = 2 * and_gates.len() as u64;
            stats.rounds += 1;
            stats.and_rounds += 1;
            stats.bits_sent += n as u64 * peers * opened_bits;
            stats.party_bits += 2 * peers * opened_bits;
        }
        debug_assert!(level == 0 || !and_gates.is_empty());
        for g in linear {
            for (p, sh) in shares.iter_mut().enumerate() {
                match **g {
                    Gate::Xor(a, b, o) => sh[o] = sh[a] ^ sh[b],
                    // only one party flips its share
                    Gate::Not(a, o) => sh[o] = sh[a] ^ (p == 0),
                    Gate::And(..) => unreachable!(),
                }
            }
        }
    }

    let out = circuit.output();
    let mut result = false;
    for (p, sh) in shares.iter().enumerate() {
        result ^= sh[out];
        log(TranscriptEntry {
            round: stats.rounds,
            from: p,
            to: None,
            kind: TranscriptKind::Output,
            bits: vec![sh[out]],
        });
    }
    stats.rounds += 1;
    stats.bits_sent += n as u64 * peers;
    stats.party_bits += 2 * peers;
    stats.triples_used = next_triple;
    Ok((result, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compare::{build_circuit, ideal_compare};
    use crate::dcop::public_params;

    fn run(circuit: &ComparisonCircuit, xs: &[u64], dealer_seed: u64, seed: u64) -> (bool, OnlineStats, Vec<TranscriptEntry>) {
        let mut dealer = TrustedDealer::new(dealer_seed);
        let mats = offline_phase(circuit, &mut dealer).unwrap();
        let inputs: Vec<CompareInput> = xs.iter().copied().map(CompareInput).collect();
        let mut t = Vec::new();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (r, st) = online_phase(circuit, &inputs, &mats, &mut rng, Some(&mut t)).unwrap();
        (r, st, t)
    }

    #[test]
    fn triples_reconstruct() {
        let c = build_circuit(5, 11).unwrap();
        let mats = offline_phase(&c, &mut TrustedDealer::new(3)).unwrap();
        assert_eq!(mats.len(), 5);
        for m in &mats {
            assert_eq!(m.triples.len(), c.and_count());
        }
        for i in 0..c.and_count() {
            let (mut a, mut b, mut cc) = (false, false, false);
            for m in &mats {
                a ^= m.triples[i].a;
                b ^= m.triples[i].b;
                cc ^= m.triples[i].c;
            }
            assert_eq!(cc, a & b);
        }
    }

    #[test]
    fn matches_ideal_exhaustively_small() {
        let c = build_circuit(3, 3).unwrap();
        for code in 0..512u64 {
            let xs = [code % 8, (code / 8) % 8, code / 64];
            let (r, st, _) = run(&c, &xs, code, code + 1);
            let inputs: Vec<_> = xs.iter().copied().map(CompareInput).collect();
            assert_eq!(r, ideal_compare(&inputs, 8).unwrap(), "{xs:?}");
            assert_eq!(st.and_rounds, c.and_depth());
            assert_eq!(st.rounds, c.and_depth() + 2);
        }
    }

    #[test]
    fn equality_runs_full_protocol() {
        let p = public_params(5, 100).unwrap();
        let c = build_circuit(5, p.ell).unwrap();
        let (r, st, t) = run(&c, &[0; 5], 1, 2);
        assert!(!r);
        assert_eq!(st.triples_used, c.and_count());
        let opens = t.iter().filter(|e| e.kind == TranscriptKind::Open).count();
        assert_eq!(opens, 5 * c.and_depth());
    }

    #[test]
    fn transcript_changes_with_randomness_output_does_not() {
        let c = build_circuit(3, 6).unwrap();
        let xs = [17, 40, 9];
        let (r1, _, t1) = run(&c, &xs, 10, 20);
        let (r2, _, t2) = run(&c, &xs, 11, 21);
        assert_eq!(r1, r2);
        assert_ne!(t1, t2);
        // only the output shares are constrained by the result
        let out1: bool = t1.iter().filter(|e| e.kind == TranscriptKind::Output).fold(false, |a, e| a ^ e.bits[0]);
        assert_eq!(out1, r1);
    }

    #[test]
    fn mismatched_material_rejected() {
        let c = build_circuit(3, 6).unwrap();
        let other = build_circuit(3, 7).unwrap();
        let mats = offline_phase(&other, &mut TrustedDealer::new(0)).unwrap();
        let inputs = [CompareInput(1); 3];
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(
            online_phase(&c, &inputs, &mats, &mut rng, None).unwrap_err(),
            CompareError::Fingerprint
        );
        let mut mats = offline_phase(&c, &mut TrustedDealer::new(0)).unwrap();
        for m in &mut mats {
            m.triples.pop();
        }
        assert!(matches!(
            online_phase(&c, &inputs, &mats, &mut rng, None),
            Err(CompareError::Exhausted { .. })
        ));
    }
}
