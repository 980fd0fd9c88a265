//! One agent's side of the protocol, as an isolated state machine.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{EngineError, Message};
use crate::crypto::{
    blinded_select, build_indicator_vectors, keygen, Ciphertext, EncIndicatorVector, PaillierContext,
    PublicKey,
};
use crate::dcop::{CostMatrix, DcopInstance, PublicParams};
use crate::ordering::{OrderStream, ValueOrdering};

/// Something an agent asks the runtime to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Send(usize, Message),
    /// Send to every other agent. The sender has already applied the
    /// message to itself.
    Broadcast(Message),
    /// Run the joint bound comparison and report back to this agent.
    Compare,
}

/// Crypto operations performed by one agent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CryptoCounts {
    pub encryptions: u64,
    pub decryptions: u64,
    pub exponentiations: u64,
    pub multiplications: u64,
}

impl CryptoCounts {
    pub fn total(&self) -> u64 {
        self.encryptions + self.decryptions + self.exponentiations + self.multiplications
    }
}

#[derive(Debug, Clone)]
pub struct AgentSetup {
    pub ordering: ValueOrdering,
    pub ordering_seed: u64,
    pub crypto_seed: u64,
    pub key_bits: usize,
}

/// Protocol state of agent `k`.
///
/// The agent holds only what it is entitled to: its domain size, its
/// neighbor index sets, the cost matrices it shares with preceding
/// neighbors, and its own key pair.
#[derive(Debug)]
pub struct Agent {
    k: usize,
    n: usize,
    params: PublicParams,
    domain_size: usize,
    preceding: Vec<usize>,
    following: Vec<usize>,
    /// `M_{t,k}` for every preceding neighbor `t`.
    incoming: BTreeMap<usize, CostMatrix>,
    s_cpa: Vec<u64>,
    s_ub: u64,
    /// Secret traversal order `w_k` (indices into the public order).
    order: Vec<usize>,
    pointer: usize,
    current: Option<usize>,
    optimal: Option<usize>,
    paillier: Option<PaillierContext>,
    indicators: Vec<EncIndicatorVector>,
    neighbor_keys: BTreeMap<usize, PublicKey>,
    received_z: BTreeMap<usize, Vec<Ciphertext>>,
    orders: OrderStream,
    rng: ChaCha20Rng,
    torch: bool,
    awaiting_compare: bool,
    halted: bool,
    counts: CryptoCounts,
}

impl Agent {
    /// Builds agent `k` from the public parameters and its private view of
    /// the instance. Agents before the last create a Paillier key pair and
    /// their indicator vectors.
    pub fn new(inst: &DcopInstance, k: usize, setup: &AgentSetup) -> Result<Self, EngineError> {
        let n = inst.n();
        let params = inst.public_params()?;
        let preceding = inst.preceding_neighbors(k);
        let following = inst.following_neighbors(k);
        let incoming = preceding
            .iter()
            .map(|&t| (t, inst.matrix(t, k).expect("neighbor").clone()))
            .collect();
        let mut rng = ChaCha20Rng::seed_from_u64(setup.crypto_seed);
        rng.set_stream(k as u64);
        let mut counts = CryptoCounts::default();
        let (paillier, indicators) = if k + 1 < n {
            let ctx = keygen(setup.key_bits, &mut rng)?;
            if !ctx.public().embeds(params.s) {
                return Err(EngineError::Protocol(format!(
                    "key of agent {k} too small for S={}",
                    params.s
                )));
            }
            let z = build_indicator_vectors(ctx.public(), inst.domain_size(k), &mut rng);
            counts.encryptions += inst.domain_size(k) as u64;
            (Some(ctx), z)
        } else {
            (None, Vec::new())
        };
        Ok(Agent {
            k,
            n,
            params,
            domain_size: inst.domain_size(k),
            preceding,
            following,
            incoming,
            s_cpa: vec![0; n],
            s_ub: 0,
            order: Vec::new(),
            pointer: 0,
            current: None,
            optimal: None,
            paillier,
            indicators,
            neighbor_keys: BTreeMap::new(),
            received_z: BTreeMap::new(),
            orders: OrderStream::new(setup.ordering, setup.ordering_seed, k),
            rng,
            torch: false,
            awaiting_compare: false,
            halted: false,
            counts,
        })
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn public_key(&self) -> Option<&PublicKey> {
        self.paillier.as_ref().map(PaillierContext::public)
    }

    /// Public keys go to every following neighbor before the search.
    pub fn setup_messages(&self) -> Vec<Effect> {
        match self.public_key() {
            Some(pk) => self
                .following
                .iter()
                .map(|&t| Effect::Send(t, Message::PubKey(pk.clone())))
                .collect(),
            None => Vec::new(),
        }
    }

    /// `init`: zero shares and pointer; the first agent holds the whole
    /// initial bound and starts the search.
    pub fn init(&mut self) -> Result<Vec<Effect>, EngineError> {
        self.s_cpa.iter_mut().for_each(|s| *s = 0);
        self.pointer = 0;
        if self.k > 0 {
            self.s_ub = 0;
            Ok(Vec::new())
        } else {
            self.s_ub = self.params.q_inf % self.params.s;
            self.torch = true;
            self.assign_cpa()
        }
    }

    pub fn handle(&mut self, from: usize, msg: Message) -> Result<Vec<Effect>, EngineError> {
        if self.halted {
            return Err(EngineError::Protocol(format!("agent {} got {msg:?} after COMPLETE", self.k)));
        }
        match msg {
            Message::PubKey(pk) => {
                self.neighbor_keys.insert(from, pk);
                Ok(Vec::new())
            }
            Message::ZVector { cts, .. } => {
                if cts.len() != self.domain_size_of(from)? {
                    return Err(EngineError::Protocol(format!("bad z vector length from {from}")));
                }
                self.received_z.insert(from, cts);
                Ok(Vec::new())
            }
            Message::YValue { ct, .. } => {
                let ctx = self.paillier.as_ref().ok_or_else(|| {
                    EngineError::Protocol(format!("agent {} has no key for Y_VALUE", self.k))
                })?;
                self.s_cpa[from] = ctx.decrypt_below(&ct, self.params.s)?;
                self.counts.decryptions += 1;
                Ok(Vec::new())
            }
            Message::ZeroShare(k2) => {
                self.s_cpa[k2] = 0;
                Ok(Vec::new())
            }
            Message::NewOptimumFound => {
                self.on_new_optimum();
                Ok(Vec::new())
            }
            Message::Cpa => {
                self.take_torch(from)?;
                self.pointer = 0;
                self.assign_cpa()
            }
            Message::Backtrack => {
                self.take_torch(from)?;
                self.assign_cpa()
            }
            Message::Complete => {
                self.on_complete();
                Ok(Vec::new())
            }
        }
    }

    fn domain_size_of(&self, t: usize) -> Result<usize, EngineError> {
        self.incoming
            .get(&t)
            .map(CostMatrix::rows)
            .ok_or_else(|| EngineError::Protocol(format!("agent {} is not constrained with {t}", self.k)))
    }

    fn take_torch(&mut self, from: usize) -> Result<(), EngineError> {
        let expected = if from + 1 == self.k || from == self.k + 1 { Ok(()) } else { Err(()) };
        if self.torch || expected.is_err() {
            return Err(EngineError::Protocol(format!(
                "agent {} received the torch from {from} out of order",
                self.k
            )));
        }
        self.torch = true;
        Ok(())
    }

    fn assign_cpa(&mut self) -> Result<Vec<Effect>, EngineError> {
        if !self.torch {
            return Err(EngineError::Protocol(format!("agent {} assigns without the torch", self.k)));
        }
        if self.pointer == 0 {
            self.order = self.orders.next_order(self.domain_size);
        }
        self.pointer += 1;
        if self.pointer > self.domain_size {
            return Ok(self.backtrack());
        }
        let v = self.order[self.pointer - 1];
        self.current = Some(v);
        let mut effects = self.update_shares(v)?;
        effects.push(Effect::Compare);
        self.awaiting_compare = true;
        Ok(effects)
    }

    /// This agent's half of the share update after assigning value index
    /// `s`: a blinded encrypted share to each preceding neighbor and the
    /// new indicator vector to each following neighbor.
    fn update_shares(&mut self, s: usize) -> Result<Vec<Effect>, EngineError> {
        let mut effects = Vec::new();
        let modulus = self.params.s;
        for &t in &self.preceding {
            let z = self.received_z.get(&t).ok_or(EngineError::MissingZ { agent: self.k, from: t })?;
            let pk = self
                .neighbor_keys
                .get(&t)
                .ok_or_else(|| EngineError::Protocol(format!("agent {} lacks the key of {t}", self.k)))?;
            let rho = self.rng.gen_range(0..modulus);
            let m = &self.incoming[&t];
            let y = blinded_select(pk, z, m.column(s), rho, modulus)?;
            self.counts.exponentiations += m.rows() as u64;
            self.counts.multiplications += m.rows() as u64;
            self.s_cpa[t] = rho;
            effects.push(Effect::Send(
                t,
                Message::YValue {
                    ct: y,
                    width: pk.ciphertext_bytes(),
                },
            ));
        }
        if self.k + 1 < self.n {
            if let Some(pk) = self.public_key() {
                let width = pk.ciphertext_bytes();
                for &t in &self.following {
                    effects.push(Effect::Send(
                        t,
                        Message::ZVector {
                            cts: self.indicators[s].to_vec(),
                            width,
                        },
                    ));
                }
            }
        }
        Ok(effects)
    }

    /// Continuation of `assign_CPA` once the joint comparison is known.
    pub fn on_compare_result(&mut self, below_bound: bool) -> Result<Vec<Effect>, EngineError> {
        if !self.awaiting_compare {
            return Err(EngineError::Protocol(format!("agent {} did not request a comparison", self.k)));
        }
        self.awaiting_compare = false;
        if self.k + 1 == self.n {
            let mut effects = Vec::new();
            if below_bound {
                self.on_new_optimum();
                effects.push(Effect::Broadcast(Message::NewOptimumFound));
            }
            effects.extend(self.assign_cpa()?);
            Ok(effects)
        } else if !below_bound {
            self.assign_cpa()
        } else {
            self.torch = false;
            Ok(vec![Effect::Send(self.k + 1, Message::Cpa)])
        }
    }

    fn backtrack(&mut self) -> Vec<Effect> {
        self.current = None;
        self.torch = false;
        if self.k > 0 {
            let mut effects = Vec::with_capacity(self.preceding.len() + 1);
            for &t in &self.preceding {
                self.s_cpa[t] = 0;
                effects.push(Effect::Send(t, Message::ZeroShare(self.k)));
            }
            effects.push(Effect::Send(self.k - 1, Message::Backtrack));
            effects
        } else {
            self.on_complete();
            vec![Effect::Broadcast(Message::Complete)]
        }
    }

    fn on_new_optimum(&mut self) {
        let s = self.params.s;
        self.s_ub = self.neighbors().fold(0, |acc, t| (acc + self.s_cpa[t]) % s);
        self.optimal = self.current;
    }

    fn on_complete(&mut self) {
        self.current = self.optimal;
        self.halted = true;
    }

    fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.preceding.iter().chain(&self.following).copied()
    }

    /// `(b_k - a_k) mod S`: this agent's input to the comparison.
    pub fn compare_input(&self) -> u64 {
        let s = self.params.s;
        let a = self.neighbors().fold(0, |acc, t| (acc + self.s_cpa[t]) % s);
        (self.s_ub + s - a) % s
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn holds_torch(&self) -> bool {
        self.torch
    }

    /// Current value index, or the final decision after COMPLETE.
    pub fn current(&self) -> Option<usize> {
        self.current
    }

    pub fn s_cpa(&self) -> &[u64] {
        &self.s_cpa
    }

    pub fn s_ub(&self) -> u64 {
        self.s_ub
    }

    pub fn counts(&self) -> CryptoCounts {
        self.counts
    }

    /// Constraint pairs whose costs this agent can read.
    pub fn known_pairs(&self) -> Vec<(usize, usize)> {
        self.incoming.keys().map(|&t| (t, self.k)).collect()
    }

    pub fn preceding(&self) -> &[usize] {
        &self.preceding
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::TEST_KEY_BITS;
    use crate::dcop::gen_random;

    fn setup() -> AgentSetup {
        AgentSetup {
            ordering: ValueOrdering::Natural,
            ordering_seed: 0,
            crypto_seed: 1,
            key_bits: TEST_KEY_BITS,
        }
    }

    #[test]
    fn init_splits_bound_onto_first_agent() {
        let inst = gen_random(3, 2, 1.0, 10, 0).unwrap();
        let p = inst.public_params().unwrap();
        let mut agents: Vec<Agent> = (0..3).map(|k| Agent::new(&inst, k, &setup()).unwrap()).collect();
        // first agent acts, the others stay silent
        let effects: Vec<Vec<Effect>> = agents.iter_mut().map(|a| a.init().unwrap()).collect();
        assert!(!effects[0].is_empty());
        assert!(effects[1].is_empty() && effects[2].is_empty());
        let ub: Vec<u64> = agents.iter().map(Agent::s_ub).collect();
        assert_eq!(ub, vec![p.q_inf, 0, 0]);
        assert!(agents.iter().all(|a| a.s_cpa().iter().all(|&s| s == 0)));
        // agent 0 has no predecessors: it only sends z vectors then compares
        assert_eq!(effects[0].last(), Some(&Effect::Compare));
        assert_eq!(agents[0].compare_input(), p.q_inf);
    }

    #[test]
    fn zero_share_is_idempotent() {
        let inst = gen_random(3, 2, 1.0, 10, 0).unwrap();
        let mut a = Agent::new(&inst, 0, &setup()).unwrap();
        a.s_cpa[2] = 5;
        a.handle(2, Message::ZeroShare(2)).unwrap();
        let snapshot = a.s_cpa.clone();
        a.handle(2, Message::ZeroShare(2)).unwrap();
        assert_eq!(a.s_cpa, snapshot);
        assert_eq!(a.s_cpa[2], 0);
    }

    #[test]
    fn torch_discipline_enforced() {
        let inst = gen_random(4, 2, 1.0, 10, 0).unwrap();
        let mut a = Agent::new(&inst, 2, &setup()).unwrap();
        assert!(matches!(a.handle(0, Message::Cpa), Err(EngineError::Protocol(_))));
        assert!(matches!(a.on_compare_result(true), Err(EngineError::Protocol(_))));
        // missing z vectors is a protocol-order violation
        assert!(matches!(a.handle(1, Message::Cpa), Err(EngineError::MissingZ { agent: 2, .. })));
    }

    #[test]
    fn last_agent_has_no_key_and_knows_only_its_pairs() {
        let inst = gen_random(4, 2, 1.0, 10, 0).unwrap();
        let last = Agent::new(&inst, 3, &setup()).unwrap();
        assert!(last.public_key().is_none());
        assert_eq!(last.known_pairs(), vec![(0, 3), (1, 3), (2, 3)]);
        let first = Agent::new(&inst, 0, &setup()).unwrap();
        assert!(first.known_pairs().is_empty());
        assert_eq!(first.setup_messages().len(), 3);
    }
}
