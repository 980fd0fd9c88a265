//! The private branch-and-bound protocol, run over the simulated network.
//!
//! Each agent is an isolated [`Agent`] state machine. The runtime delivers
//! mailbox messages in FIFO order and, whenever an agent asks for a bound
//! comparison and the network is quiet, collects every agent's input and
//! runs the configured comparison backend.
//!
//! The runtime can also act as an omniscient observer: it reconstructs
//! the shares after each step and checks them against plaintext costs.
//! Agents never reconstruct anything themselves.

mod agent;
mod message;

pub use agent::{Agent, AgentSetup, CryptoCounts, Effect};
pub use message::{Message, INDEX_BYTES};

use std::time::{Duration, Instant};

use crate::baseline::{SearchStats, SolveResult};
use crate::compare::{
    CompareBackend, CompareError, CompareInput, IdealBackend, MpcBackend, TranscriptEntry, TranscriptKind,
};
use crate::crypto::{CryptoError, DEFAULT_KEY_BITS};
use crate::dcop::{DcopError, DcopInstance, PublicParams};
use crate::ordering::ValueOrdering;
use crate::simnet::{simulated_time, AgentId, CostModel, NetError, Payload, PayloadKind, SimNet, Trace, WorkCounts};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("agent {agent} has no indicator vector from agent {from}")]
    MissingZ { agent: usize, from: usize },
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Dcop(#[from] DcopError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("instance must be connected")]
    Disconnected,
    #[error("cutoff of {0:?} exceeded")]
    Cutoff(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendKind {
    #[default]
    Ideal,
    Mpc,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Ideal => "ideal",
            BackendKind::Mpc => "mpc",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub backend: BackendKind,
    pub key_bits: usize,
    /// Seed of the value-ordering streams; crypto and triple randomness
    /// use seeds derived from it.
    pub seed: u64,
    pub values: ValueOrdering,
    /// Reconstruct and check the share equations throughout the run.
    pub check_invariants: bool,
    /// Put the comparison protocol's messages into the trace.
    pub record_mpc: bool,
    /// Keep the raw bytes of every payload.
    pub capture_payloads: bool,
    pub cutoff: Option<Duration>,
    /// Defaults to [`CostModel::measured_comparison`] for the agent count.
    pub cost_model: Option<CostModel>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            backend: BackendKind::Ideal,
            key_bits: DEFAULT_KEY_BITS,
            seed: 0,
            values: ValueOrdering::Random,
            check_invariants: false,
            record_mpc: false,
            capture_payloads: false,
            cutoff: None,
            cost_model: None,
        }
    }
}

fn derive_seed(seed: u64, lane: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub comparisons: u64,
    pub paillier_ops: u64,
    pub messages: u64,
    pub bytes: u64,
    pub new_optima: u64,
    pub mpc_rounds: u64,
    pub mpc_bits: u64,
    pub sim_time_ms: f64,
}

impl RunMetrics {
    pub const CSV_HEADER: &'static str =
        "comparisons,paillier_ops,messages,bytes,new_optima,mpc_rounds,mpc_bits,sim_time_ms";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.comparisons,
            self.paillier_ops,
            self.messages,
            self.bytes,
            self.new_optima,
            self.mpc_rounds,
            self.mpc_bits,
            self.sim_time_ms
        )
    }
}

/// Results of the observer's share checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub pair_checks: u64,
    pub cpa_checks: u64,
    pub bound_checks: u64,
    /// Comparisons whose secure outcome differed from the plaintext one.
    pub compare_mismatches: u64,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty() && self.compare_mismatches == 0
    }
}

/// Raw bytes of one message as seen on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedPayload {
    pub step: u64,
    pub from: AgentId,
    pub to: Option<AgentId>,
    pub tag: String,
    pub kind: PayloadKind,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: SolveResult,
    pub metrics: RunMetrics,
    pub trace: Trace,
    pub invariants: InvariantReport,
    /// Outcome of every bound comparison, in call order.
    pub comparisons: Vec<bool>,
    /// Plaintext bound after initialisation and after each improvement;
    /// filled only when invariants are checked.
    pub bounds: Vec<u64>,
    pub payloads: Vec<CapturedPayload>,
    pub params: PublicParams,
}

fn mpc_tag(kind: TranscriptKind) -> &'static str {
    match kind {
        TranscriptKind::Input => "MPC_INPUT",
        TranscriptKind::Open => "MPC_OPEN",
        TranscriptKind::Output => "MPC_OUTPUT",
    }
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |b, (i, &x)| b | ((x as u8) << i)))
        .collect()
}

struct Runtime<'a> {
    inst: &'a DcopInstance,
    params: PublicParams,
    cfg: &'a EngineConfig,
    agents: Vec<Agent>,
    net: SimNet<Message>,
    backend: Box<dyn CompareBackend>,
    pending_compare: Option<usize>,
    optimum_broadcast: bool,
    report: InvariantReport,
    shadow_bound: u64,
    comparisons: Vec<bool>,
    bounds: Vec<u64>,
    payloads: Vec<CapturedPayload>,
    metrics: RunMetrics,
}

/// Solves `inst` with the private protocol.
pub fn run(inst: &DcopInstance, cfg: &EngineConfig) -> Result<RunOutput, EngineError> {
    let started = Instant::now();
    if !inst.is_connected() {
        return Err(EngineError::Disconnected);
    }
    let n = inst.n();
    let params = inst.public_params()?;
    let setup = AgentSetup {
        ordering: cfg.values,
        ordering_seed: cfg.seed,
        crypto_seed: derive_seed(cfg.seed, 1),
        key_bits: cfg.key_bits,
    };
    let agents = (0..n)
        .map(|k| Agent::new(inst, k, &setup))
        .collect::<Result<Vec<_>, _>>()?;
    let backend: Box<dyn CompareBackend> = match cfg.backend {
        BackendKind::Ideal => Box::new(IdealBackend::new(n, params.s)),
        BackendKind::Mpc => {
            Box::new(MpcBackend::with_dealer(n, params.ell, derive_seed(cfg.seed, 2))?.recording(cfg.record_mpc))
        }
    };
    let mut rt = Runtime {
        inst,
        params,
        cfg,
        agents,
        net: SimNet::new(n),
        backend,
        pending_compare: None,
        optimum_broadcast: false,
        report: InvariantReport::default(),
        shadow_bound: params.q_inf,
        comparisons: Vec::new(),
        bounds: Vec::new(),
        payloads: Vec::new(),
        metrics: RunMetrics::default(),
    };

    // setup round: key distribution
    for k in 0..n {
        let effects = rt.agents[k].setup_messages();
        rt.dispatch(k, effects)?;
    }
    while let Some(env) = rt.deliver()? {
        let effects = rt.agents[env.0].handle(env.1, env.2)?;
        rt.dispatch(env.0, effects)?;
    }

    for k in 0..n {
        let effects = rt.agents[k].init()?;
        if k == 0 && cfg.check_invariants {
            rt.bounds.push(rt.shadow_bound);
            rt.check_bound();
        }
        rt.dispatch(k, effects)?;
    }

    loop {
        if let Some(limit) = cfg.cutoff {
            if started.elapsed() > limit {
                return Err(EngineError::Cutoff(limit));
            }
        }
        if let Some((to, from, msg)) = rt.deliver()? {
            if cfg.check_invariants && msg == Message::Backtrack {
                rt.check_cpa("backtrack");
            }
            let effects = rt.agents[to].handle(from, msg)?;
            rt.dispatch(to, effects)?;
            continue;
        }
        if cfg.check_invariants && rt.optimum_broadcast {
            rt.check_bound();
        }
        rt.optimum_broadcast = false;
        match rt.pending_compare.take() {
            Some(k) => {
                let result = rt.compare(k)?;
                let effects = rt.agents[k].on_compare_result(result)?;
                rt.dispatch(k, effects)?;
            }
            None => break,
        }
    }
    rt.finish()
}

impl Runtime<'_> {
    fn dispatch(&mut self, from: usize, effects: Vec<Effect>) -> Result<(), EngineError> {
        for e in effects {
            match e {
                Effect::Send(to, msg) => self.net.send(from, to, msg)?,
                Effect::Broadcast(msg) => {
                    if msg == Message::NewOptimumFound {
                        self.optimum_broadcast = true;
                    }
                    self.net.broadcast(from, msg)?
                }
                Effect::Compare => {
                    if let Some(other) = self.pending_compare.replace(from) {
                        return Err(EngineError::Protocol(format!(
                            "agents {other} and {from} both requested a comparison"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn deliver(&mut self) -> Result<Option<(usize, usize, Message)>, EngineError> {
        let step = self.net.trace().len() as u64;
        let Some(env) = self.net.deliver_next() else {
            return Ok(None);
        };
        if self.cfg.capture_payloads {
            self.payloads.push(CapturedPayload {
                step,
                from: env.from,
                to: Some(env.to),
                tag: env.msg.tag().to_string(),
                kind: env.msg.kind(),
                bytes: env.msg.payload_bytes(),
            });
        }
        Ok(Some((env.to, env.from, env.msg)))
    }

    fn current_indices(&self) -> Vec<Option<usize>> {
        self.agents.iter().map(Agent::current).collect()
    }

    /// Sum of all CPA shares must equal the plaintext CPA cost.
    fn check_cpa(&mut self, when: &str) {
        self.report.cpa_checks += 1;
        let s = self.params.s;
        let total = self
            .agents
            .iter()
            .flat_map(|a| a.s_cpa().iter())
            .fold(0, |acc, &x| (acc + x) % s);
        let cost = self.inst.cost_of_indices(&self.current_indices());
        if total != cost % s {
            self.report
                .violations
                .push(format!("CPA shares sum to {total}, cost is {cost} ({when})"));
        }
    }

    /// Bound shares must reconstruct the best cost found so far.
    fn check_bound(&mut self) {
        self.report.bound_checks += 1;
        let s = self.params.s;
        let total = self.agents.iter().fold(0, |acc, a| (acc + a.s_ub()) % s);
        if total != self.shadow_bound % s {
            self.report.violations.push(format!(
                "bound shares sum to {total}, bound is {}",
                self.shadow_bound
            ));
        }
    }

    /// Each pair of shares held by `k` and a preceding neighbor must sum to
    /// their current pairwise cost.
    fn check_pairs(&mut self, k: usize) {
        let s = self.params.s;
        let xk = self.agents[k].current();
        for &t in self.agents[k].preceding() {
            self.report.pair_checks += 1;
            let (Some(r), Some(c)) = (self.agents[t].current(), xk) else {
                self.report.violations.push(format!("pair ({t},{k}) checked while unassigned"));
                continue;
            };
            let m = self.inst.matrix(t, k).expect("neighbor").get(r, c);
            let sum = (self.agents[t].s_cpa()[k] + self.agents[k].s_cpa()[t]) % s;
            if sum != m % s {
                self.report
                    .violations
                    .push(format!("pair ({t},{k}) shares sum to {sum}, cost is {m}"));
            }
        }
    }

    fn compare(&mut self, k: usize) -> Result<bool, EngineError> {
        let inputs: Vec<CompareInput> = self.agents.iter().map(|a| CompareInput(a.compare_input())).collect();
        let outcome = self.backend.compare(&inputs)?;
        self.metrics.comparisons += 1;
        self.metrics.mpc_rounds += outcome.stats.rounds as u64;
        self.metrics.mpc_bits += outcome.stats.bits_sent;
        self.record_transcript(&outcome.transcript);
        self.comparisons.push(outcome.result);
        if self.cfg.check_invariants {
            self.check_pairs(k);
            self.check_cpa("compare");
            self.check_bound();
            let cost = self.inst.cost_of_indices(&self.current_indices());
            let expected = cost < self.shadow_bound;
            if expected != outcome.result {
                self.report.compare_mismatches += 1;
            }
            if k + 1 == self.agents.len() && expected {
                self.shadow_bound = cost;
                self.bounds.push(cost);
            }
        }
        Ok(outcome.result)
    }

    fn record_transcript(&mut self, transcript: &[TranscriptEntry]) {
        for e in transcript {
            let tag = mpc_tag(e.kind);
            let bytes = pack_bits(&e.bits);
            if self.cfg.capture_payloads {
                self.payloads.push(CapturedPayload {
                    step: self.net.trace().len() as u64,
                    from: e.from,
                    to: e.to,
                    tag: tag.to_string(),
                    kind: PayloadKind::MaskedBits,
                    bytes: bytes.clone(),
                });
            }
            self.net.record(e.from, e.to, tag, PayloadKind::MaskedBits, bytes.len());
        }
    }

    fn finish(self) -> Result<RunOutput, EngineError> {
        if let Some(a) = self.agents.iter().find(|a| !a.halted()) {
            return Err(EngineError::Protocol(format!("agent {} never completed", a.index())));
        }
        let indices = self.current_indices();
        if indices.iter().any(Option::is_none) {
            return Err(EngineError::Protocol("run ended without a full assignment".into()));
        }
        let assignment = self.inst.assignment_from_indices(&indices);
        let cost = self.inst.cost_of(&assignment)?;
        let mut metrics = self.metrics;
        metrics.paillier_ops = self.agents.iter().map(|a| a.counts().total()).sum();
        metrics.messages = self.net.sent();
        let trace = self.net.into_trace();
        metrics.bytes = trace
            .events()
            .iter()
            .filter(|e| e.kind != PayloadKind::MaskedBits)
            .map(|e| e.bytes as u64)
            .sum();
        metrics.new_optima = trace
            .events()
            .iter()
            .filter(|e| e.tag == "NEW_OPTIMUM_FOUND")
            .count() as u64
            / (self.agents.len() as u64 - 1);
        let model = self
            .cfg
            .cost_model
            .unwrap_or_else(|| CostModel::measured_comparison(self.agents.len()));
        metrics.sim_time_ms = simulated_time(
            &trace,
            WorkCounts {
                paillier_ops: metrics.paillier_ops,
                comparisons: metrics.comparisons,
            },
            &model,
        );
        let stats = SearchStats {
            comparisons: metrics.comparisons,
            nodes: metrics.comparisons,
            messages: metrics.messages,
            new_optima: metrics.new_optima,
        };
        Ok(RunOutput {
            result: SolveResult { assignment, cost, stats },
            metrics,
            trace,
            invariants: self.report,
            comparisons: self.comparisons,
            bounds: self.bounds,
            payloads: self.payloads,
            params: self.params,
        })
    }
}
