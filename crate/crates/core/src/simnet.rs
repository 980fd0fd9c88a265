//! In-process simulated network: FIFO mailboxes, broadcast, a delivery
//! trace and a cost model for simulated time.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::str::FromStr;

pub type AgentId = usize;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("agent {0} is not registered")]
    Unregistered(AgentId),
    #[error("trace line {line}: {msg}")]
    TraceParse { line: usize, msg: String },
    #[error("cost model line {line}: {msg}")]
    ModelParse { line: usize, msg: String },
}

/// What a payload carries, as seen by an outside observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PayloadKind {
    /// No payload beyond the tag.
    Command,
    /// An agent index.
    Index,
    /// One or more Paillier ciphertexts.
    Ciphertext,
    /// A Paillier public key.
    PublicKey,
    /// XOR-masked bits of the comparison protocol.
    MaskedBits,
}

impl PayloadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PayloadKind::Command => "command",
            PayloadKind::Index => "index",
            PayloadKind::Ciphertext => "ciphertext",
            PayloadKind::PublicKey => "public-key",
            PayloadKind::MaskedBits => "masked-bits",
        }
    }
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PayloadKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "command" => PayloadKind::Command,
            "index" => PayloadKind::Index,
            "ciphertext" => PayloadKind::Ciphertext,
            "public-key" => PayloadKind::PublicKey,
            "masked-bits" => PayloadKind::MaskedBits,
            _ => return Err(()),
        })
    }
}

/// Messages carried by the network describe themselves for the trace.
pub trait Payload {
    fn tag(&self) -> &'static str;
    fn kind(&self) -> PayloadKind;
    fn byte_len(&self) -> usize;
}

#[derive(Debug, Clone)]
pub struct Envelope<M> {
    pub from: AgentId,
    pub to: AgentId,
    pub msg: M,
}

/// One delivered message. `to == None` marks a broadcast recorded once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub step: u64,
    pub from: AgentId,
    pub to: Option<AgentId>,
    pub tag: String,
    pub kind: PayloadKind,
    pub bytes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(&mut self, ev: TraceEvent) {
        self.events.push(ev);
    }

    pub fn total_bytes(&self) -> u64 {
        self.events.iter().map(|e| e.bytes as u64).sum()
    }

    /// Events seen by a coalition: sent or received by one of its members.
    pub fn restricted_to(&self, coalition: &[AgentId]) -> Trace {
        Trace {
            events: self
                .events
                .iter()
                .filter(|e| {
                    coalition.contains(&e.from) || e.to.is_none_or(|t| coalition.contains(&t))
                })
                .cloned()
                .collect(),
        }
    }

    /// `step | sender -> receiver | tag | payload-kind | payload-bytes`,
    /// one event per line; `*` as receiver marks a broadcast.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let to = e.to.map_or("*".to_string(), |t| t.to_string());
            let _ = writeln!(out, "{} | {} -> {} | {} | {} | {}", e.step, e.from, to, e.tag, e.kind, e.bytes);
        }
        out
    }
}

pub fn parse_trace(text: &str) -> Result<Trace, NetError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| NetError::TraceParse {
            line: ln,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let [step, route, tag, kind, bytes] = fields.as_slice() else {
            return Err(err("expected 5 '|'-separated fields"));
        };
        let (from, to) = route.split_once("->").ok_or_else(|| err("route needs 'a -> b'"))?;
        let from: AgentId = from.trim().parse().map_err(|_| err("bad sender"))?;
        let to = match to.trim() {
            "*" => None,
            t => Some(t.parse().map_err(|_| err("bad receiver"))?),
        };
        if tag.is_empty() || tag.contains(char::is_whitespace) {
            return Err(err("bad tag"));
        }
        events.push(TraceEvent {
            step: step.parse().map_err(|_| err("bad step"))?,
            from,
            to,
            tag: tag.to_string(),
            kind: kind.parse().map_err(|_| err("unknown payload kind"))?,
            bytes: bytes.parse().map_err(|_| err("bad byte count"))?,
        });
    }
    Ok(Trace { events })
}

/// Single-threaded network with one global FIFO queue, which keeps every
/// sender-receiver channel in send order.
#[derive(Debug)]
pub struct SimNet<M> {
    agents: usize,
    queue: VecDeque<Envelope<M>>,
    trace: Trace,
    step: u64,
    sent: u64,
}

impl<M: Payload + Clone> SimNet<M> {
    pub fn new(agents: usize) -> Self {
        SimNet {
            agents,
            queue: VecDeque::new(),
            trace: Trace::default(),
            step: 0,
            sent: 0,
        }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn send(&mut self, from: AgentId, to: AgentId, msg: M) -> Result<(), NetError> {
        for a in [from, to] {
            if a >= self.agents {
                return Err(NetError::Unregistered(a));
            }
        }
        self.sent += 1;
        self.queue.push_back(Envelope { from, to, msg });
        Ok(())
    }

    /// Sends a copy to every other agent.
    pub fn broadcast(&mut self, from: AgentId, msg: M) -> Result<(), NetError> {
        if from >= self.agents {
            return Err(NetError::Unregistered(from));
        }
        for to in (0..self.agents).filter(|&t| t != from) {
            self.send(from, to, msg.clone())?;
        }
        Ok(())
    }

    /// Pops the oldest pending message and records it in the trace.
    pub fn deliver_next(&mut self) -> Option<Envelope<M>> {
        let env = self.queue.pop_front()?;
        self.trace.push(TraceEvent {
            step: self.step,
            from: env.from,
            to: Some(env.to),
            tag: env.msg.tag().to_string(),
            kind: env.msg.kind(),
            bytes: env.msg.byte_len(),
        });
        self.step += 1;
        Some(env)
    }

    /// Records traffic that bypasses the mailboxes (sub-protocol rounds).
    pub fn record(&mut self, from: AgentId, to: Option<AgentId>, tag: &str, kind: PayloadKind, bytes: usize) {
        self.trace.push(TraceEvent {
            step: self.step,
            from,
            to,
            tag: tag.to_string(),
            kind,
            bytes,
        });
        self.step += 1;
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn peek(&self) -> Option<&Envelope<M>> {
        self.queue.front()
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

/// Per-event costs, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostModel {
    pub message_latency_ms: f64,
    pub byte_latency_ms: f64,
    pub paillier_op_ms: f64,
    pub comparison_offline_ms: f64,
    pub comparison_online_ms: f64,
}

/// Average comparison cost (offline, online) in ms measured for the
/// honest-majority garbling backend over LAN, per agent count.
const MEASURED_COMPARISON_MS: [(usize, f64, f64); 8] = [
    (5, 6.7, 0.51),
    (7, 12.4, 0.85),
    (9, 20.2, 1.3),
    (11, 32.3, 1.6),
    (13, 47.2, 2.4),
    (15, 72.0, 2.5),
    (17, 94.3, 2.7),
    (19, 135.3, 3.6),
];

impl CostModel {
    /// Comparison costs taken from published LAN measurements, linearly
    /// interpolated (and extrapolated) in `n`. Message and crypto costs
    /// are left at zero.
    pub fn measured_comparison(n: usize) -> Self {
        let t = &MEASURED_COMPARISON_MS;
        let seg = t.windows(2).find(|w| n <= w[1].0).unwrap_or(&t[t.len() - 2..]);
        let (n0, off0, on0) = seg[0];
        let (n1, off1, on1) = seg[1];
        let f = (n as f64 - n0 as f64) / (n1 - n0) as f64;
        CostModel {
            comparison_offline_ms: (off0 + f * (off1 - off0)).max(0.0),
            comparison_online_ms: (on0 + f * (on1 - on0)).max(0.0),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.message_latency_ms,
            self.byte_latency_ms,
            self.paillier_op_ms,
            self.comparison_offline_ms,
            self.comparison_online_ms,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err("costs must be finite and non-negative".into())
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "message_latency_ms={}\nbyte_latency_ms={}\npaillier_op_ms={}\ncomparison_offline_ms={}\ncomparison_online_ms={}\n",
            self.message_latency_ms,
            self.byte_latency_ms,
            self.paillier_op_ms,
            self.comparison_offline_ms,
            self.comparison_online_ms
        )
    }
}

/// Parses `key=value` lines; unknown keys and negative costs are errors,
/// missing keys default to zero.
pub fn parse_cost_model(text: &str) -> Result<CostModel, NetError> {
    let mut m = CostModel::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| NetError::ModelParse { line: ln, msg };
        let (k, v) = line.split_once('=').ok_or_else(|| err("expected key=value".into()))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| err(format!("bad number '{}'", v.trim())))?;
        if !v.is_finite() || v < 0.0 {
            return Err(err(format!("cost {v} must be finite and non-negative")));
        }
        let slot = match k.trim() {
            "message_latency_ms" => &mut m.message_latency_ms,
            "byte_latency_ms" => &mut m.byte_latency_ms,
            "paillier_op_ms" => &mut m.paillier_op_ms,
            "comparison_offline_ms" => &mut m.comparison_offline_ms,
            "comparison_online_ms" => &mut m.comparison_online_ms,
            other => return Err(err(format!("unknown key '{other}'"))),
        };
        *slot = v;
    }
    Ok(m)
}

/// Work performed outside the mailboxes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkCounts {
    pub paillier_ops: u64,
    pub comparisons: u64,
}

/// Model-based duration of a run, in ms. Comparison-protocol traffic is
/// covered by the per-comparison cost and not charged per message.
pub fn simulated_time(trace: &Trace, work: WorkCounts, model: &CostModel) -> f64 {
    let (msgs, bytes) = trace
        .events()
        .iter()
        .filter(|e| e.kind != PayloadKind::MaskedBits)
        .fold((0u64, 0u64), |(m, b), e| (m + 1, b + e.bytes as u64));
    msgs as f64 * model.message_latency_ms
        + bytes as f64 * model.byte_latency_ms
        + work.paillier_ops as f64 * model.paillier_op_ms
        + work.comparisons as f64 * (model.comparison_offline_ms + model.comparison_online_ms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Ping(u32);

    impl Payload for Ping {
        fn tag(&self) -> &'static str {
            "PING"
        }
        fn kind(&self) -> PayloadKind {
            PayloadKind::Index
        }
        fn byte_len(&self) -> usize {
            4
        }
    }

    #[test]
    fn fifo_per_channel() {
        let mut net = SimNet::new(3);
        net.send(0, 1, Ping(1)).unwrap();
        net.send(2, 1, Ping(9)).unwrap();
        net.send(0, 1, Ping(2)).unwrap();
        let got: Vec<u32> = std::iter::from_fn(|| net.deliver_next())
            .filter(|e| e.from == 0)
            .map(|e| e.msg.0)
            .collect();
        assert_eq!(got, vec![1, 2]);
        assert_eq!(net.trace().len(), 3);
        assert_eq!(net.sent(), 3);
    }

    #[test]
    fn broadcast_reaches_everyone_else() {
        let mut net = SimNet::new(5);
        net.broadcast(2, Ping(0)).unwrap();
        let to: Vec<AgentId> = std::iter::from_fn(|| net.deliver_next()).map(|e| e.to).collect();
        assert_eq!(to, vec![0, 1, 3, 4]);
    }

    #[test]
    fn empty_and_unregistered() {
        let mut net: SimNet<Ping> = SimNet::new(2);
        assert!(net.deliver_next().is_none());
        assert_eq!(net.send(0, 2, Ping(0)), Err(NetError::Unregistered(2)));
        assert_eq!(net.broadcast(5, Ping(0)), Err(NetError::Unregistered(5)));
    }

    #[test]
    fn trace_text_round_trip() {
        let mut net = SimNet::new(3);
        net.send(0, 2, Ping(1)).unwrap();
        net.deliver_next();
        net.record(1, None, "MPC_OPEN", PayloadKind::MaskedBits, 3);
        let text = net.trace().to_text();
        assert_eq!(text, "0 | 0 -> 2 | PING | index | 4\n1 | 1 -> * | MPC_OPEN | masked-bits | 3\n");
        assert_eq!(&parse_trace(&text).unwrap(), net.trace());
        assert!(parse_trace("0 | 0 -> 2 | PING | index").is_err());
        assert!(parse_trace("0 | 0 > 2 | PING | index | 4").is_err());
        assert!(parse_trace("0 | 0 -> 2 | PING | secret | 4").is_err());
        assert_eq!(net.trace().restricted_to(&[2]).len(), 2);
        assert_eq!(net.trace().restricted_to(&[0]).len(), 2);
    }

    fn sample_trace() -> Trace {
        let mut net = SimNet::new(3);
        for i in 0..4 {
            net.send(0, 1, Ping(i)).unwrap();
            net.deliver_next();
        }
        net.into_trace()
    }

    #[test]
    fn zero_model_costs_nothing() {
        let work = WorkCounts { paillier_ops: 10, comparisons: 7 };
        assert_eq!(simulated_time(&sample_trace(), work, &CostModel::default()), 0.0);
    }

    #[test]
    fn comparison_cost_is_linear() {
        let work = WorkCounts { paillier_ops: 10, comparisons: 7 };
        let base = CostModel {
            message_latency_ms: 0.1,
            byte_latency_ms: 0.01,
            paillier_op_ms: 0.5,
            comparison_offline_ms: 2.0,
            comparison_online_ms: 1.0,
        };
        let t0 = simulated_time(&sample_trace(), work, &base);
        let doubled = CostModel { comparison_offline_ms: 4.0, comparison_online_ms: 2.0, ..base };
        let t1 = simulated_time(&sample_trace(), work, &doubled);
        assert!((t1 - t0 - 7.0 * 3.0).abs() < 1e-9);
        assert!((t0 - (4.0 * 0.1 + 16.0 * 0.01 + 5.0 + 21.0)).abs() < 1e-9);
    }

    #[test]
    fn measured_model_at_five_agents() {
        let m = CostModel::measured_comparison(5);
        assert!((m.comparison_offline_ms + m.comparison_online_ms - 7.21).abs() < 1e-9);
        let m6 = CostModel::measured_comparison(6);
        assert!((m6.comparison_offline_ms - 9.55).abs() < 1e-9);
        let m21 = CostModel::measured_comparison(21);
        assert!(m21.comparison_offline_ms > 135.3);
    }

    #[test]
    fn cost_model_text() {
        let m = CostModel {
            message_latency_ms: 0.25,
            paillier_op_ms: 1.5,
            ..Default::default()
        };
        assert_eq!(parse_cost_model(&m.to_text()).unwrap(), m);
        assert_eq!(parse_cost_model("# nothing\n\n").unwrap(), CostModel::default());
        assert!(parse_cost_model("paillier_op_ms=-1").is_err());
        assert!(parse_cost_model("foo=1").is_err());
        assert!(parse_cost_model("paillier_op_ms").is_err());
        assert!(parse_cost_model("paillier_op_ms=NaN").is_err());
    }
}
