//! Leakage audit of protocol transcripts.
//!
//! [`audit_trace`] checks what an observer of the trace metadata sees:
//! every message must carry one of the allowed payload classes with a
//! size consistent with its tag. [`audit_payloads`] inspects captured
//! payload bytes: indices must be the sender's own index and ciphertexts
//! must be full-width group elements, never small integers.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

use crate::crypto::MIN_KEY_BITS;
use crate::dcop::{CostMatrix, DcopError, DcopInstance, PublicParams};
use crate::engine::{Agent, AgentSetup, CapturedPayload, EngineError, Message, INDEX_BYTES};
use crate::ordering::ValueOrdering;
use crate::simnet::{AgentId, PayloadKind, Trace};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub events: usize,
    pub by_kind: BTreeMap<String, usize>,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn count(&mut self, kind: PayloadKind) {
        self.events += 1;
        *self.by_kind.entry(kind.as_str().to_string()).or_default() += 1;
    }

    pub fn summary(&self) -> String {
        let kinds: Vec<String> = self.by_kind.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "{} events ({}), {} violations",
            self.events,
            kinds.join(" "),
            self.violations.len()
        )
    }
}

/// Payload class each protocol tag must carry.
pub fn expected_kind(tag: &str) -> Option<PayloadKind> {
    Some(match tag {
        "CPA_MSG" | "BACKTRACK_MSG" | "NEW_OPTIMUM_FOUND" | "COMPLETE" => PayloadKind::Command,
        "ZERO_SHARE_MSG" => PayloadKind::Index,
        "Z_VECTOR" | "Y_VALUE" => PayloadKind::Ciphertext,
        "PUBKEY" => PayloadKind::PublicKey,
        "MPC_INPUT" | "MPC_OPEN" | "MPC_OUTPUT" => PayloadKind::MaskedBits,
        _ => return None,
    })
}

/// Smallest serialized ciphertext: an element of `Z_(n^2)` for the
/// smallest accepted key.
const MIN_CIPHERTEXT_BYTES: usize = 2 * MIN_KEY_BITS / 8 - 1;

/// Structural checks on the events visible to `coalition` (all events
/// when `None`).
pub fn audit_trace(trace: &Trace, coalition: Option<&[AgentId]>) -> AuditReport {
    let view = match coalition {
        Some(c) => trace.restricted_to(c),
        None => trace.clone(),
    };
    let mut report = AuditReport::default();
    // ciphertext width of each agent's key, learned from PUBKEY sizes
    let mut width: HashMap<AgentId, usize> = HashMap::new();
    for e in trace.events() {
        if e.tag == "PUBKEY" {
            width.insert(e.from, 2 * e.bytes);
        }
    }
    for e in view.events() {
        report.count(e.kind);
        let at = format!("step {} ({} -> {:?}, {})", e.step, e.from, e.to, e.tag);
        let Some(kind) = expected_kind(&e.tag) else {
            report.violations.push(format!("{at}: unknown tag"));
            continue;
        };
        if kind != e.kind {
            report
                .violations
                .push(format!("{at}: carries {} instead of {}", e.kind.as_str(), kind.as_str()));
            continue;
        }
        let ok = match kind {
            PayloadKind::Command => e.bytes == 0,
            PayloadKind::Index => e.bytes == INDEX_BYTES,
            PayloadKind::PublicKey => e.bytes * 8 >= MIN_KEY_BITS,
            PayloadKind::MaskedBits => true,
            PayloadKind::Ciphertext => {
                let owner = if e.tag == "Y_VALUE" { e.to } else { Some(e.from) };
                match owner.and_then(|o| width.get(&o)) {
                    Some(&w) => e.bytes > 0 && e.bytes % w == 0 && (e.tag == "Z_VECTOR" || e.bytes == w),
                    None => e.bytes >= MIN_CIPHERTEXT_BYTES,
                }
            }
        };
        if !ok {
            report.violations.push(format!("{at}: {} payload bytes", e.bytes));
        }
    }
    report
}

/// Content checks on captured payloads visible to `coalition`.
pub fn audit_payloads(
    payloads: &[CapturedPayload],
    params: PublicParams,
    coalition: Option<&[AgentId]>,
) -> AuditReport {
    let mut report = AuditReport::default();
    let keys: HashMap<AgentId, BigUint> = payloads
        .iter()
        .filter(|p| p.kind == PayloadKind::PublicKey)
        .map(|p| (p.from, BigUint::from_bytes_be(&p.bytes)))
        .collect();
    let s = BigUint::from(params.s);
    let visible = |p: &CapturedPayload| match coalition {
        None => true,
        Some(c) => c.contains(&p.from) || p.to.is_none_or(|t| c.contains(&t)),
    };
    for p in payloads.iter().filter(|p| visible(p)) {
        report.count(p.kind);
        let at = format!("step {} ({} -> {:?}, {})", p.step, p.from, p.to, p.tag);
        if expected_kind(&p.tag) != Some(p.kind) {
            report.violations.push(format!("{at}: unexpected payload class"));
            continue;
        }
        match p.kind {
            PayloadKind::Command => {
                if !p.bytes.is_empty() {
                    report.violations.push(format!("{at}: command with a payload"));
                }
            }
            PayloadKind::Index => {
                let idx = <[u8; INDEX_BYTES]>::try_from(p.bytes.as_slice()).map(u32::from_be_bytes);
                if idx.ok() != Some(p.from as u32) {
                    report.violations.push(format!("{at}: index payload is not the sender index"));
                }
            }
            PayloadKind::PublicKey => {
                let n = BigUint::from_bytes_be(&p.bytes);
                if n.bits() < MIN_KEY_BITS as u64 || n.is_even() || n <= &s * &s {
                    report.violations.push(format!("{at}: malformed public key"));
                }
            }
            PayloadKind::MaskedBits => {}
            PayloadKind::Ciphertext => {
                let owner = if p.tag == "Y_VALUE" { p.to } else { Some(p.from) };
                let Some(n) = owner.and_then(|o| keys.get(&o)) else {
                    report.violations.push(format!("{at}: ciphertext under an unknown key"));
                    continue;
                };
                if let Err(msg) = check_ciphertexts(&p.bytes, n) {
                    report.violations.push(format!("{at}: {msg}"));
                }
            }
        }
    }
    report
}

/// Every chunk must be a unit of `Z_(n^2)` above `n`, so that no plaintext
/// of the scheme (and in particular no cost, value or share) sits in it.
fn check_ciphertexts(bytes: &[u8], n: &BigUint) -> Result<(), String> {
    let n_sq = n * n;
    let width = (n_sq.bits() as usize).div_ceil(8);
    if bytes.is_empty() || bytes.len() % width != 0 {
        return Err(format!("{} bytes is not a whole number of {width}-byte ciphertexts", bytes.len()));
    }
    for chunk in bytes.chunks(width) {
        let v = BigUint::from_bytes_be(chunk);
        if v <= *n || v >= n_sq {
            return Err("ciphertext outside (n, n^2)".into());
        }
        if !v.gcd(n).is_one() {
            return Err("ciphertext not a unit".into());
        }
    }
    Ok(())
}

/// Replays the share update of a two-agent instance `count` times with
/// the same pair of values and returns the share the first agent obtains
/// by decryption each time, together with the fixed plaintext cost.
///
/// The second agent has a single value, so every update it performs
/// (one per forward pass) blinds the same matrix entry.
pub fn sample_transmitted_shares(
    q: u64,
    first_domain: usize,
    count: usize,
    seed: u64,
    key_bits: usize,
) -> Result<(PublicParams, u64, Vec<u64>), EngineError> {
    let first: Vec<i64> = (0..first_domain as i64).collect();
    let matrix = CostMatrix::from_fn(first_domain, 1, |r, _| (r as u64 * 7 + 1) % (q + 1));
    let inst = DcopInstance::new(q, vec![first, vec![0]], [((0, 1), matrix)].into_iter().collect())?;
    let params = inst.public_params()?;
    let setup = AgentSetup {
        ordering: ValueOrdering::Natural,
        ordering_seed: seed,
        crypto_seed: seed,
        key_bits,
    };
    let mut a0 = Agent::new(&inst, 0, &setup)?;
    let mut a1 = Agent::new(&inst, 1, &setup)?;
    let mut to_a1 = a0.setup_messages();
    to_a1.extend(a0.init()?);
    for e in to_a1 {
        if let crate::engine::Effect::Send(1, m) = e {
            a1.handle(0, m)?;
        }
    }
    let r = a0.current().ok_or_else(|| EngineError::Protocol("first agent unassigned".into()))?;
    let plaintext = inst.matrix(0, 1).ok_or(DcopError::BadPair(0, 1))?.get(r, 0);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        for e in a1.handle(0, Message::Cpa)? {
            if let crate::engine::Effect::Send(0, m @ Message::YValue { .. }) = e {
                a0.handle(1, m)?;
                samples.push(a0.s_cpa()[1]);
            }
        }
        // a failed comparison exhausts the single value and hands back the torch
        for e in a1.on_compare_result(false)? {
            if let crate::engine::Effect::Send(0, m @ Message::ZeroShare(_)) = e {
                a0.handle(1, m)?;
            }
        }
    }
    Ok((params, plaintext, samples))
}

/// Pearson statistic of `samples` against the uniform distribution on
/// `Z_s`, with `s - 1` degrees of freedom.
pub fn chi_square_uniform(samples: &[u64], s: u64) -> f64 {
    let mut counts = vec![0u64; s as usize];
    for &x in samples {
        counts[x as usize] += 1;
    }
    let expected = samples.len() as f64 / s as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::TEST_KEY_BITS;
    use crate::dcop::gen_random;
    use crate::engine::{run, EngineConfig};
    use crate::simnet::parse_trace;

    fn clean_run() -> crate::engine::RunOutput {
        let inst = gen_random(4, 2, 0.8, 10, 1).unwrap();
        let cfg = EngineConfig {
            key_bits: TEST_KEY_BITS,
            capture_payloads: true,
            backend: crate::engine::BackendKind::Mpc,
            record_mpc: true,
            ..Default::default()
        };
        run(&inst, &cfg).unwrap()
    }

    #[test]
    fn honest_run_passes() {
        let out = clean_run();
        let t = audit_trace(&out.trace, None);
        assert!(t.passed(), "{:?}", t.violations);
        assert_eq!(t.events, out.trace.len());
        let p = audit_payloads(&out.payloads, out.params, Some(&[1, 2]));
        assert!(p.passed(), "{:?}", p.violations);
        assert!(p.by_kind["ciphertext"] > 0 && p.by_kind["masked-bits"] > 0);
        // the text form audits the same
        let reparsed = parse_trace(&out.trace.to_text()).unwrap();
        assert!(audit_trace(&reparsed, Some(&[0, 3])).passed());
    }

    #[test]
    fn planted_leaks_are_caught() {
        let out = clean_run();
        let mut payloads = out.payloads.clone();
        let y = payloads.iter_mut().find(|p| p.tag == "Y_VALUE").unwrap();
        // a cost in the clear, padded to ciphertext width
        let w = y.bytes.len();
        y.bytes = vec![0; w];
        y.bytes[w - 1] = 42;
        let z = payloads.iter_mut().find(|p| p.tag == "ZERO_SHARE_MSG").unwrap();
        z.bytes = 3u32.to_be_bytes().to_vec();
        z.from = 1;
        let cmd = payloads.iter_mut().find(|p| p.tag == "CPA_MSG").unwrap();
        cmd.bytes = vec![5];
        let report = audit_payloads(&payloads, out.params, None);
        assert_eq!(report.violations.len(), 3, "{:?}", report.violations);

        let mut trace = Trace::default();
        for e in out.trace.events() {
            let mut e = e.clone();
            if e.tag == "CPA_MSG" {
                e.bytes = 2;
            }
            trace.push(e);
        }
        assert!(!audit_trace(&trace, None).passed());
    }

    #[test]
    fn samples_are_shares_of_fixed_cost() {
        let (params, m, xs) = sample_transmitted_shares(3, 2, 50, 4, TEST_KEY_BITS).unwrap();
        assert_eq!(params.s, 16);
        assert_eq!(xs.len(), 50);
        assert!(m <= 3);
        assert!(xs.iter().all(|&x| x < params.s));
        let distinct: std::collections::HashSet<_> = xs.iter().collect();
        assert!(distinct.len() > 4);
    }

    #[test]
    fn chi_square_statistic() {
        assert_eq!(chi_square_uniform(&[0, 1, 2, 3], 4), 0.0);
        assert_eq!(chi_square_uniform(&[0, 0, 0, 0], 4), 12.0);
    }
}
