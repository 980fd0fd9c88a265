//! Ground-truth solvers: exhaustive enumeration and plaintext synchronous
//! branch and bound.

use crate::dcop::{Assignment, DcopInstance};
use crate::ordering::{OrderStream, ValueOrdering};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Bound comparisons performed.
    pub comparisons: u64,
    /// Value assignments made (search-tree nodes expanded).
    pub nodes: u64,
    /// Protocol messages an agent-based run would exchange.
    pub messages: u64,
    /// Strict bound improvements.
    pub new_optima: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub assignment: Assignment,
    pub cost: u64,
    pub stats: SearchStats,
}

/// Exhaustive search. Ties go to the lexicographically smallest tuple of
/// value indices.
pub fn brute_force(inst: &DcopInstance) -> SolveResult {
    let n = inst.n();
    let sizes: Vec<usize> = inst.domains().iter().map(Vec::len).collect();
    let mut idx = vec![0usize; n];
    let mut slots: Vec<Option<usize>> = vec![Some(0); n];
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut stats = SearchStats::default();
    loop {
        for (s, &i) in slots.iter_mut().zip(&idx) {
            *s = Some(i);
        }
        let cost = inst.cost_of_indices(&slots);
        stats.nodes += 1;
        stats.comparisons += 1;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, idx.clone()));
            stats.new_optima += 1;
        }
        // odometer, last agent fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                let (cost, tuple) = best.expect("non-empty search space");
                let slots: Vec<Option<usize>> = tuple.into_iter().map(Some).collect();
                return SolveResult {
                    assignment: inst.assignment_from_indices(&slots),
                    cost,
                    stats,
                };
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Options for [`plaintext_syncbb`].
#[derive(Debug, Clone, Default)]
pub struct SyncBbConfig {
    /// Agent order as a permutation of `0..n`; `None` keeps index order.
    pub agent_order: Option<Vec<usize>>,
    pub values: ValueOrdering,
    /// Seed of the per-agent value-ordering streams.
    pub seed: u64,
}

/// Outcome of a plaintext branch-and-bound run, with the per-call record
/// of bound comparisons.
#[derive(Debug, Clone)]
pub struct SyncBbRun {
    pub result: SolveResult,
    /// Outcome of every bound comparison, in call order.
    pub comparisons: Vec<bool>,
    /// Upper bound after initialisation and after each improvement.
    pub bounds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("agent order is not a permutation of 0..{0}")]
    BadOrder(usize),
}

/// Synchronous branch and bound over the CPA, in the clear. Mirrors the
/// private protocol's control flow step for step: the bound starts at
/// `q_inf`, a CPA is only extended while its cost is strictly below the
/// bound, and a full assignment replaces the bound only on strict
/// improvement.
pub fn plaintext_syncbb(inst: &DcopInstance, cfg: &SyncBbConfig) -> Result<SyncBbRun, BaselineError> {
    let n = inst.n();
    let order: Vec<usize> = match &cfg.agent_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(BaselineError::BadOrder(n));
            }
            o.clone()
        }
        None => (0..n).collect(),
    };
    // Position i in the search holds original agent order[i].
    let sizes: Vec<usize> = order.iter().map(|&a| inst.domain_size(a)).collect();
    let preceding: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..i).filter(|&j| inst.constrained(order[j], order[i])).collect())
        .collect();
    let pair_cost = |j: usize, vj: usize, i: usize, vi: usize| -> u64 {
        let (a, b) = (order[j], order[i]);
        if a < b {
            inst.matrix(a, b).expect("constrained").get(vj, vi)
        } else {
            inst.matrix(b, a).expect("constrained").get(vi, vj)
        }
    };

    let q_inf = inst.public_params().expect("validated instance").q_inf;
    let mut streams: Vec<OrderStream> = (0..n)
        .map(|i| OrderStream::new(cfg.values, cfg.seed, i))
        .collect();
    let mut traversal: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pointer = vec![0usize; n];
    let mut x: Vec<Option<usize>> = vec![None; n];
    let mut prefix_cost = vec![0u64; n];
    let mut bound = q_inf;
    let mut best: Option<Vec<Option<usize>>> = None;
    let mut stats = SearchStats::default();
    let mut log = Vec::new();
    let mut bounds = vec![bound];

    let mut k = 0usize;
    loop {
        // assign_CPA at position k
        if pointer[k] == 0 {
            traversal[k] = streams[k].next_order(sizes[k]);
        }
        pointer[k] += 1;
        if pointer[k] > sizes[k] {
            x[k] = None;
            if k == 0 {
                stats.messages += n as u64 - 1;
                break;
            }
            stats.messages += 1 + preceding[k].len() as u64;
            k -= 1;
            continue;
        }
        let v = traversal[k][pointer[k] - 1];
        x[k] = Some(v);
        stats.nodes += 1;
        let base = if k == 0 { 0 } else { prefix_cost[k - 1] };
        prefix_cost[k] = base
            + preceding[k]
                .iter()
                .map(|&j| pair_cost(j, x[j].expect("prefix assigned"), k, v))
                .sum::<u64>();
        stats.comparisons += 1;
        let below = prefix_cost[k] < bound;
        log.push(below);
        if k == n - 1 {
            if below {
                bound = prefix_cost[k];
                bounds.push(bound);
                best = Some(x.clone());
                stats.new_optima += 1;
                stats.messages += n as u64 - 1;
            }
        } else if below {
            stats.messages += 1;
            k += 1;
            pointer[k] = 0;
        }
    }

    let best = best.expect("q_inf exceeds every full assignment cost");
    let mut slots = vec![None; n];
    for (i, &a) in order.iter().enumerate() {
        slots[a] = best[i];
    }
    Ok(SyncBbRun {
        result: SolveResult {
            assignment: inst.assignment_from_indices(&slots),
            cost: bound,
            stats,
        },
        comparisons: log,
        bounds,
    })
}
