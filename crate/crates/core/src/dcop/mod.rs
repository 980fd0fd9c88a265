//! Problem model: agents, domains, binary cost matrices and the public
//! parameters every agent agrees on before the search starts.
//!
//! Agents and variables coincide (one variable per agent) and are indexed
//! `0..n` in the public agent order.

mod format;
mod generate;
mod params;

use std::collections::{BTreeMap, VecDeque};

pub use format::{parse_instance, serialize_instance, ParseError};
pub use generate::{gen_graph_coloring, gen_random, gen_scale_free, GenError, MAX_CONNECT_RETRIES};
pub use params::{public_params, PublicParams};

/// Upper limit on the number of agents an instance may declare.
pub const MAX_AGENTS: usize = 1 << 12;

/// A domain value. Domains are small lists of distinct integers.
pub type Value = i64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DcopError {
    #[error("an instance needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("instance declares {0} agents, limit is {MAX_AGENTS}")]
    TooManyAgents(usize),
    #[error("max constraint cost q must be at least 1")]
    ZeroQ,
    #[error("domain of agent {0} is empty")]
    EmptyDomain(usize),
    #[error("domain of agent {agent} repeats value {value}")]
    DuplicateValue { agent: usize, value: Value },
    #[error("constraint ({0},{1}) is not an ordered pair of distinct agents in range")]
    BadPair(usize, usize),
    #[error("constraint ({t},{k}) is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    Shape {
        t: usize,
        k: usize,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("constraint ({t},{k}) has cost {cost} above q={q}")]
    CostAboveQ { t: usize, k: usize, cost: u64, q: u64 },
    #[error("matrix data has {got} entries, expected {want}")]
    MatrixLen { got: usize, want: usize },
    #[error("assignment has {got} slots, instance has {want} agents")]
    AssignmentLen { got: usize, want: usize },
    #[error("value {value} is not in the domain of agent {agent}")]
    NotInDomain { agent: usize, value: Value },
    #[error("parameter overflow for n={n}, q={q}")]
    Overflow { n: usize, q: u64 },
}

/// Costs of one binary constraint. Row `r` is the `r`-th value of the
/// lower-indexed agent's domain, column `s` the `s`-th value of the other.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self, DcopError> {
        if data.len() != rows * cols {
            return Err(DcopError::MatrixLen {
                got: data.len(),
                want: rows * cols,
            });
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for s in 0..cols {
                data.push(f(r, s));
            }
        }
        CostMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, s: usize) -> u64 {
        self.data[r * self.cols + s]
    }

    /// Entries of column `s`, top to bottom.
    pub fn column(&self, s: usize) -> impl ExactSizeIterator<Item = u64> + '_ {
        (0..self.rows).map(move |r| self.get(r, s))
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn max_entry(&self) -> u64 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    pub fn entries(&self) -> &[u64] {
        &self.data
    }
}

/// A DCOP with binary constraints, one variable per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcopInstance {
    q: u64,
    domains: Vec<Vec<Value>>,
    constraints: BTreeMap<(usize, usize), CostMatrix>,
}

impl DcopInstance {
    /// Validates and builds an instance. Constraint keys must be `(t, k)`
    /// with `t < k`.
    pub fn new(
        q: u64,
        domains: Vec<Vec<Value>>,
        constraints: BTreeMap<(usize, usize), CostMatrix>,
    ) -> Result<Self, DcopError> {
        let n = domains.len();
        if n < 2 {
            return Err(DcopError::TooFewAgents(n));
        }
        if n > MAX_AGENTS {
            return Err(DcopError::TooManyAgents(n));
        }
        if q < 1 {
            return Err(DcopError::ZeroQ);
        }
        for (agent, dom) in domains.iter().enumerate() {
            if dom.is_empty() {
                return Err(DcopError::EmptyDomain(agent));
            }
            let mut seen = dom.clone();
            seen.sort_unstable();
            if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
                return Err(DcopError::DuplicateValue { agent, value: w[0] });
            }
        }
        for (&(t, k), m) in &constraints {
            if t >= k || k >= n {
                return Err(DcopError::BadPair(t, k));
            }
            let (want_rows, want_cols) = (domains[t].len(), domains[k].len());
            if m.rows != want_rows || m.cols != want_cols {
                return Err(DcopError::Shape {
                    t,
                    k,
                    rows: m.rows,
                    cols: m.cols,
                    want_rows,
                    want_cols,
                });
            }
            let cost = m.max_entry();
            if cost > q {
                return Err(DcopError::CostAboveQ { t, k, cost, q });
            }
        }
        Ok(DcopInstance {
            q,
            domains,
            constraints,
        })
    }

    pub fn n(&self) -> usize {
        self.domains.len()
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn domains(&self) -> &[Vec<Value>] {
        &self.domains
    }

    pub fn domain(&self, agent: usize) -> &[Value] {
        &self.domains[agent]
    }

    pub fn domain_size(&self, agent: usize) -> usize {
        self.domains[agent].len()
    }

    /// Position of `value` in the agent's domain (its public ordering).
    pub fn value_index(&self, agent: usize, value: Value) -> Option<usize> {
        self.domains[agent].iter().position(|&v| v == value)
    }

    pub fn constraints(&self) -> &BTreeMap<(usize, usize), CostMatrix> {
        &self.constraints
    }

    /// Matrix for the pair `(t, k)`, `t < k`.
    pub fn matrix(&self, t: usize, k: usize) -> Option<&CostMatrix> {
        self.constraints.get(&(t, k))
    }

    /// Whether agents `a` and `b` share a constraint, in either order.
    pub fn constrained(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.constraints.contains_key(&key)
    }

    /// Constrained agents preceding `k` in the order.
    pub fn preceding_neighbors(&self, k: usize) -> Vec<usize> {
        (0..k).filter(|&t| self.constraints.contains_key(&(t, k))).collect()
    }

    /// Constrained agents following `k` in the order.
    pub fn following_neighbors(&self, k: usize) -> Vec<usize> {
        (k + 1..self.n())
            .filter(|&t| self.constraints.contains_key(&(k, t)))
            .collect()
    }

    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let mut all = self.preceding_neighbors(k);
        all.extend(self.following_neighbors(k));
        all
    }

    pub fn edge_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_connected(&self) -> bool {
        is_connected(self.n(), self.constraints.keys().copied())
    }

    pub fn public_params(&self) -> Result<PublicParams, DcopError> {
        public_params(self.n(), self.q)
    }

    /// Number of full assignments, saturating at `u128::MAX`.
    pub fn search_space(&self) -> u128 {
        self.domains
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    /// Cost of a (partial) assignment: the sum of every constraint whose
    /// endpoints are both assigned.
    pub fn cost_of(&self, pa: &Assignment) -> Result<u64, DcopError> {
        if pa.values.len() != self.n() {
            return Err(DcopError::AssignmentLen {
                got: pa.values.len(),
                want: self.n(),
            });
        }
        let mut idx = Vec::with_capacity(self.n());
        for (agent, v) in pa.values.iter().enumerate() {
            idx.push(match v {
                Some(value) => Some(
                    self.value_index(agent, *value)
                        .ok_or(DcopError::NotInDomain { agent, value: *value })?,
                ),
                None => None,
            });
        }
        Ok(self.cost_of_indices(&idx))
    }

    /// Same as [`cost_of`](Self::cost_of) but over value indices, unchecked.
    pub fn cost_of_indices(&self, idx: &[Option<usize>]) -> u64 {
        self.constraints
            .iter()
            .filter_map(|(&(t, k), m)| Some(m.get(idx[t]?, idx[k]?)))
            .sum()
    }

    /// Converts value indices back into an assignment.
    pub fn assignment_from_indices(&self, idx: &[Option<usize>]) -> Assignment {
        Assignment {
            values: idx
                .iter()
                .enumerate()
                .map(|(a, i)| i.map(|i| self.domains[a][i]))
                .collect(),
        }
    }
}

pub(crate) fn is_connected(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// A partial or full assignment of values to variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<Option<Value>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment {
            values: vec![None; n],
        }
    }

    pub fn full(values: Vec<Value>) -> Self {
        Assignment {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn from_slots(values: Vec<Option<Value>>) -> Self {
        Assignment { values }
    }

    pub fn with(mut self, agent: usize, value: Value) -> Self {
        self.values[agent] = Some(value);
        self
    }

    pub fn set(&mut self, agent: usize, value: Option<Value>) {
        self.values[agent] = value;
    }

    pub fn get(&self, agent: usize) -> Option<Value> {
        self.values[agent]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn slots(&self) -> &[Option<Value>] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 0 - 1 - 2 chain with 2-value domains.
    pub(crate) fn chain3() -> DcopInstance {
        let mut cons = BTreeMap::new();
        cons.insert((0, 1), CostMatrix::new(2, 2, vec![1, 5, 7, 2]).unwrap());
        cons.insert((1, 2), CostMatrix::new(2, 2, vec![3, 0, 4, 9]).unwrap());
        DcopInstance::new(10, vec![vec![10, 20], vec![0, 1], vec![-1, 1]], cons).unwrap()
    }

    #[test]
    fn empty_and_single_assignments_cost_nothing() {
        let inst = chain3();
        assert_eq!(inst.cost_of(&Assignment::empty(3)).unwrap(), 0);
        for agent in 0..3 {
            for &v in inst.domain(agent) {
                let pa = Assignment::empty(3).with(agent, v);
                assert_eq!(inst.cost_of(&pa).unwrap(), 0);
            }
        }
    }

    #[test]
    fn full_chain_cost_sums_both_entries() {
        let inst = chain3();
        // x0=20 (row 1), x1=1 (col 1 / row 1), x2=-1 (col 0): M01(1,1)=2, M12(1,0)=4
        let pa = Assignment::full(vec![20, 1, -1]);
        assert_eq!(inst.cost_of(&pa).unwrap(), 6);
        let pa = Assignment::full(vec![10, 0, 1]);
        assert_eq!(inst.cost_of(&pa).unwrap(), 1);
    }

    #[test]
    fn out_of_domain_value_rejected() {
        let inst = chain3();
        let pa = Assignment::empty(3).with(1, 7);
        assert_eq!(
            inst.cost_of(&pa),
            Err(DcopError::NotInDomain { agent: 1, value: 7 })
        );
    }

    #[test]
    fn invariants_enforced_on_construction() {
        let doms = vec![vec![0, 1], vec![0, 1]];
        let mut cons = BTreeMap::new();
        cons.insert((0, 1), CostMatrix::new(2, 2, vec![0, 1, 2, 11]).unwrap());
        assert!(matches!(
            DcopInstance::new(10, doms.clone(), cons),
            Err(DcopError::CostAboveQ { cost: 11, .. })
        ));
        let mut cons = BTreeMap::new();
        cons.insert((0, 1), CostMatrix::new(1, 2, vec![0, 1]).unwrap());
        assert!(matches!(
            DcopInstance::new(10, doms.clone(), cons),
            Err(DcopError::Shape { .. })
        ));
        let mut cons = BTreeMap::new();
        cons.insert((1, 1), CostMatrix::new(2, 2, vec![0; 4]).unwrap());
        assert!(matches!(
            DcopInstance::new(10, doms.clone(), cons),
            Err(DcopError::BadPair(1, 1))
        ));
        assert!(matches!(
            DcopInstance::new(10, vec![vec![0]], BTreeMap::new()),
            Err(DcopError::TooFewAgents(1))
        ));
        assert!(matches!(
            DcopInstance::new(10, vec![vec![0, 0], vec![1]], BTreeMap::new()),
            Err(DcopError::DuplicateValue { agent: 0, value: 0 })
        ));
    }

    #[test]
    fn neighbor_sets() {
        let inst = chain3();
        assert_eq!(inst.preceding_neighbors(1), vec![0]);
        assert_eq!(inst.following_neighbors(1), vec![2]);
        assert!(inst.preceding_neighbors(0).is_empty());
        assert!(inst.constrained(2, 1));
        assert!(!inst.constrained(0, 2));
        assert!(inst.is_connected());
    }
}
