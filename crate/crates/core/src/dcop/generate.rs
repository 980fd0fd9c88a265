//! Seeded benchmark generators: unstructured random DCOPs, graph coloring
//! with private diagonal costs, and Barabási-Albert scale-free networks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_connected, CostMatrix, DcopError, DcopInstance, Value};

/// Graphs drawn before a density-based generator gives up on connectivity.
pub const MAX_CONNECT_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    Invalid(String),
    #[error("no connected graph after {0} attempts; density too low")]
    Disconnected(usize),
    #[error(transparent)]
    Dcop(#[from] DcopError),
}

fn check_common(n: usize, q: u64) -> Result<(), GenError> {
    if n < 2 {
        return Err(GenError::Invalid(format!("need n >= 2, got {n}")));
    }
    if q < 1 {
        return Err(GenError::Invalid("q must be at least 1".into()));
    }
    Ok(())
}

fn check_density(p1: f64) -> Result<(), GenError> {
    if !(p1 > 0.0 && p1 <= 1.0) {
        return Err(GenError::Invalid(format!("density p1={p1} outside (0,1]")));
    }
    Ok(())
}

/// Erdős–Rényi edge set, redrawn until connected.
fn connected_edges(n: usize, p1: f64, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, GenError> {
    for _ in 0..MAX_CONNECT_RETRIES {
        let mut edges = Vec::new();
        for t in 0..n {
            for k in t + 1..n {
                if rng.gen_bool(p1) {
                    edges.push((t, k));
                }
            }
        }
        if is_connected(n, edges.iter().copied()) {
            return Ok(edges);
        }
    }
    Err(GenError::Disconnected(MAX_CONNECT_RETRIES))
}

fn natural_domains(n: usize, size: usize) -> Vec<Vec<Value>> {
    (0..n).map(|_| (0..size as Value).collect()).collect()
}

fn random_matrices(
    edges: &[(usize, usize)],
    domains: &[Vec<Value>],
    q: u64,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<(usize, usize), CostMatrix> {
    edges
        .iter()
        .map(|&(t, k)| {
            let m = CostMatrix::from_fn(domains[t].len(), domains[k].len(), |_, _| {
                rng.gen_range(0..=q)
            });
            ((t, k), m)
        })
        .collect()
}

/// Unstructured random DCOP: every pair is constrained with probability
/// `p1`, costs uniform on `[0, q]`.
pub fn gen_random(
    n: usize,
    domain_size: usize,
    p1: f64,
    q: u64,
    seed: u64,
) -> Result<DcopInstance, GenError> {
    check_common(n, q)?;
    check_density(p1)?;
    if domain_size == 0 {
        return Err(GenError::Invalid("domain size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = connected_edges(n, p1, &mut rng)?;
    let domains = natural_domains(n, domain_size);
    let cons = random_matrices(&edges, &domains, q, &mut rng);
    Ok(DcopInstance::new(q, domains, cons)?)
}

/// Graph coloring with `colors` colors: equal colors on a constrained pair
/// cost a private amount drawn from `[1, q]`, unequal colors cost nothing.
pub fn gen_graph_coloring(
    n: usize,
    p1: f64,
    q: u64,
    colors: usize,
    seed: u64,
) -> Result<DcopInstance, GenError> {
    check_common(n, q)?;
    check_density(p1)?;
    if colors < 2 {
        return Err(GenError::Invalid(format!("need at least 2 colors, got {colors}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = connected_edges(n, p1, &mut rng)?;
    let domains = natural_domains(n, colors);
    let cons = edges
        .iter()
        .map(|&e| {
            let m = CostMatrix::from_fn(colors, colors, |r, s| {
                if r == s {
                    rng.gen_range(1..=q)
                } else {
                    0
                }
            });
            (e, m)
        })
        .collect();
    Ok(DcopInstance::new(q, domains, cons)?)
}

/// Barabási-Albert preferential attachment. Nodes `0..attach_count` form a
/// seed clique; every later node links to `attach_count` distinct earlier
/// nodes chosen with probability proportional to their current degree.
pub fn gen_scale_free(
    n: usize,
    attach_count: usize,
    domain_size: usize,
    q: u64,
    seed: u64,
) -> Result<DcopInstance, GenError> {
    check_common(n, q)?;
    if attach_count < 1 || attach_count >= n {
        return Err(GenError::Invalid(format!(
            "attach count must satisfy 1 <= m < n, got m={attach_count}, n={n}"
        )));
    }
    if domain_size == 0 {
        return Err(GenError::Invalid("domain size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degree = vec![0u64; n];
    let mut edges = Vec::new();
    for t in 0..attach_count {
        for k in t + 1..attach_count {
            edges.push((t, k));
            degree[t] += 1;
            degree[k] += 1;
        }
    }
    for v in attach_count..n {
        let mut weights: Vec<u64> = degree[..v].to_vec();
        let mut chosen = Vec::with_capacity(attach_count);
        for _ in 0..attach_count {
            let total: u64 = weights.iter().sum();
            let pick = if total == 0 {
                // Only reachable from a degree-free seed (m = 1).
                let open: Vec<usize> = (0..v).filter(|u| !chosen.contains(u)).collect();
                *open.choose(&mut rng).expect("fewer targets than attach count")
            } else {
                let mut r = rng.gen_range(0..total);
                let mut pick = 0;
                for (u, &w) in weights.iter().enumerate() {
                    if r < w {
                        pick = u;
                        break;
                    }
                    r -= w;
                }
                pick
            };
            weights[pick] = 0;
            chosen.push(pick);
        }
        chosen.sort_unstable();
        for u in chosen {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    edges.sort_unstable();
    let domains = natural_domains(n, domain_size);
    let cons = random_matrices(&edges, &domains, q, &mut rng);
    Ok(DcopInstance::new(q, domains, cons)?)
}
