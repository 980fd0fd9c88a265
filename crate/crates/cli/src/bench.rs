//! Benchmark sweeps over generated instance families.

use std::fmt::Write;
use std::time::Duration;

use anyhow::{bail, Result};
use pcsyncbb::baseline::{brute_force, plaintext_syncbb, SyncBbConfig};
use pcsyncbb::dcop::{gen_graph_coloring, gen_random, gen_scale_free, DcopInstance};
use pcsyncbb::engine::{run, BackendKind, EngineConfig, EngineError};
use pcsyncbb::ordering::ValueOrdering;
use pcsyncbb::simnet::CostModel;
use rayon::prelude::*;

use crate::svg::{log_chart, Series};
use crate::{Algo, Family};

pub const CSV_HEADER: &str =
    "family,n,p1,domain,algo,backend,seed,cost,comparisons,messages,bytes,paillier_ops,sim_time_ms";

/// Largest search space the brute-force oracle will enumerate.
pub const BRUTE_LIMIT: u128 = 100_000_000;

/// Message and crypto costs used when no cost model file is given: LAN
/// latency, 1 Gbit/s links and a 2048-bit modular exponentiation.
pub const DEFAULT_MODEL: CostModel = CostModel {
    message_latency_ms: 0.05,
    byte_latency_ms: 8e-6,
    paillier_op_ms: 0.5,
    comparison_offline_ms: 0.0,
    comparison_online_ms: 0.0,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub family: Family,
    pub n: usize,
    pub p1: f64,
    pub domain: usize,
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub q: u64,
    pub attach: usize,
}

pub fn generate(p: &Point, opts: &GenOptions, seed: u64) -> Result<DcopInstance> {
    Ok(match p.family {
        Family::Random => gen_random(p.n, p.domain, p.p1, opts.q, seed)?,
        Family::Coloring => gen_graph_coloring(p.n, p.p1, opts.q, p.domain, seed)?,
        Family::Scalefree => gen_scale_free(p.n, opts.attach.min(p.n - 1), p.domain, opts.q, seed)?,
    })
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub backend: BackendKind,
    pub key_bits: usize,
    pub cutoff: Option<Duration>,
    /// Message and crypto costs; comparison costs are filled in per `n`
    /// when left at zero.
    pub model: CostModel,
}

impl SolveOptions {
    pub fn model_for(&self, n: usize) -> CostModel {
        let mut m = self.model;
        if m.comparison_offline_ms == 0.0 && m.comparison_online_ms == 0.0 {
            let measured = CostModel::measured_comparison(n);
            m.comparison_offline_ms = measured.comparison_offline_ms;
            m.comparison_online_ms = measured.comparison_online_ms;
        }
        m
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// `None` when the run hit the cutoff.
    pub cost: Option<u64>,
    pub comparisons: u64,
    pub messages: u64,
    pub bytes: u64,
    pub paillier_ops: u64,
    pub sim_time_ms: f64,
}

pub fn solve(inst: &DcopInstance, algo: Algo, seed: u64, opts: &SolveOptions) -> Result<Outcome> {
    let model = opts.model_for(inst.n());
    Ok(match algo {
        Algo::Brute => {
            if inst.search_space() > BRUTE_LIMIT {
                bail!("search space {} too large for brute force", inst.search_space());
            }
            let r = brute_force(inst);
            Outcome {
                cost: Some(r.cost),
                comparisons: r.stats.comparisons,
                ..Default::default()
            }
        }
        Algo::Syncbb => {
            let r = plaintext_syncbb(inst, &SyncBbConfig::default())?.result;
            Outcome {
                cost: Some(r.cost),
                comparisons: r.stats.comparisons,
                messages: r.stats.messages,
                sim_time_ms: r.stats.messages as f64 * model.message_latency_ms,
                ..Default::default()
            }
        }
        Algo::PcSyncbb => {
            let cfg = EngineConfig {
                backend: opts.backend,
                key_bits: opts.key_bits,
                seed,
                values: ValueOrdering::Random,
                cutoff: opts.cutoff,
                cost_model: Some(model),
                ..Default::default()
            };
            match run(inst, &cfg) {
                Ok(out) => Outcome {
                    cost: Some(out.result.cost),
                    comparisons: out.metrics.comparisons,
                    messages: out.metrics.messages,
                    bytes: out.metrics.bytes,
                    paillier_ops: out.metrics.paillier_ops,
                    sim_time_ms: out.metrics.sim_time_ms,
                },
                Err(EngineError::Cutoff(_)) => Outcome::default(),
                Err(e) => return Err(e.into()),
            }
        }
    })
}

#[derive(Debug, Clone)]
pub struct Row {
    pub point: Point,
    pub algo: Algo,
    pub backend: &'static str,
    pub seed: u64,
    pub reps: usize,
    pub mean: Outcome,
    /// Mean cost over the runs that finished, `None` if any hit the cutoff.
    pub cost: Option<f64>,
}

impl Row {
    pub fn csv(&self) -> String {
        let p = &self.point;
        let p1 = match p.family {
            Family::Scalefree => String::new(),
            _ => format!("{}", p.p1),
        };
        let cost = self.cost.map_or("NA".to_string(), |c| format!("{c:.3}"));
        format!(
            "{},{},{},{},{},{},{},{},{:.1},{:.1},{:.1},{:.1},{:.3}",
            p.family.as_str(),
            p.n,
            p1,
            p.domain,
            self.algo.as_str(),
            self.backend,
            self.seed,
            cost,
            self.mean.comparisons as f64 / self.reps as f64,
            self.mean.messages as f64 / self.reps as f64,
            self.mean.bytes as f64 / self.reps as f64,
            self.mean.paillier_ops as f64 / self.reps as f64,
            self.mean.sim_time_ms / self.reps as f64,
        )
    }
}

/// Runs every (point, algorithm, repetition) and averages per
/// (point, algorithm). Repetition `r` uses instance seed `seed + r`.
pub fn sweep(
    points: &[Point],
    algos: &[Algo],
    reps: usize,
    seed: u64,
    gen: &GenOptions,
    opts: &SolveOptions,
) -> Result<Vec<Row>> {
    let jobs: Vec<(usize, Algo, u64)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, _)| {
            algos
                .iter()
                .flat_map(move |&a| (0..reps as u64).map(move |r| (i, a, seed.wrapping_add(r))))
        })
        .collect();
    let results: Vec<Result<Outcome>> = jobs
        .par_iter()
        .map(|&(i, algo, s)| {
            let inst = generate(&points[i], gen, s)?;
            solve(&inst, algo, s, opts)
        })
        .collect();
    let mut rows: Vec<Row> = Vec::new();
    for ((i, algo, _), res) in jobs.iter().zip(results) {
        let out = res?;
        let backend = if *algo == Algo::PcSyncbb { opts.backend.as_str() } else { "" };
        let row = match rows.last_mut() {
            Some(r) if r.point == points[*i] && r.algo == *algo => r,
            _ => {
                rows.push(Row {
                    point: points[*i],
                    algo: *algo,
                    backend,
                    seed,
                    reps,
                    mean: Outcome::default(),
                    cost: Some(0.0),
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.mean.comparisons += out.comparisons;
        row.mean.messages += out.messages;
        row.mean.bytes += out.bytes;
        row.mean.paillier_ops += out.paillier_ops;
        row.mean.sim_time_ms += out.sim_time_ms;
        row.cost = match (row.cost, out.cost) {
            (Some(acc), Some(c)) => Some(acc + c as f64 / reps as f64),
            _ => None,
        };
    }
    Ok(rows)
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv());
    }
    out
}

/// Which parameter varies across the sweep, for the chart's x axis.
fn x_axis(points: &[Point]) -> (&'static str, fn(&Point) -> f64) {
    let varies = |f: fn(&Point) -> f64| points.iter().any(|p| f(p) != f(&points[0]));
    if varies(|p| p.p1) {
        ("constraint density p1", |p| p.p1)
    } else if varies(|p| p.domain as f64) {
        ("domain size", |p| p.domain as f64)
    } else {
        ("agents n", |p| p.n as f64)
    }
}

pub fn chart(rows: &[Row], title: &str) -> String {
    let points: Vec<Point> = rows.iter().map(|r| r.point).collect();
    if points.is_empty() {
        return log_chart(title, "", "simulated time (ms)", &[]);
    }
    let (label, fx) = x_axis(&points);
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let name = r.algo.as_str().to_string();
        let y = r.mean.sim_time_ms / r.reps as f64;
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((fx(&r.point), y)),
            None => series.push(Series {
                name,
                points: vec![(fx(&r.point), y)],
            }),
        }
    }
    log_chart(title, label, "simulated time (ms)", &series)
}
