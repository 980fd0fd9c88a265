use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pcsyncbb::audit::{audit_payloads, audit_trace};
use pcsyncbb::compare::build_circuit;
use pcsyncbb::crypto::DEFAULT_KEY_BITS;
use pcsyncbb::dcop::{parse_instance, public_params, serialize_instance, DcopInstance};
use pcsyncbb::engine::{run, BackendKind, EngineConfig};
use pcsyncbb::ordering::ValueOrdering;
use pcsyncbb::simnet::{parse_cost_model, parse_trace};

mod bench;
mod range;
mod svg;

use bench::{GenOptions, Point, SolveOptions};
use range::{parse_f64_range, parse_usize_range};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Random,
    Coloring,
    Scalefree,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::Coloring => "coloring",
            Family::Scalefree => "scalefree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Brute,
    Syncbb,
    PcSyncbb,
}

impl Algo {
    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Brute => "brute",
            Algo::Syncbb => "syncbb",
            Algo::PcSyncbb => "pc-syncbb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Ideal,
    Mpc,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Ideal => BackendKind::Ideal,
            Backend::Mpc => BackendKind::Mpc,
        }
    }
}

/// Privacy-preserving branch and bound for distributed constraint optimization.
#[derive(Debug, Parser)]
#[command(name = "pcsbb", version)]
struct Cli {
    /// Global seed; falls back to PCSBB_SEED, then 0.
    #[arg(long, global = true, env = "PCSBB_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, clap::Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "random")]
    family: Family,
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p1: f64,
    /// Domain size (number of colors for the coloring family).
    #[arg(long, default_value_t = 3)]
    domain: usize,
    #[arg(long, default_value_t = 100)]
    q: u64,
    /// Edges added per node in the scale-free family.
    #[arg(long, default_value_t = 2)]
    attach: usize,
}

#[derive(Debug, clap::Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "ideal")]
    backend: Backend,
    #[arg(long, default_value_t = DEFAULT_KEY_BITS)]
    keybits: usize,
    #[arg(long)]
    cutoff_secs: Option<f64>,
    /// key=value cost model file for simulated time. Comparison costs left
    /// at zero are taken from the built-in per-n measurements.
    #[arg(long)]
    cost_model: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate an instance file.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance file.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "pc-syncbb")]
        algo: Algo,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the message trace here (pc-syncbb only).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Include the comparison protocol's messages in the trace.
        #[arg(long)]
        record_mpc: bool,
    },
    /// Sweep generated instances and write CSV plus an SVG chart.
    Bench {
        #[arg(long, value_enum, default_value = "random")]
        family: Family,
        #[arg(long, default_value = "7")]
        n: String,
        #[arg(long, default_value = "0.5")]
        p1: String,
        #[arg(long, default_value = "3")]
        domain: String,
        #[arg(long, default_value_t = 100)]
        q: u64,
        #[arg(long, default_value_t = 2)]
        attach: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["syncbb", "pc-syncbb"])]
        algo: Vec<Algo>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output directory for bench.csv and bench.svg; CSV to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a trace, or a fresh run of an instance, for leakage.
    Audit {
        #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
        trace: Option<PathBuf>,
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Agents whose combined view is audited, e.g. 2,3.
        #[arg(long, value_delimiter = ',')]
        coalition: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print comparison circuit statistics.
    CircuitInfo {
        #[arg(long, default_value = "5:19:2")]
        n: String,
        #[arg(long, default_value_t = 100)]
        q: u64,
        /// Fix the bit length instead of deriving it from n and q.
        #[arg(long)]
        ell: Option<u32>,
        /// Write the gate list of the circuit for the first n here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn read_instance(path: &Path) -> Result<DcopInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn solve_options(args: &SolverArgs) -> Result<SolveOptions> {
    let model = match &args.cost_model {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let m = parse_cost_model(&text)?;
            m.validate().map_err(anyhow::Error::msg)?;
            m
        }
        None => bench::DEFAULT_MODEL,
    };
    let cutoff = match args.cutoff_secs {
        Some(s) => {
            ensure!(s.is_finite() && s > 0.0, "cutoff must be positive");
            Some(Duration::from_secs_f64(s))
        }
        None => None,
    };
    Ok(SolveOptions {
        backend: args.backend.into(),
        key_bits: args.keybits,
        cutoff,
        model,
    })
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(0);
    match cli.cmd {
        Cmd::Gen { gen, out } => {
            let point = Point {
                family: gen.family,
                n: gen.n,
                p1: gen.p1,
                domain: gen.domain,
            };
            let inst = bench::generate(&point, &GenOptions { q: gen.q, attach: gen.attach }, seed)?;
            write_or_print(out.as_deref(), &serialize_instance(&inst))
        }
        Cmd::Solve {
            instance,
            algo,
            solver,
            trace,
            record_mpc,
        } => {
            let inst = read_instance(&instance)?;
            let opts = solve_options(&solver)?;
            if algo != Algo::PcSyncbb {
                ensure!(trace.is_none(), "--trace needs --algo pc-syncbb");
                let out = bench::solve(&inst, algo, seed, &opts)?;
                println!("algo {}", algo.as_str());
                println!("cost {}", out.cost.expect("plaintext solvers have no cutoff"));
                println!("comparisons {}", out.comparisons);
                println!("messages {}", out.messages);
                return Ok(());
            }
            let cfg = EngineConfig {
                backend: opts.backend,
                key_bits: opts.key_bits,
                seed,
                values: ValueOrdering::Random,
                record_mpc,
                cutoff: opts.cutoff,
                cost_model: Some(opts.model_for(inst.n())),
                ..Default::default()
            };
            let out = run(&inst, &cfg)?;
            println!("algo pc-syncbb");
            println!("backend {}", opts.backend.as_str());
            println!("cost {}", out.result.cost);
            let values: Vec<String> = out
                .result
                .assignment
                .slots()
                .iter()
                .map(|v| v.map_or("-".into(), |v| v.to_string()))
                .collect();
            println!("assignment {}", values.join(" "));
            println!("metrics {}", pcsyncbb::engine::RunMetrics::CSV_HEADER);
            println!("metrics {}", out.metrics.to_csv());
            if let Some(p) = trace {
                fs::write(&p, out.trace.to_text()).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(())
        }
        Cmd::Bench {
            family,
            n,
            p1,
            domain,
            q,
            attach,
            reps,
            algo,
            solver,
            out,
        } => {
            ensure!(reps >= 1, "--reps must be at least 1");
            ensure!(!algo.is_empty(), "no algorithm selected");
            let ns = parse_usize_range(&n)?;
            let p1s = parse_f64_range(&p1)?;
            let domains = parse_usize_range(&domain)?;
            let mut points = Vec::new();
            for &n in &ns {
                for &p1 in &p1s {
                    for &d in &domains {
                        points.push(Point {
                            family,
                            n,
                            p1,
                            domain: d,
                        });
                    }
                }
            }
            let opts = solve_options(&solver)?;
            let rows = bench::sweep(&points, &algo, reps, seed, &GenOptions { q, attach }, &opts)?;
            let csv = bench::to_csv(&rows);
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("bench.csv"), &csv)?;
                    let title = format!("{} instances, {} repetitions", family.as_str(), reps);
                    fs::write(dir.join("bench.svg"), bench::chart(&rows, &title))?;
                    eprintln!("wrote {} rows to {}", rows.len(), dir.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Cmd::Audit {
            trace,
            instance,
            coalition,
            solver,
        } => {
            let coalition = (!coalition.is_empty()).then_some(coalition.as_slice());
            let reports = if let Some(p) = trace {
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                vec![("trace", audit_trace(&parse_trace(&text)?, coalition))]
            } else {
                let inst = read_instance(instance.as_deref().expect("clap enforces one source"))?;
                let opts = solve_options(&solver)?;
                let cfg = EngineConfig {
                    backend: opts.backend,
                    key_bits: opts.key_bits,
                    seed,
                    record_mpc: true,
                    capture_payloads: true,
                    cutoff: opts.cutoff,
                    ..Default::default()
                };
                let out = run(&inst, &cfg)?;
                vec![
                    ("trace", audit_trace(&out.trace, coalition)),
                    ("payloads", audit_payloads(&out.payloads, out.params, coalition)),
                ]
            };
            let mut failed = false;
            for (what, r) in &reports {
                println!("{what}: {}", r.summary());
                for v in &r.violations {
                    println!("  violation: {v}");
                }
                failed |= !r.passed();
            }
            if failed {
                bail!("leakage audit failed");
            }
            println!("audit passed");
            Ok(())
        }
        Cmd::CircuitInfo { n, q, ell, dump } => {
            let ns = parse_usize_range(&n)?;
            println!("n,ell,gates,and_gates,depth");
            for (i, &n) in ns.iter().enumerate() {
                let ell = match ell {
                    Some(l) => l,
                    None => public_params(n, q)?.ell,
                };
                let c = build_circuit(n, ell)?;
                let st = c.stats();
                println!("{},{},{},{},{}", n, ell, st.gates, st.and_gates, st.and_depth);
                if i == 0 {
                    if let Some(p) = &dump {
                        fs::write(p, c.dump()).with_context(|| format!("writing {}", p.display()))?;
                    }
                }
            }
            Ok(())
        }
    }
}
