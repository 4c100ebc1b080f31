//! Command-line front end for the `ksink` solver library.
//!
//! Exit codes: 0 success, 1 file parse error, 2 invalid instance or
//! arguments, 3 infeasible (for `check`), 4 validation mismatch.

mod format;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use ksink::brute::{BruteForcer, BRUTE_LIMIT};
use ksink::feasibility::{bounded_cost_fast, bounded_cost_iterative};
use ksink::gen;
use ksink::optimizer::{partition_fixed_sinks, solve_parametric_fast, solve_parametric_iterative};
use ksink::{
    Configuration, Cost, EccentricityOracle, EvacOracle, Instance, OracleHandle, VertexSet,
};

const EXIT_PARSE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "ksink", about = "Minmax k-sink placement on dynamic tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    /// Dynamic-flow evacuation time (congestion-aware).
    Evac,
    /// Weighted tree eccentricity (classic k-center).
    Kcenter,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Iterative,
    Fast,
}

#[derive(Subcommand)]
enum Command {
    /// Find the optimal sink placement and partition.
    Solve {
        file: PathBuf,
        /// Sink budget; overrides the `k` record in the file.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "evac")]
        oracle: OracleKind,
        #[arg(long, value_enum, default_value = "iterative")]
        algo: Algo,
    },
    /// Test feasibility at a fixed cost threshold.
    Check {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: u64,
        #[arg(long, value_enum, default_value = "evac")]
        oracle: OracleKind,
        #[arg(long, value_enum, default_value = "iterative")]
        algo: Algo,
    },
    /// Partition the tree optimally around a fixed sink set.
    Partition {
        file: PathBuf,
        /// Comma-separated sink vertex ids.
        #[arg(long, value_delimiter = ',', required = true)]
        sinks: Vec<usize>,
        #[arg(long, value_enum, default_value = "evac")]
        oracle: OracleKind,
    },
    /// Cross-check both solvers against brute force.
    Validate {
        file: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "evac")]
        oracle: OracleKind,
    },
    /// Emit a deterministic random instance file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long, default_value = "1")]
        k: usize,
        #[arg(long, default_value = "4")]
        max_tau: u64,
        #[arg(long, default_value = "3")]
        max_cap: u64,
        #[arg(long, default_value = "4")]
        max_w: u64,
        #[arg(long, default_value = "random")]
        shape: gen::Shape,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

type CmdResult = Result<ExitCode, (u8, String)>;

fn load(file: &PathBuf) -> Result<Instance, (u8, String)> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| (EXIT_PARSE, format!("{}: {e}", file.display())))?;
    let parsed = format::parse(&text).map_err(|e| (EXIT_PARSE, e.to_string()))?;
    parsed.map_err(|e| (EXIT_INVALID, e.to_string()))
}

fn handle_for(kind: OracleKind) -> OracleHandle<'static> {
    match kind {
        OracleKind::Evac => OracleHandle::new(&EvacOracle),
        OracleKind::Kcenter => OracleHandle::new(&EccentricityOracle),
    }
}

fn print_report(
    cost: u64,
    cfg: &Configuration,
    calls: u64,
    wall: std::time::Duration,
    algo: &str,
) {
    println!("cost {cost}");
    let mut sinks: Vec<_> = cfg.sinks.iter().collect();
    sinks.sort_unstable();
    println!(
        "sinks {}",
        sinks.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    );
    let mut blocks: Vec<(usize, Vec<usize>)> = cfg
        .blocks
        .iter()
        .map(|(b, s)| {
            let mut vs: Vec<_> = b.iter().collect();
            vs.sort_unstable();
            (*s, vs)
        })
        .collect();
    blocks.sort();
    for (s, vs) in &blocks {
        println!(
            "block {s} {}",
            vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
    }
    println!("oracle_calls {calls}");
    println!("wall_time_ms {}", wall.as_millis());
    println!("algorithm {algo}");
    println!(
        "# {} sink(s), {} block(s), worst block cost {cost}",
        sinks.len(),
        blocks.len()
    );
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::Solve { file, k, oracle, algo } => {
            let inst = load(&file)?;
            let inst = match k {
                Some(k) if k >= 1 => inst.with_k(k),
                Some(_) => return Err((EXIT_INVALID, "k must be at least 1".into())),
                None => inst,
            };
            let handle = handle_for(oracle);
            let start = Instant::now();
            let (report, tag) = match algo {
                Algo::Iterative => (
                    solve_parametric_iterative(&inst, &handle, inst.k()),
                    "iterative",
                ),
                Algo::Fast => (solve_parametric_fast(&inst, &handle, inst.k()), "fast"),
            };
            let report = report.map_err(|e| (EXIT_INVALID, e.to_string()))?;
            print_report(report.tstar, &report.config, handle.calls(), start.elapsed(), tag);
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { file, k, threshold, oracle, algo } => {
            let inst = load(&file)?;
            let inst = match k {
                Some(k) if k >= 1 => inst.with_k(k),
                Some(_) => return Err((EXIT_INVALID, "k must be at least 1".into())),
                None => inst,
            };
            let handle = handle_for(oracle);
            let start = Instant::now();
            let (outcome, tag) = match algo {
                Algo::Iterative => (
                    bounded_cost_iterative(&inst, &handle, Cost::Finite(threshold), inst.k()),
                    "iterative",
                ),
                Algo::Fast => (
                    bounded_cost_fast(&inst, &handle, Cost::Finite(threshold), inst.k()),
                    "fast",
                ),
            };
            let outcome = outcome.map_err(|e| (EXIT_INVALID, e.to_string()))?;
            match outcome.configuration() {
                Some(cfg) => {
                    println!("feasible");
                    print_report(threshold, cfg, handle.calls(), start.elapsed(), tag);
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("infeasible");
                    Ok(ExitCode::from(EXIT_INFEASIBLE))
                }
            }
        }
        Command::Partition { file, sinks, oracle } => {
            let inst = load(&file)?;
            for &s in &sinks {
                if s >= inst.n() {
                    return Err((
                        EXIT_INVALID,
                        format!("sink {s} out of range (n = {})", inst.n()),
                    ));
                }
            }
            let set = VertexSet::from_iter_n(inst.n(), sinks.iter().copied());
            let handle = handle_for(oracle);
            let start = Instant::now();
            let report = partition_fixed_sinks(&inst, &handle, &set)
                .map_err(|e| (EXIT_INVALID, e.to_string()))?;
            print_report(
                report.tstar,
                &report.config,
                handle.calls(),
                start.elapsed(),
                "fixed-sinks",
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { file, k, oracle } => {
            let inst = load(&file)?;
            let inst = match k {
                Some(k) if k >= 1 => inst.with_k(k),
                Some(_) => return Err((EXIT_INVALID, "k must be at least 1".into())),
                None => inst,
            };
            let handle = handle_for(oracle);
            let it = solve_parametric_iterative(&inst, &handle, inst.k())
                .map_err(|e| (EXIT_INVALID, e.to_string()))?;
            let fast = solve_parametric_fast(&inst, &handle, inst.k())
                .map_err(|e| (EXIT_INVALID, e.to_string()))?;
            println!("iterative {}", it.tstar);
            println!("fast {}", fast.tstar);
            let mut ok = it.tstar == fast.tstar;
            for (tag, r) in [("iterative", &it), ("fast", &fast)] {
                if let Err(e) = r.config.verify(&inst, &handle, r.tstar) {
                    println!("verify {tag} FAIL {e}");
                    ok = false;
                }
            }
            if inst.n() <= BRUTE_LIMIT {
                let mut brute = BruteForcer::new(&handle);
                let (bc, _, _) = brute
                    .optimal(&inst, inst.k())
                    .map_err(|e| (EXIT_INVALID, e.to_string()))?;
                match bc {
                    Cost::Finite(c) => {
                        println!("brute {c}");
                        ok = ok && c == it.tstar;
                    }
                    Cost::Infinite => {
                        println!("brute inf");
                        ok = false;
                    }
                }
            } else {
                println!("# n > {BRUTE_LIMIT}: brute force skipped, solver self-check only");
            }
            if ok {
                println!("agreement");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("mismatch");
                Ok(ExitCode::from(EXIT_MISMATCH))
            }
        }
        Command::Gen { n, seed, k, max_tau, max_cap, max_w, shape } => {
            if n == 0 {
                return Err((EXIT_INVALID, "n must be at least 1".into()));
            }
            let inst = gen::random_instance(
                n,
                k,
                shape,
                seed,
                gen::AttrRanges {
                    max_tau,
                    max_cap,
                    max_weight: max_w,
                },
            );
            print!("{}", format::serialize(&inst));
            Ok(ExitCode::SUCCESS)
        }
    }
}
