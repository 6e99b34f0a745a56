use std::io::Write;
use std::thread;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use totalcost::models::random::{random_model, RandomParams};
use totalcost::solvers::{run, Algorithm, SolverConfig};
use totalcost::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Sizes 10, 25, 50 across all regimes.
    Default,
    /// A single small size, for smoke tests.
    Quick,
    /// Sizes 10 to 200 for growth curves.
    Sweep,
}

impl Suite {
    fn sizes(self) -> Vec<usize> {
        match self {
            Suite::Default => vec![10, 25, 50],
            Suite::Quick => vec![8],
            Suite::Sweep => vec![10, 25, 50, 100, 200],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Suite::Default)]
    pub suite: Suite,
    /// Number of seeds per size, starting at 0.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    /// Comma-separated state counts; overrides the suite's sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = BenchFormat::Text)]
    pub format: BenchFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub regime: String,
    pub states: usize,
    pub seed: u64,
    pub algorithm: String,
    pub iterations: usize,
    pub operator_applications: u64,
    pub entry_updates: u64,
    pub wall_seconds: f64,
}

const ALGORITHMS: [Algorithm; 3] = [Algorithm::ValueIteration, Algorithm::ModifiedPolicyIteration, Algorithm::Mixed];
const REGIMES: [Regime; 3] = [Regime::Discounted, Regime::Negative, Regime::Positive];

fn one_seed(seed: u64, sizes: &[usize]) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::new();
    for &states in sizes {
        for regime in REGIMES {
            let (model, _) = random_model(seed, &RandomParams::new(regime, states))?;
            for algorithm in ALGORITHMS {
                let cfg = SolverConfig { tol: 1e-9, max_iter: 100_000, track_bounds: false, ..SolverConfig::new(algorithm) };
                let started = Instant::now();
                let res = run(&model, &cfg)?;
                out.push(BenchRecord {
                    regime: regime.code().into(),
                    states,
                    seed,
                    algorithm: algorithm.code().into(),
                    iterations: res.trace.len(),
                    operator_applications: res.trace.counters.operator_applications,
                    entry_updates: res.trace.counters.entry_updates,
                    wall_seconds: started.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(out)
}

/// Runs the workloads, one thread per seed.
pub fn collect(args: &BenchArgs) -> Result<Vec<BenchRecord>> {
    let sizes = args.sizes.clone().unwrap_or_else(|| args.suite.sizes());
    if sizes.iter().any(|&n| n < 2) {
        bail!("benchmark sizes must be at least 2");
    }
    let results: Vec<Result<Vec<BenchRecord>>> = thread::scope(|s| {
        let handles: Vec<_> = (0..args.seeds).map(|seed| s.spawn({
            let sizes = &sizes;
            move || one_seed(seed, sizes)
        })).collect();
        handles.into_iter().map(|h| h.join().expect("benchmark worker panicked")).collect()
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by(|a, b| (a.states, &a.regime, a.seed, &a.algorithm).cmp(&(b.states, &b.regime, b.seed, &b.algorithm)));
    Ok(records)
}

/// Total entry updates per size, in increasing size order.
pub fn growth(records: &[BenchRecord]) -> Vec<(usize, u64)> {
    let mut sizes: Vec<usize> = records.iter().map(|r| r.states).collect();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|n| (n, records.iter().filter(|r| r.states == n).map(|r| r.entry_updates).sum()))
        .collect()
}

pub fn report(out: &mut impl Write, records: &[BenchRecord], format: BenchFormat, total_seconds: f64) -> Result<()> {
    match format {
        BenchFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, records)?;
            writeln!(out)?;
        }
        BenchFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        BenchFormat::Text => {
            writeln!(out, "{:<6} {:>6} {:>4} {:<6} {:>7} {:>10} {:>12} {:>9}", "regime", "states", "seed", "alg", "iters", "op_apps", "entries", "seconds")?;
            for r in records {
                writeln!(
                    out,
                    "{:<6} {:>6} {:>4} {:<6} {:>7} {:>10} {:>12} {:>9.4}",
                    r.regime, r.states, r.seed, r.algorithm, r.iterations, r.operator_applications, r.entry_updates, r.wall_seconds
                )?;
            }
            let g = growth(records);
            let monotone = g.windows(2).all(|w| w[0].1 <= w[1].1);
            let parts: Vec<String> = g.iter().map(|(n, e)| format!("{n}:{e}")).collect();
            writeln!(out, "entry updates by size: {} ({})", parts.join(" "), if monotone { "monotone" } else { "not monotone" })?;
            writeln!(out, "total wall time {total_seconds:.2}s")?;
        }
    }
    Ok(())
}
