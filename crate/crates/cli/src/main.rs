use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use totalcost::model::validate_model;
use totalcost::models::fixtures::{fixture, FIXTURE_NAMES};
use totalcost::models::random::{random_model, RandomParams};
use totalcost::operators::h_backup;
use totalcost::solvers::Algorithm;
use totalcost::Regime;

use totalcost_cli::bench::{self, BenchArgs};
use totalcost_cli::modelfile::{self, ModelFile, Strictness};
use totalcost_cli::scenarios::{self, SCENARIOS};
use totalcost_cli::solve::{self, SolverArgs, Summary};
use totalcost_cli::tracefile::{Format, TraceFile};

#[derive(Parser)]
#[command(name = "totalcost", version, about = "Solvers and certificates for finite total-cost Markov decision problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model file and check its invariants.
    Validate {
        path: PathBuf,
        /// Reject unknown fields instead of warning.
        #[arg(long)]
        strict: bool,
    },
    /// Run one solver and report the final iterate and certificates.
    Solve {
        path: PathBuf,
        /// vi, pi, mpi, mixed or lp.
        #[arg(long, default_value = "mixed")]
        algorithm: Algorithm,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Exit with status 1 when a certificate check fails.
        #[arg(long)]
        check: bool,
    },
    /// Run several solvers from the same start and tabulate their cost.
    Compare {
        path: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "vi,mpi,mixed")]
        algorithms: Vec<Algorithm>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Directory receiving one trace per algorithm.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Rerun a scripted example and compare with the expected values.
    Reproduce {
        /// Scenario name, or `all`.
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
    /// Time the solvers on seeded random models.
    Bench(BenchArgs),
    /// Write a built-in model (a fixture name, or `random`) as a model file.
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// D, N or P (for `random`).
        #[arg(long, default_value = "P")]
        regime: String,
        #[arg(long, default_value_t = 6)]
        states: usize,
    },
}

fn strictness(strict: bool) -> Strictness {
    if strict {
        Strictness::Strict
    } else {
        Strictness::Warn
    }
}

fn validate(path: PathBuf, strict: bool) -> Result<ExitCode> {
    let loaded = solve::load(&path, strictness(strict))?;
    let m = &loaded.model;
    let report = validate_model(m);
    if report.is_ok() {
        println!("OK: regime {}, {} states, {} state-control pairs", m.regime(), m.num_states(), m.num_pairs());
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &report.violations {
            println!("invalid: {v}");
        }
        Ok(ExitCode::from(1))
    }
}

fn run_solve(path: PathBuf, algorithm: Algorithm, args: SolverArgs, trace_out: Option<PathBuf>, format: Format, check: bool) -> Result<ExitCode> {
    let loaded = solve::load(&path, strictness(args.strict))?;
    let m = &loaded.model;
    let truth = loaded.truth.as_ref();
    let cfg = args.config(algorithm, m, truth)?;
    let out = match solve::run_checked(m, &cfg)? {
        Ok(out) => out,
        Err(e) if solve::is_runtime(&e) => {
            println!("{algorithm} did not finish: {e}");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    let stdout = io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "{algorithm} on {} (regime {}, {} states)", path.display(), m.regime(), m.num_states())?;
    solve::print_table(&mut w, &[Summary::of(algorithm, &out, cfg.tol)])?;
    writeln!(w, "J: {}", solve::labelled(m, &out.j))?;
    if let Some(q) = &out.q {
        let parts: Vec<String> = m
            .pairs()
            .iter()
            .zip(q.iter())
            .map(|(&(x, u), v)| format!("({},{})={v}", m.state(x).name, m.controls(x)[u].label))
            .collect();
        writeln!(w, "Q: {}", parts.join("  "))?;
    }
    if let Some(p) = &out.policy {
        writeln!(w, "policy: {}", p.describe())?;
    }
    if let Some(t) = &out.termination {
        writeln!(w, "termination: {t:?}")?;
    }
    if let Some(gt) = truth {
        let off: Vec<String> = (0..m.num_states())
            .filter(|&x| out.j[x].dist(gt.jstar[x]) > 1e-8)
            .map(|x| m.state(x).name.clone())
            .collect();
        if off.is_empty() {
            writeln!(w, "J matches J* within 1e-8")?;
        } else {
            writeln!(w, "J_∞ ≠ J* at state {}", off.join(", "))?;
        }
    }
    let report = solve::certificates(m, &out, truth)?;
    writeln!(w, "certificates:")?;
    for c in &report.checks {
        let witness = c.witness.map(|x| format!(" at state {}", m.state(x).name)).unwrap_or_default();
        writeln!(w, "  [{}] {} margin {:e}{witness}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.margin, c.detail)?;
    }
    if let Some(c) = report.cone_constant {
        writeln!(w, "  cone constant {c}")?;
    }
    if let Some(path) = trace_out {
        let file = TraceFile { header: solve::header(&loaded.hash, args.echo(algorithm)), trace: out.trace };
        solve::write_trace(&path, format, &file)?;
        writeln!(w, "trace written to {}", path.display())?;
    }
    Ok(if check && !report.all_passed() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn compare(path: PathBuf, algorithms: Vec<Algorithm>, args: SolverArgs, trace_out: Option<PathBuf>, format: Format) -> Result<ExitCode> {
    let loaded = solve::load(&path, strictness(args.strict))?;
    let m = &loaded.model;
    let truth = loaded.truth.as_ref();
    let configs = algorithms
        .iter()
        .map(|&a| {
            let cfg = args.config(a, m, truth)?;
            cfg.check_applicable(m)?;
            cfg.validate(m)?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &trace_out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut rows = Vec::new();
    for (&alg, cfg) in algorithms.iter().zip(&configs) {
        match solve::run_checked(m, cfg)? {
            Ok(out) => {
                rows.push(Summary::of(alg, &out, cfg.tol));
                if let Some(dir) = &trace_out {
                    let ext = match format {
                        Format::Csv => "csv",
                        Format::Json => "json",
                    };
                    let file = TraceFile { header: solve::header(&loaded.hash, args.echo(alg)), trace: out.trace };
                    solve::write_trace(&dir.join(format!("{}.{ext}", alg.code())), format, &file)?;
                }
            }
            Err(e) if solve::is_runtime(&e) => rows.push(Summary::failed(alg, "cap")),
            Err(e) => return Err(e.into()),
        }
    }
    solve::print_table(&mut io::stdout().lock(), &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn reproduce(name: Option<String>, list: bool) -> Result<ExitCode> {
    if list || name.is_none() {
        for s in &SCENARIOS {
            println!("{:<20} criterion {:>2}  {}", s.name, s.criterion, s.summary);
        }
        return Ok(ExitCode::SUCCESS);
    }
    let name = name.unwrap();
    let selected: Vec<_> = if name == "all" {
        SCENARIOS.iter().collect()
    } else {
        match scenarios::find(&name) {
            Some(s) => vec![s],
            None => bail!("unknown scenario `{name}` (see `reproduce --list`)"),
        }
    };
    let stdout = io::stdout();
    let mut w = stdout.lock();
    let mut failed = 0;
    for s in selected {
        if !s.execute(&mut w)? {
            failed += 1;
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn export(name: String, out: Option<PathBuf>, seed: u64, regime: String, states: usize) -> Result<ExitCode> {
    let file = if name == "random" {
        let regime = Regime::from_code(&regime).with_context(|| format!("unknown regime `{regime}`"))?;
        let (model, jstar) = random_model(seed, &RandomParams::new(regime, states))?;
        let qstar = h_backup(&model, &jstar)?;
        ModelFile::from_model(&model, Some(&jstar), Some(&qstar))
    } else if FIXTURE_NAMES.contains(&name.as_str()) {
        let fx = fixture(&name)?;
        ModelFile::from_model(&fx.model, Some(&fx.jstar), fx.qstar.as_ref())
    } else {
        bail!("unknown model `{name}`; expected one of {} or `random`", FIXTURE_NAMES.join(", "));
    };
    let text = modelfile::render(&file)?;
    match out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate { path, strict } => validate(path, strict),
        Command::Solve { path, algorithm, solver, trace_out, format, check } => run_solve(path, algorithm, solver, trace_out, format, check),
        Command::Compare { path, algorithms, solver, trace_out, format } => compare(path, algorithms, solver, trace_out, format),
        Command::Reproduce { name, list } => reproduce(name, list),
        Command::Bench(args) => {
            let started = Instant::now();
            let records = bench::collect(&args)?;
            bench::report(&mut io::stdout().lock(), &records, args.format, started.elapsed().as_secs_f64())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { name, out, seed, regime, states } => export(name, out, seed, regime, states),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) if e.chain().any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
