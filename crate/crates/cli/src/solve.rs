use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use totalcost::model::require_valid;
use totalcost::operators::h_backup;
use totalcost::solvers::{
    run, verify_certificates, Algorithm, BStrategy, CertificateReport, GroundTruth, MaskSchedule, NSchedule, PiTermination,
    RunOutcome, SolverConfig,
};
use totalcost::{Error as CoreError, ExtReal, Policy, QVector, TotalCostModel, ValueVector};

use crate::modelfile::{self, Strictness};
use crate::tracefile::{model_hash, Format, TraceFile, TraceHeader};

pub struct Loaded {
    pub model: TotalCostModel,
    pub truth: Option<GroundTruth>,
    pub hash: String,
}

pub fn load(path: &Path, strictness: Strictness) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = modelfile::parse(&text, strictness).with_context(|| format!("parsing {}", path.display()))?;
    for key in &parsed.ignored {
        eprintln!("warning: {}: unknown field `{key}` ignored", path.display());
    }
    let model = parsed.file.to_model()?;
    let truth = parsed.file.ground_truth(&model)?;
    Ok(Loaded { model, truth, hash: model_hash(text.as_bytes()) })
}

/// A vector given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorSpec {
    Const(ExtReal),
    /// `c·J*` (or `c·Q*`) from the model's ground truth.
    ScaledOptimum(f64),
    File(PathBuf),
}

impl FromStr for VectorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => return Ok(VectorSpec::Const(ExtReal::ZERO)),
            "inf" => return Ok(VectorSpec::Const(ExtReal::INFINITY)),
            "-inf" => return Ok(VectorSpec::Const(ExtReal::NEG_INFINITY)),
            _ => {}
        }
        if let Some(c) = s.strip_prefix("cJstar:") {
            let c: f64 = c.parse().map_err(|_| format!("bad multiplier in `{s}`"))?;
            if !(c >= 0.0) {
                return Err(format!("multiplier in `{s}` must be nonnegative"));
            }
            return Ok(VectorSpec::ScaledOptimum(c));
        }
        if let Some(c) = s.strip_prefix("const:") {
            return c.parse().map(VectorSpec::Const).map_err(|e| e.to_string());
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(VectorSpec::File(PathBuf::from(p)));
        }
        Err(format!("expected zero, inf, -inf, const:<c>, cJstar:<c> or file:<path>, got `{s}`"))
    }
}

fn read_values(path: &Path) -> Result<Vec<ExtReal>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<ExtReal>().with_context(|| format!("in {}", path.display())))
        .collect()
}

impl VectorSpec {
    fn resolve(&self, len: usize, what: &str, optimum: Option<&[ExtReal]>) -> Result<Vec<ExtReal>> {
        let v = match self {
            VectorSpec::Const(c) => vec![*c; len],
            VectorSpec::ScaledOptimum(c) => {
                let opt = optimum.ok_or_else(|| anyhow!("{what} = cJstar needs a ground_truth block in the model file"))?;
                opt.iter().map(|v| v.scale(*c)).collect()
            }
            VectorSpec::File(p) => read_values(p)?,
        };
        if v.len() != len {
            bail!("{what} has {} entries, the model needs {len}", v.len());
        }
        Ok(v)
    }

    pub fn values(&self, model: &TotalCostModel, truth: Option<&GroundTruth>, what: &str) -> Result<ValueVector> {
        self.resolve(model.num_states(), what, truth.map(|t| t.jstar.0.as_slice())).map(ValueVector)
    }

    pub fn q_factors(&self, model: &TotalCostModel, truth: Option<&GroundTruth>, what: &str) -> Result<QVector> {
        let qstar = match truth {
            Some(t) => Some(match &t.qstar {
                Some(q) => q.clone(),
                None => h_backup(model, &t.jstar)?,
            }),
            None => None,
        };
        self.resolve(model.num_pairs(), what, qstar.as_ref().map(|q| q.0.as_slice())).map(QVector)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MaskChoice {
    None,
    RoundRobin,
}

/// Choice of the evaluation set `B_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BChoice {
    Full,
    Empty,
    Occupation { beta: f64, threshold: f64 },
}

impl FromStr for BChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => return Ok(BChoice::Full),
            "empty" => return Ok(BChoice::Empty),
            _ => {}
        }
        let rest = s
            .strip_prefix("occupation")
            .ok_or_else(|| format!("expected full, empty or occupation[:beta[:threshold]], got `{s}`"))?;
        let parts: Vec<&str> = rest.split(':').skip(1).collect();
        let num = |i: usize, default: f64| -> Result<f64, String> {
            parts.get(i).map_or(Ok(default), |p| p.parse().map_err(|_| format!("bad number `{p}` in `{s}`")))
        };
        Ok(BChoice::Occupation { beta: num(0, 0.9)?, threshold: num(1, 1e-9)? })
    }
}

/// Solver settings shared by `solve` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Initial J: zero, inf, -inf, const:<c>, cJstar:<c> or file:<path>.
    #[arg(long, default_value = "zero")]
    pub j0: VectorSpec,
    /// Initial Q (same literals); defaults to the backup of J0.
    #[arg(long)]
    pub q0: Option<VectorSpec>,
    /// Evaluation steps per iteration: a count, a comma list, or `exact`.
    #[arg(long, default_value = "10")]
    pub nk: NSchedule,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// full, empty or occupation[:beta[:threshold]].
    #[arg(long, default_value = "full")]
    pub bstrategy: BChoice,
    #[arg(long, env = "TOTALCOST_TOL", default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long)]
    pub clamp_lo: Option<VectorSpec>,
    #[arg(long)]
    pub clamp_hi: Option<VectorSpec>,
    #[arg(long, value_enum, default_value_t = MaskChoice::None)]
    pub mask_schedule: MaskChoice,
    /// Initial policy as comma-separated control indices.
    #[arg(long)]
    pub policy: Option<String>,
    /// Reject unknown fields in the model file instead of warning.
    #[arg(long)]
    pub strict: bool,
}

impl SolverArgs {
    pub fn config(&self, algorithm: Algorithm, model: &TotalCostModel, truth: Option<&GroundTruth>) -> Result<SolverConfig> {
        let n = model.num_states();
        let j0 = self.j0.values(model, truth, "--j0")?;
        let q0 = match &self.q0 {
            Some(s) => Some(s.q_factors(model, truth, "--q0")?),
            None if model.has_affine_families() => None,
            None => Some(h_backup(model, &j0)?),
        };
        let b_strategy = match self.bstrategy {
            BChoice::Full => BStrategy::Full,
            BChoice::Empty => BStrategy::Empty,
            BChoice::Occupation { beta, threshold } => {
                BStrategy::OccupationSupport { rho: vec![1.0 / n as f64; n], beta, threshold }
            }
        };
        let initial_policy = match &self.policy {
            Some(s) => {
                let choices = s
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|_| anyhow!("bad control index `{t}` in --policy")))
                    .collect::<Result<Vec<_>>>()?;
                if choices.len() != n {
                    bail!("--policy has {} entries, the model has {n} states", choices.len());
                }
                if let Some(x) = (0..n).find(|&x| choices[x] >= model.controls(x).len()) {
                    bail!("--policy picks control {} at state {x}, which has {}", choices[x], model.controls(x).len());
                }
                Some(Policy::deterministic(model, &choices))
            }
            None => None,
        };
        Ok(SolverConfig {
            algorithm,
            j0: Some(j0),
            q0,
            initial_policy,
            n_schedule: self.nk.clone(),
            epsilon: self.epsilon,
            b_strategy,
            clamp_lo: self.clamp_lo.as_ref().map(|s| s.values(model, truth, "--clamp-lo")).transpose()?,
            clamp_hi: self.clamp_hi.as_ref().map(|s| s.values(model, truth, "--clamp-hi")).transpose()?,
            masks: (self.mask_schedule == MaskChoice::RoundRobin).then_some(MaskSchedule::RoundRobin),
            max_iter: self.max_iter,
            tol: self.tol,
            ground_truth: truth.cloned(),
            ..SolverConfig::default()
        })
    }

    pub fn echo(&self, algorithm: Algorithm) -> BTreeMap<String, String> {
        let spec = |s: &VectorSpec| match s {
            VectorSpec::Const(c) => c.to_string(),
            VectorSpec::ScaledOptimum(c) => format!("cJstar:{c}"),
            VectorSpec::File(p) => format!("file:{}", p.display()),
        };
        let mut m = BTreeMap::new();
        m.insert("algorithm".into(), algorithm.code().into());
        m.insert("j0".into(), spec(&self.j0));
        m.insert("q0".into(), self.q0.as_ref().map_or("backup(j0)".into(), spec));
        m.insert("nk".into(), format!("{:?}", self.nk));
        m.insert("epsilon".into(), self.epsilon.to_string());
        m.insert("bstrategy".into(), format!("{:?}", self.bstrategy).to_lowercase());
        m.insert("tol".into(), self.tol.to_string());
        m.insert("max_iter".into(), self.max_iter.to_string());
        if let Some(s) = &self.clamp_lo {
            m.insert("clamp_lo".into(), spec(s));
        }
        if let Some(s) = &self.clamp_hi {
            m.insert("clamp_hi".into(), spec(s));
        }
        m.insert("mask_schedule".into(), format!("{:?}", self.mask_schedule).to_lowercase());
        if let Some(p) = &self.policy {
            m.insert("policy".into(), p.clone());
        }
        m
    }
}

/// Outcome of one solver run as shown in summary tables.
pub struct Summary {
    pub algorithm: Algorithm,
    pub status: String,
    pub iterations: usize,
    pub residual: f64,
    pub dist_j: Option<f64>,
    pub applications: u64,
    pub entries: u64,
    pub seconds: f64,
}

impl Summary {
    pub fn of(algorithm: Algorithm, out: &RunOutcome, tol: f64) -> Summary {
        let last = out.trace.last();
        let residual = last.map_or(f64::INFINITY, |r| r.residual);
        let status = match out.termination {
            Some(PiTermination::Stuck) => "stuck".into(),
            Some(PiTermination::Cycle) => "cycle".into(),
            Some(PiTermination::Cap) => "cap".into(),
            Some(PiTermination::OptimalCertified) => "optimal".into(),
            None if residual <= tol || residual == 0.0 => "converged".into(),
            None => "stopped".into(),
        };
        Summary {
            algorithm,
            status,
            iterations: out.trace.len(),
            residual,
            dist_j: last.and_then(|r| r.dist_j),
            applications: out.trace.counters.operator_applications,
            entries: out.trace.counters.entry_updates,
            seconds: last.map_or(0.0, |r| r.elapsed),
        }
    }

    pub fn failed(algorithm: Algorithm, why: &str) -> Summary {
        Summary {
            algorithm,
            status: why.into(),
            iterations: 0,
            residual: f64::NAN,
            dist_j: None,
            applications: 0,
            entries: 0,
            seconds: 0.0,
        }
    }
}

pub fn print_table(out: &mut impl Write, rows: &[Summary]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<9} {:<10} {:>7} {:>12} {:>12} {:>10} {:>12} {:>9}",
        "algorithm", "status", "iters", "residual", "dist_J*", "op_apps", "entries", "seconds"
    )?;
    for r in rows {
        let dist = r.dist_j.map_or("-".to_string(), |d| format!("{d:.3e}"));
        writeln!(
            out,
            "{:<9} {:<10} {:>7} {:>12.3e} {:>12} {:>10} {:>12} {:>9.4}",
            r.algorithm.code(),
            r.status,
            r.iterations,
            r.residual,
            dist,
            r.applications,
            r.entries,
            r.seconds
        )?;
    }
    Ok(())
}

/// Whether a solver error is a runtime outcome (exit 1) rather than a
/// configuration problem (exit 2).
pub fn is_runtime(e: &CoreError) -> bool {
    matches!(e, CoreError::IterationCap { .. } | CoreError::Numerical(_) | CoreError::NoStageCount { .. })
}

pub fn write_trace(path: &Path, format: Format, file: &TraceFile) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    file.write(&mut f, format)?;
    f.flush()?;
    Ok(())
}

pub fn header(hash: &str, config: BTreeMap<String, String>) -> TraceHeader {
    TraceHeader { model_sha256: hash.to_string(), seed: None, config }
}

pub fn certificates(model: &TotalCostModel, out: &RunOutcome, truth: Option<&GroundTruth>) -> Result<CertificateReport> {
    Ok(verify_certificates(model, &out.trace, truth)?)
}

pub fn labelled(model: &TotalCostModel, v: &[ExtReal]) -> String {
    (0..model.num_states()).map(|x| format!("{}={}", model.state(x).name, v[x])).collect::<Vec<_>>().join("  ")
}

pub fn run_checked(model: &TotalCostModel, config: &SolverConfig) -> Result<Result<RunOutcome, CoreError>> {
    config.check_applicable(model)?;
    config.validate(model)?;
    require_valid(model)?;
    Ok(run(model, config))
}
