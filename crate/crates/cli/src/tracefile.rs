//! Trace files in CSV or JSON.
//!
//! A CSV trace starts with two `#` lines holding JSON: the header, then the
//! trace metadata (initial point, notes, counters). One row per iteration
//! follows. Floats are written in shortest round-trip form, so reading a
//! trace back yields exactly the in-memory trace.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use totalcost::solvers::{Check, IterationTrace, TraceRecord};
use totalcost::{ExtReal, QVector, ValueVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub model_sha256: String,
    pub seed: Option<u64>,
    /// The solver settings as given on the command line.
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub trace: IterationTrace,
}

pub fn model_hash(text: &[u8]) -> String {
    hex::encode(Sha256::digest(text))
}

const COLUMNS: [&str; 13] = [
    "k",
    "residual",
    "dist_to_Jstar",
    "dist_to_Qstar",
    "above_optimal",
    "below_value_iterate",
    "policy",
    "B",
    "checks",
    "elapsed",
    "J",
    "Q",
    "improved",
];

fn ext(v: f64) -> String {
    ExtReal::new(v).to_string()
}

fn vector(v: &[ExtReal]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn opt<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map(f).unwrap_or_default()
}

fn parse_ext(s: &str) -> Result<f64> {
    Ok(s.parse::<ExtReal>()?.value())
}

fn parse_vector(s: &str) -> Result<Vec<ExtReal>> {
    s.split_whitespace().map(|t| t.parse::<ExtReal>().map_err(Into::into)).collect()
}

fn parse_opt<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}

fn parse_checks(s: &str) -> Result<Vec<Check>> {
    s.split(';')
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (name, v) = t.rsplit_once('=').ok_or_else(|| anyhow!("bad check entry `{t}`"))?;
            Ok(Check::new(name, v.parse::<bool>()?))
        })
        .collect()
}

fn row(r: &TraceRecord) -> Vec<String> {
    vec![
        r.k.to_string(),
        ext(r.residual),
        opt(&r.dist_j, |&v| ext(v)),
        opt(&r.dist_q, |&v| ext(v)),
        opt(&r.above_optimal, bool::to_string),
        opt(&r.below_value_iterate, bool::to_string),
        r.policy.clone(),
        r.b.clone(),
        r.checks.iter().map(|c| format!("{}={}", c.name, c.passed)).collect::<Vec<_>>().join(";"),
        r.elapsed.to_string(),
        vector(&r.j),
        opt(&r.q, |q| vector(q)),
        opt(&r.improved, |v| vector(v)),
    ]
}

fn record(fields: &csv::StringRecord) -> Result<TraceRecord> {
    if fields.len() != COLUMNS.len() {
        bail!("trace row has {} fields, expected {}", fields.len(), COLUMNS.len());
    }
    let f = |i: usize| &fields[i];
    let mut r = TraceRecord::new(f(0).parse()?, parse_ext(f(1))?, ValueVector(parse_vector(f(10))?));
    r.dist_j = parse_opt(f(2), parse_ext)?;
    r.dist_q = parse_opt(f(3), parse_ext)?;
    r.above_optimal = parse_opt(f(4), |s| Ok(s.parse()?))?;
    r.below_value_iterate = parse_opt(f(5), |s| Ok(s.parse()?))?;
    r.policy = f(6).to_string();
    r.b = f(7).to_string();
    r.checks = parse_checks(f(8))?;
    r.elapsed = f(9).parse()?;
    r.q = parse_opt(f(11), |s| Ok(QVector(parse_vector(s)?)))?;
    r.improved = parse_opt(f(12), |s| Ok(ValueVector(parse_vector(s)?)))?;
    Ok(r)
}

impl TraceFile {
    pub fn write(&self, out: &mut impl Write, format: Format) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut meta = IterationTrace::new(
                    self.trace.algorithm.clone(),
                    self.trace.regime,
                    self.trace.j0.clone(),
                    self.trace.q0.clone(),
                );
                meta.bound = self.trace.bound;
                meta.notes = self.trace.notes.clone();
                meta.counters = self.trace.counters;
                writeln!(out, "# header {}", serde_json::to_string(&self.header)?)?;
                writeln!(out, "# trace {}", serde_json::to_string(&meta)?)?;
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(COLUMNS)?;
                for r in self.trace.records() {
                    w.write_record(row(r))?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }

    pub fn read(input: impl BufRead, format: Format) -> Result<TraceFile> {
        match format {
            Format::Json => serde_json::from_reader(input).context("parsing JSON trace"),
            Format::Csv => {
                let mut lines = input.lines();
                let mut preamble = |tag: &str| -> Result<String> {
                    let line = lines.next().ok_or_else(|| anyhow!("trace ends before the {tag} line"))??;
                    line.strip_prefix(&format!("# {tag} "))
                        .map(str::to_string)
                        .ok_or_else(|| anyhow!("expected a `# {tag}` line, found `{line}`"))
                };
                let header: TraceHeader = serde_json::from_str(&preamble("header")?)?;
                let mut trace: IterationTrace = serde_json::from_str(&preamble("trace")?)?;
                let rest: String = lines.map(|l| l.map(|l| l + "\n")).collect::<std::io::Result<_>>()?;
                let mut rdr = csv::Reader::from_reader(rest.as_bytes());
                if rdr.headers()?.iter().ne(COLUMNS) {
                    bail!("unexpected CSV columns");
                }
                for fields in rdr.records() {
                    trace.push(record(&fields?)?)?;
                }
                Ok(TraceFile { header, trace })
            }
        }
    }
}
