use crate::error::Result;
use crate::ext_real::ExtReal;
use crate::model::{Regime, TotalCostModel};
use crate::operators::bellman_t;
use crate::vectors::{joint_dist, ValueVector};

use super::{GroundTruth, IterationTrace};

pub const CHECK_GEOMETRIC_RATE: &str = "geometric_rate";
pub const CHECK_INITIAL_DOMINANCE: &str = "initial_dominance";
pub const CHECK_SANDWICH: &str = "sandwich";
pub const CHECK_CONE: &str = "cone_precondition";
pub const CHECK_MEMBERSHIP: &str = "uniqueness_class";
pub const CHECK_CONVERGENCE: &str = "convergence";

/// Additive slack of the rate inequality.
const RATE_SLACK: f64 = 1e-12;
/// Relative slack of the ordered comparisons.
const ORDER_SLACK: f64 = 1e-12;
/// Final distance to ground truth accepted as convergence.
const CONVERGENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck {
    pub name: String,
    pub passed: bool,
    /// Worst-case slack of the checked inequality (negative on failure).
    pub margin: f64,
    /// A state at which the check fails, when one is identifiable.
    pub witness: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertificateReport {
    pub checks: Vec<CertificateCheck>,
    /// `max_{J*(x) > 0} J_0(x)/J*(x)` when finite.
    pub cone_constant: Option<f64>,
}

impl CertificateReport {
    pub fn get(&self, name: &str) -> Option<&CertificateCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.get(name).map(|c| c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, margin: f64, witness: Option<usize>, detail: String) {
        let passed = margin >= 0.0 && witness.is_none();
        self.checks.push(CertificateCheck { name: name.into(), passed, margin, witness, detail });
    }
}

/// Smallest `c ≥ 0` with `J ≤ c J*`, or a state where no finite `c` works
/// (`J(x) > 0 = J*(x)`, or `J(x) = ∞` with `J*(x)` finite).
pub fn cone_constant(j: &ValueVector, jstar: &ValueVector) -> std::result::Result<f64, usize> {
    let mut c = 0.0f64;
    for x in 0..j.len() {
        if jstar[x].is_pos_inf() || j[x] <= ExtReal::ZERO {
            continue;
        }
        if jstar[x] <= ExtReal::ZERO || j[x].is_pos_inf() {
            return Err(x);
        }
        c = c.max(j[x].value() / jstar[x].value());
    }
    Ok(c)
}

/// `a − b` with equal infinities at zero gap.
fn gap(a: ExtReal, b: ExtReal) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).value()
    }
}

fn scale_of(j: &ValueVector) -> f64 {
    j.iter().filter(|v| v.is_finite()).fold(1.0, |m, v| m.max(v.value().abs()))
}

/// Checks the convergence certificates that apply to the trace's regime.
pub fn verify_certificates(
    model: &TotalCostModel,
    trace: &IterationTrace,
    ground_truth: Option<&GroundTruth>,
) -> Result<CertificateReport> {
    let mut report = CertificateReport::default();
    let Some(gt) = ground_truth else { return Ok(report) };
    let jstar = &gt.jstar;
    let tol = ORDER_SLACK * scale_of(jstar);
    let records = trace.records();

    let pair_dist = |j: &ValueVector, q: Option<&crate::vectors::QVector>| match (q, &gt.qstar) {
        (Some(q), Some(qs)) => joint_dist(j, q, jstar, qs),
        _ => j.dist(jstar),
    };

    if model.regime() == Regime::Discounted {
        let alpha = model.discount();
        let d0 = pair_dist(&trace.j0, trace.q0.as_ref());
        let mut margin = f64::INFINITY;
        let mut worst_k = 0;
        for r in records {
            let d = pair_dist(&r.j, r.q.as_ref());
            let m = alpha.powi(r.k as i32) * d0 + RATE_SLACK - d;
            if m < margin {
                margin = m;
                worst_k = r.k;
            }
        }
        report.push(CHECK_GEOMETRIC_RATE, margin, None, format!("d0 = {d0:e}, tightest at k = {worst_k}"));
    } else {
        let mut dom = trace.j0.iter().zip(jstar.iter()).map(|(&a, &b)| gap(a, b)).fold(f64::INFINITY, f64::min);
        if let (Some(q0), Some(qs)) = (&trace.q0, &gt.qstar) {
            dom = dom.min(q0.iter().zip(qs.iter()).map(|(&a, &b)| gap(a, b)).fold(f64::INFINITY, f64::min));
        }
        report.push(CHECK_INITIAL_DOMINANCE, dom + tol, None, "J0 ≥ J*, Q0 ≥ Q*".into());
        if dom + tol >= 0.0 {
            let upper = matches!(trace.algorithm.as_str(), "vi" | "mixed" | "lp");
            let mut tk = trace.j0.clone();
            let mut k = 0;
            let mut margin = f64::INFINITY;
            let mut witness = None;
            for r in records {
                let lower = r.j.iter().zip(jstar.iter()).map(|(&a, &b)| gap(a, b));
                let mut m = lower.fold(f64::INFINITY, f64::min);
                if upper {
                    while k < r.k {
                        tk = bellman_t(model, &tk)?;
                        k += 1;
                    }
                    m = m.min(tk.iter().zip(r.j.iter()).map(|(&a, &b)| gap(a, b)).fold(f64::INFINITY, f64::min));
                }
                if m < margin {
                    margin = m;
                    witness = Some(r.k);
                }
            }
            let detail = match witness {
                Some(k) if margin < -tol => format!("violated at k = {k}"),
                _ => "J* ≤ J_k ≤ T^k(J0) at every record".into(),
            };
            report.push(CHECK_SANDWICH, margin + tol, None, detail);
        }
    }

    if model.regime() == Regime::Positive {
        let negative = (0..trace.j0.len()).find(|&x| trace.j0[x] < ExtReal::ZERO);
        match (negative, cone_constant(&trace.j0, jstar)) {
            (None, Ok(c)) => {
                report.cone_constant = Some(c);
                report.push(CHECK_CONE, 0.0, None, format!("0 ≤ J0 ≤ c J* with c = {c}"));
            }
            (Some(x), _) | (None, Err(x)) => report.push(
                CHECK_CONE,
                f64::NEG_INFINITY,
                Some(x),
                format!("J0({x}) = {} is not within c·J*({x}) = c·{} for any c", trace.j0[x], jstar[x]),
            ),
        }
        let bad = (0..jstar.len()).find(|&x| {
            !jstar[x].is_finite()
                || !trace.j0[x].is_finite()
                || trace.j0[x] < ExtReal::ZERO
                || (jstar[x] == ExtReal::ZERO && trace.j0[x] != ExtReal::ZERO)
        });
        let detail = match bad {
            Some(x) => format!("state {x}: J*({x}) = {}, J0({x}) = {}", jstar[x], trace.j0[x]),
            None => "J* and J0 real-valued, J0 = 0 on the zero set of J*".into(),
        };
        report.push(CHECK_MEMBERSHIP, 0.0, bad, detail);
    }

    if let Some(last) = trace.last() {
        let d = pair_dist(&last.j, last.q.as_ref());
        report.push(CHECK_CONVERGENCE, CONVERGENCE_TOL - d, None, format!("final distance {d:e}"));
    }
    Ok(report)
}
