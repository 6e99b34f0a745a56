//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Optimal costs are recomputed here by exhaustive policy enumeration with
//! a local Gaussian elimination, and the operators used as references are
//! written out from the raw model data in `common`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use totalcost::chain::state_marginal;
use totalcost::evaluation::policy_cost;
use totalcost::ftheta::{q_fixed_point, FixedPointOptions, Theta};
use totalcost::models::example51::{example51_t, example51_transfinite_level, TailConstantVector};
use totalcost::models::fixtures::fixture;
use totalcost::models::random::{random_model, RandomParams};
use totalcost::operators::{bellman_t, bellman_t_mu, h_backup};
use totalcost::solvers::*;
use totalcost::stopping::{build_stopping, lp_upper_bound, reconstruct_q, solve_stopping};
use totalcost::{Action, ExtReal, Policy, QVector, Regime, StateSet, TotalCostModel, ValueVector};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

const SUITE: u64 = 50;
const SUITE_STATES: usize = 6;

struct Case {
    label: String,
    model: TotalCostModel,
    jstar: ValueVector,
    qstar: QVector,
}

/// Oracle `J*`, with entries within `1e-12` of zero snapped to zero.
fn oracle_optimum(model: &TotalCostModel) -> ValueVector {
    enumerate_optimum(model).map(|v| if v.value().abs() < 1e-12 { ExtReal::ZERO } else { v })
}

fn case(label: String, model: TotalCostModel, jstar: ValueVector) -> Case {
    let qstar = q_of(&model, &jstar);
    Case { label, model, jstar, qstar }
}

fn random_suite(regime: Regime) -> Result<Vec<Case>, String> {
    (0..SUITE)
        .map(|seed| {
            let (model, lib) = ok(random_model(seed, &RandomParams::new(regime, SUITE_STATES)))?;
            let jstar = oracle_optimum(&model);
            ensure!(sup(&lib, &jstar) < 1e-9, "seed {seed}: library optimum disagrees with enumeration");
            Ok(case(format!("{}-seed{seed}", regime.code()), model, jstar))
        })
        .collect()
}

fn fixture_case(name: &str, jstar: ValueVector) -> Result<Case, String> {
    let fx = ok(fixture(name))?;
    ensure!(fx.jstar == jstar, "{name}: stored J* {:?} differs from oracle {:?}", fx.jstar, jstar);
    Ok(case(name.to_string(), fx.model, jstar))
}

fn truth(c: &Case) -> GroundTruth {
    GroundTruth { jstar: c.jstar.clone(), qstar: Some(c.qstar.clone()) }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<ExtReal> {
    (0..n).map(|_| ExtReal::new(rng.gen_range(lo..=hi))).collect()
}

fn c01() -> Outcome {
    let fx = ok(fixture("FX-N2"))?;
    let m = &fx.model;
    // Two stationary policies: stay costs 0 forever, go pays −1 once.
    let stay_cost = ValueVector::from_f64(&[0.0, 0.0]);
    let go_cost = ValueVector::from_f64(&[0.0, -1.0]);
    let jstar = ValueVector((0..2).map(|x| stay_cost[x].min(go_cost[x])).collect());
    ensure!(fx.jstar == jstar && jstar == ValueVector::from_f64(&[0.0, -1.0]), "J* = {:?}", fx.jstar);
    ensure!(ok(bellman_t(m, &jstar))? == jstar, "J* is not fixed by T");
    let stay = Policy::deterministic(m, &[0, 0]);
    let t_mu = ok(bellman_t_mu(m, &stay, &jstar))?;
    let t = ok(bellman_t(m, &jstar))?;
    ensure!(t_mu == t && t_mu_of(m, &[0, 0], &jstar) == t_of(m, &jstar), "T_μ(J*) ≠ T(J*)");
    let jmu = ok(policy_cost(m, &stay))?;
    ensure!(jmu == stay_cost, "J_stay = {jmu:?}");
    Ok(format!("J* = {jstar:?}, J_stay = {jmu:?}"))
}

fn c02() -> Outcome {
    let fx = ok(fixture("FX-P2"))?;
    let m = &fx.model;
    let jstar = ValueVector::from_f64(&[0.0, 0.0]);
    ensure!(fx.jstar == jstar, "J* = {:?}", fx.jstar);
    let go = Policy::deterministic(m, &[0, 1]);
    let gt = GroundTruth { jstar: jstar.clone(), qstar: Some(q_of(m, &jstar)) };
    let cfg = SolverConfig { ground_truth: Some(gt.clone()), ..SolverConfig::new(Algorithm::PolicyIteration) };
    let pi = ok(policy_iteration(m, &go, &cfg))?;
    ensure!(pi.termination == PiTermination::Stuck, "PI terminated {:?}", pi.termination);
    ensure!(pi.values.last() == Some(&ValueVector::from_f64(&[0.0, 1.0])), "PI value {:?}", pi.values.last());

    let zero = ValueVector::zeros(2);
    let cfg = SolverConfig {
        j0: Some(zero.clone()),
        q0: Some(ok(h_backup(m, &zero))?),
        initial_policy: Some(go),
        ground_truth: Some(gt.clone()),
        max_iter: 5,
        ..SolverConfig::default()
    };
    let mixed = ok(mixed_vpi(m, &cfg))?;
    let last = mixed.trace.last().ok_or("empty trace")?;
    ensure!(mixed.trace.len() <= 5 && last.residual < 1e-10, "residual {} after {} iterations", last.residual, mixed.trace.len());
    let (j, q) = (mixed.js.last().unwrap(), mixed.qs.last().unwrap());
    ensure!(sup(j, &gt.jstar) < 1e-10 && sup(q, gt.qstar.as_ref().unwrap()) < 1e-10, "mixed limit ({j:?}, {q:?})");
    Ok(format!("PI stuck at (0, 1); mixed reached (J*, Q*) in {} iteration(s)", mixed.trace.len()))
}

fn c03() -> Outcome {
    let fx = ok(fixture("FX-P3a"))?;
    let m = &fx.model;
    let inf = ExtReal::INFINITY;
    let jstar = ValueVector(vec![ExtReal::ZERO, inf, ExtReal::ONE]);
    ensure!(fx.jstar == jstar, "stored J* {:?}", fx.jstar);
    ensure!(ok(bellman_t(m, &jstar))? == jstar, "T does not fix (0, ∞, 1)");
    let (j, trace) = ok(value_iteration(m, &ValueVector::zeros(3), &SolverConfig::default()))?;
    ensure!(trace.records().iter().all(|r| r.j[2] == ExtReal::ZERO), "T^k(0)(2) ≠ 0 for some k");
    ensure!(j == ValueVector(vec![ExtReal::ZERO, inf, ExtReal::ZERO]), "J_∞ = {j:?}");
    let gap = (jstar[2] - j[2]).value();
    ensure!(gap == 1.0, "gap {gap}");
    Ok(format!("J_∞ = {j:?}, J*(2) − J_∞(2) = {gap}"))
}

fn c04() -> Outcome {
    let fx = ok(fixture("FX-P3b"))?;
    let m = &fx.model;
    let jmu_expected = ValueVector::from_f64(&[0.0, 1.0, 2.0]);
    for i in 1..=9 {
        let t = i as f64 / 10.0;
        let mu = Policy::new(vec![Action::Mixed(vec![1.0]), Action::Affine { family: 0, t }, Action::Mixed(vec![1.0])]);
        let jmu = ok(policy_cost(m, &mu))?;
        ensure!(jmu == jmu_expected, "u = {t}: J_μ = {jmu:?}");
        ensure!(ok(bellman_t(m, &jmu))? == jmu, "u = {t}: T(J_μ) ≠ J_μ");
    }
    let jstar = ValueVector::from_f64(&[0.0, 0.0, 1.0]);
    ensure!(fx.jstar == jstar, "stored J* {:?}", fx.jstar);
    let mut j = ValueVector::zeros(3);
    for k in 1..=20 {
        j = ok(bellman_t(m, &j))?;
        ensure!(j == jstar, "T^{k}(0) = {j:?}");
    }
    Ok("J_μ = (0, 1, 2) for all nine u; T^k(0) = (0, 0, 1) for k ≥ 1".into())
}

fn discounted_cases() -> Result<Vec<Case>, String> {
    let fx = ok(fixture("FX-D"))?;
    let jstar = oracle_optimum(&fx.model);
    ensure!(sup(&fx.jstar, &jstar) < 1e-12, "FX-D stored J* differs from enumeration");
    let mut cases = vec![case("FX-D".into(), fx.model, jstar)];
    cases.extend(random_suite(Regime::Discounted)?);
    Ok(cases)
}

fn c05() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut runs = 0;
    for c in discounted_cases()? {
        let m = &c.model;
        let alpha = m.discount();
        for schedule in [NSchedule::Constant(1), NSchedule::Constant(4), NSchedule::Exact] {
            let j0 = ValueVector(random_vector(&mut rng, m.num_states(), -10.0, 10.0));
            let q0 = QVector(random_vector(&mut rng, m.num_pairs(), -10.0, 10.0));
            let cfg = SolverConfig {
                j0: Some(j0.clone()),
                q0: Some(q0.clone()),
                n_schedule: schedule.clone(),
                fixed_iterations: Some(100),
                track_bounds: false,
                ..SolverConfig::default()
            };
            let out = ok(mixed_vpi(m, &cfg))?;
            let d0 = sup(&j0, &c.jstar).max(sup(&q0, &c.qstar));
            for k in 0..out.js.len() {
                let d = sup(&out.js[k], &c.jstar).max(sup(&out.qs[k], &c.qstar));
                let margin = alpha.powi(k as i32) * d0 + 1e-12 - d;
                worst = worst.min(margin);
                ensure!(margin >= 0.0, "{} {:?} k = {k}: distance {d:e} exceeds α^k·{d0:e}", c.label, schedule);
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs × 100 iterations, worst margin {worst:e}"))
}

fn c06() -> Outcome {
    let mut cases = vec![fixture_case("FX-N2", ValueVector::from_f64(&[0.0, -1.0]))?];
    cases.extend(random_suite(Regime::Negative)?);
    let mut worst = 0.0f64;
    for (i, c) in cases.iter().enumerate() {
        let m = &c.model;
        let slack = if i == 0 { 0.0 } else { 1e-12 };
        let cfg = SolverConfig {
            j0: Some(ValueVector::zeros(m.num_states())),
            q0: Some(QVector::zeros(m.num_pairs())),
            tol: 1e-12,
            ..SolverConfig::default()
        };
        let out = ok(mixed_vpi(m, &cfg))?;
        let mut tk = ValueVector::zeros(m.num_states());
        for (k, j) in out.js.iter().enumerate().skip(1) {
            tk = t_of(m, &tk);
            ensure!(le_rel(&c.jstar, j, slack), "{} k = {k}: J* ≤ J_k fails", c.label);
            ensure!(le_rel(j, &tk, slack), "{} k = {k}: J_k ≤ T^k(0) fails", c.label);
        }
        let d = sup(out.js.last().unwrap(), &c.jstar).max(sup(out.qs.last().unwrap(), &c.qstar));
        ensure!(d < 1e-9, "{}: final distance {d:e}", c.label);
        worst = worst.max(d);
    }
    Ok(format!("{} models, sandwich held throughout, worst final distance {worst:e}", cases.len()))
}

fn positive_cases(with_fixture: bool) -> Result<Vec<Case>, String> {
    let mut cases = Vec::new();
    if with_fixture {
        let fx = ok(fixture("FX-P4"))?;
        cases.push(fixture_case("FX-P4", oracle_optimum(&fx.model))?);
    }
    cases.extend(random_suite(Regime::Positive)?);
    Ok(cases)
}

fn c07() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolverConfig { tol: 1e-13, max_iter: 100_000, ..SolverConfig::default() };
    let cases = positive_cases(true)?;
    for (i, c) in cases.iter().enumerate() {
        let m = &c.model;
        let slack = if i == 0 { 0.0 } else { 1e-12 };
        let j0 = c.jstar.scaled(1.5);
        let (j, trace) = ok(value_iteration(m, &j0, &cfg))?;
        let seq = trace.j_sequence();
        for (k, w) in seq.windows(2).enumerate() {
            ensure!(le_rel(&w[1], &w[0], slack), "{}: T^k(1.5 J*) increases at k = {}", c.label, k + 1);
        }
        ensure!(sup(&seq[1], &t_of(m, &j0)) < 1e-12, "{}: first iterate differs from reference T", c.label);
        ensure!(sup(&j, &c.jstar) < 1e-9, "{}: VI from 1.5 J* ends at distance {:e}", c.label, sup(&j, &c.jstar));
        for _ in 0..3 {
            let start = ValueVector((0..m.num_states()).map(|x| j0[x].scale(rng.gen_range(0.0..=1.0))).collect());
            let (j, _) = ok(value_iteration(m, &start, &cfg))?;
            ensure!(sup(&j, &c.jstar) < 1e-9, "{}: VI from J ∈ [0, 1.5 J*] ends at distance {:e}", c.label, sup(&j, &c.jstar));
        }
    }

    let fx = ok(fixture("FX-P2"))?;
    let gt = GroundTruth { jstar: fx.jstar.clone(), qstar: None };
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let j = ValueVector::from_f64(&[0.0, t]);
        ensure!(t_of(&fx.model, &j) == j, "(0, {t}) is not a fixed point of T");
        let (_, trace) = ok(value_iteration(&fx.model, &j, &SolverConfig::default()))?;
        let report = ok(verify_certificates(&fx.model, &trace, Some(&gt)))?;
        let cone = report.get(CHECK_CONE).ok_or("no cone check")?;
        if i == 0 {
            ensure!(cone.passed, "(0, 0) flagged outside the cone");
        } else {
            ensure!(!cone.passed && cone.witness == Some(1), "(0, {t}) not flagged at state 1: {cone:?}");
        }
    }
    Ok(format!("{} models monotone to J*; FX-P2 fixed points (0, t > 0) all flagged at state 1", cases.len()))
}

fn c08() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = SolverConfig { tol: 1e-13, max_iter: 100_000, ..SolverConfig::default() };
    let mut worst = 0.0f64;
    for c in positive_cases(false)? {
        let m = &c.model;
        let gt = GroundTruth { jstar: c.jstar.clone(), qstar: None };
        for _ in 0..3 {
            let start = ValueVector(
                (0..m.num_states())
                    .map(|x| if c.jstar[x] == ExtReal::ZERO { ExtReal::ZERO } else { ExtReal::new(rng.gen_range(0.0..=10.0)) })
                    .collect(),
            );
            let (j, trace) = ok(value_iteration(m, &start, &cfg))?;
            let report = ok(verify_certificates(m, &trace, Some(&gt)))?;
            ensure!(report.passed(CHECK_MEMBERSHIP) == Some(true), "{}: start not recognised as a member", c.label);
            let d = sup(&j, &c.jstar);
            ensure!(d < 1e-8, "{}: distance {d:e}", c.label);
            worst = worst.max(d);
        }
    }
    Ok(format!("{} runs, worst distance {worst:e}", 3 * SUITE))
}

fn c09() -> Outcome {
    let mut worst = 0.0f64;
    let mut lp_iters = 0;
    for c in positive_cases(false)? {
        let m = &c.model;
        let j0 = c.jstar.scaled(1.5);
        let cfg = SolverConfig {
            j0: Some(j0.clone()),
            q0: Some(q_of(m, &j0)),
            ground_truth: Some(truth(&c)),
            tol: 1e-12,
            ..SolverConfig::default()
        };
        let mixed = ok(mixed_vpi(m, &cfg))?;
        let d = sup(mixed.js.last().unwrap(), &c.jstar).max(sup(mixed.qs.last().unwrap(), &c.qstar));
        ensure!(d < 1e-8, "{}: mixed ends at distance {d:e}", c.label);
        worst = worst.max(d);

        let lp = ok(lp_variant_vpi(m, &cfg))?;
        let d = sup(&lp.j, &c.jstar).max(sup(&lp.q, &c.qstar));
        ensure!(d < 1e-8, "{}: LP variant ends at distance {d:e}", c.label);
        worst = worst.max(d);
        for r in lp.trace.records() {
            ensure!(r.check(CHECK_LP_UPPER) == Some(true), "{} k = {}: Q ≤ F_θ(Q; J) fails", c.label, r.k);
            ensure!(r.check(CHECK_LP_LOWER) == Some(true), "{} k = {}: Q ≥ Q_θ,J fails", c.label, r.k);
            ensure!(r.check(CHECK_WITHIN_CONE) == Some(true), "{} k = {}: recorded cone check fails", c.label, r.k);
            ensure!(le_rel(&r.j, &j0, 1e-12), "{} k = {}: J_k ≤ 1.5 J* fails", c.label, r.k);
        }
        lp_iters += lp.trace.len();
    }
    Ok(format!("worst final distance {worst:e}; LP inequalities held over {lp_iters} iterations"))
}

fn random_theta(rng: &mut ChaCha8Rng, m: &TotalCostModel, randomized: bool) -> (Theta, Vec<usize>) {
    let choices: Vec<usize> = (0..m.num_states()).map(|x| rng.gen_range(0..m.controls(x).len())).collect();
    let policy = if randomized && rng.gen_bool(0.5) {
        Policy::new(
            (0..m.num_states())
                .map(|x| {
                    let w: Vec<f64> = (0..m.controls(x).len()).map(|_| rng.gen_range(0.1..1.0)).collect();
                    let s: f64 = w.iter().sum();
                    Action::Mixed(w.iter().map(|v| v / s).collect())
                })
                .collect(),
        )
    } else {
        Policy::deterministic(m, &choices)
    };
    let b = StateSet((0..m.num_states()).map(|_| rng.gen_bool(0.5)).collect());
    (Theta::new(policy, b), choices)
}

fn c10() -> Outcome {
    let opts = FixedPointOptions { tol: 1e-12, max_iter: 1_000_000 };
    let mut worst = 0.0f64;
    for regime in [Regime::Discounted, Regime::Negative, Regime::Positive] {
        let (lo, hi) = match regime {
            Regime::Discounted => (-5.0, 5.0),
            Regime::Negative => (-5.0, 0.0),
            Regime::Positive => (0.0, 5.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for seed in 0..100 {
            let (m, _) = ok(random_model(1000 + seed, &RandomParams::new(regime, 5)))?;
            let jstar = oracle_optimum(&m);
            let qstar = q_of(&m, &jstar);
            let (theta, _) = random_theta(&mut rng, &m, true);
            let j = ValueVector(random_vector(&mut rng, m.num_states(), lo, hi));
            for (label, jj) in [("random J", &j), ("J*", &jstar)] {
                let problem = ok(build_stopping(&m, &theta, jj))?;
                let sol = ok(solve_stopping(&problem, &opts))?;
                let rq = ok(reconstruct_q(&problem, &sol.v, &m))?;
                let (fq, _) = ok(q_fixed_point(&m, &theta, jj, &opts))?;
                let d = sup(&rq, &fq);
                ensure!(d < 1e-9, "{regime} seed {seed} ({label}): stopping route and fixed point differ by {d:e}");
                worst = worst.max(d);
                if label == "J*" {
                    let e = sup(&rq, &qstar).max(sup(&fq, &qstar));
                    ensure!(e < 1e-9, "{regime} seed {seed}: Q_θ,J* differs from Q* by {e:e}");
                    worst = worst.max(e);
                }
            }
        }
    }
    Ok(format!("300 triples, worst discrepancy {worst:e}"))
}

fn c11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    for seed in 0..100 {
        let (m, _) = ok(random_model(2000 + seed, &RandomParams::new(Regime::Positive, 5)))?;
        let (theta, choices) = random_theta(&mut rng, &m, false);
        let j = ValueVector(random_vector(&mut rng, m.num_states(), 0.0, 5.0));
        let bound = ok(lp_upper_bound(&m, &theta, &j, None))?;
        let q_bar = &bound.q_bar;
        let q_theta = q_theta_of(&m, &choices, &theta.b.0, &j, 3000);
        let f_bar = f_theta_of(&m, &choices, &theta.b.0, q_bar, &j);
        for i in 0..q_bar.len() {
            let lower = (q_bar[i] - q_theta[i]).value();
            let upper = (f_bar[i] - q_bar[i]).value();
            worst = worst.min(lower).min(upper);
            ensure!(lower >= -1e-10, "seed {seed} pair {i}: Q̄ below Q_θ,J by {:e}", -lower);
            ensure!(upper >= -1e-10, "seed {seed} pair {i}: Q̄ above F_θ(Q̄; J) by {:e}", -upper);
        }
    }
    Ok(format!("100 triples, worst margin {worst:e}"))
}

fn c12() -> Outcome {
    let fx = ok(fixture("FX-D"))?;
    let m = &fx.model;
    let n = m.num_states();
    let schedule = NSchedule::Constant(5);
    let start = ValueVector::from_f64(&[4.0, -3.0, 1.5]);
    let mpi_cfg = SolverConfig { fixed_iterations: Some(30), ..SolverConfig::default() };
    let mpi = ok(modified_policy_iteration(m, None, &start, &schedule, &mpi_cfg))?;
    let inf = ValueVector::constant(n, ExtReal::INFINITY);
    let mixed_cfg = SolverConfig {
        j0: Some(inf.clone()),
        q0: Some(ok(h_backup(m, &start))?),
        clamp_lo: Some(inf),
        n_schedule: schedule,
        b_strategy: BStrategy::Full,
        epsilon: 0.0,
        fixed_iterations: Some(30),
        track_bounds: false,
        ..SolverConfig::default()
    };
    let mixed = ok(mixed_vpi(m, &mixed_cfg))?;
    ensure!(mpi.trace.len() == 30 && mixed.trace.len() == 30, "run lengths {} and {}", mpi.trace.len(), mixed.trace.len());
    let mut worst = 0.0f64;
    for (a, b) in mpi.trace.records().iter().zip(mixed.trace.records()) {
        let d = sup(a.improved.as_ref().unwrap(), b.improved.as_ref().unwrap());
        worst = worst.max(d);
        ensure!(d <= 1e-12, "k = {}: sequences differ by {d:e}", a.k);
        ensure!(a.policy == b.policy, "k = {}: policies {} vs {}", a.k, a.policy, b.policy);
    }
    Ok(format!("30 iterations, largest difference {worst:e}"))
}

fn c13() -> Outcome {
    let mut j = TailConstantVector::zero();
    for k in 1..=8u64 {
        j = example51_t(&j);
        let mut prefix = vec![0];
        prefix.extend(std::iter::repeat_n(1, k as usize));
        let expected = TailConstantVector::from_u64(&prefix, 0);
        ensure!(j == expected, "T^{k}(0) = {j}, expected {expected}");
    }
    let mut prev = ok(example51_transfinite_level(0, 1000))?;
    ensure!(prev == TailConstantVector::from_u64(&[0], 1), "J_∞0 = {prev}");
    for m in 1..=11u64 {
        let next = ok(example51_transfinite_level(m as usize, 1000))?;
        ensure!(next == prev.plus(1), "J_∞{m} = {next} is not J_∞{} + 1", m - 1);
        ensure!(next == TailConstantVector::from_u64(&[m], m + 1), "J_∞{m} = {next}");
        prev = next;
    }
    Ok(format!("T^k(0) pattern for k ≤ 8; J_∞11 = {prev}"))
}

fn c14() -> Outcome {
    let eps = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cases: Vec<Case> = discounted_cases()?.into_iter().take(11).collect();
    let mut worst = f64::INFINITY;
    for c in &cases {
        let m = &c.model;
        let alpha = m.discount();
        let j0 = ValueVector(random_vector(&mut rng, m.num_states(), -10.0, 10.0));
        let q0 = QVector(random_vector(&mut rng, m.num_pairs(), -10.0, 10.0));
        let delta = sup(&j0, &c.jstar).max(sup(&q0, &c.qstar));
        let cfg = SolverConfig {
            j0: Some(j0),
            q0: Some(q0),
            n_schedule: NSchedule::Constant(2),
            fixed_iterations: Some(100),
            track_bounds: false,
            ..SolverConfig::default()
        };
        let out = ok(mixed_vpi(m, &cfg))?;
        for (k, q) in out.qs.iter().enumerate() {
            let (nu, bound) = ok(extract_policy_discounted(m, q, eps, Some((k, delta))))?;
            let bound = bound.unwrap();
            let choices = nu.choices().ok_or("extracted policy is randomized")?;
            let jnu = ValueVector::from_f64(&policy_value(m, &choices, &[]));
            let err = sup(&jnu, &c.jstar);
            worst = worst.min(bound + 1e-9 - err);
            ensure!(err <= bound + 1e-9, "{} k = {k}: ‖J_ν − J*‖ = {err:e} > bound {bound:e}", c.label);
            if k == 100 {
                ensure!(err <= eps / (1.0 - alpha) + 1e-9, "{}: limsup bound fails at k = 100 ({err:e})", c.label);
            }
        }
    }
    Ok(format!("{} models × 101 extractions, worst margin {worst:e}", cases.len()))
}

fn c15() -> Outcome {
    let mut cases = positive_cases(true)?;
    let mut worst = 0.0f64;
    for (i, c) in cases.iter_mut().enumerate() {
        let m = &c.model;
        let horizon = if i == 0 { 2 } else { 300 };
        let choices: Vec<usize> = (0..m.num_states())
            .map(|x| {
                let r = m.pair_range(x);
                (0..r.len()).min_by(|&a, &b| c.qstar[r.start + a].cmp(&c.qstar[r.start + b])).unwrap()
            })
            .collect();
        let policy = Policy::deterministic(m, &choices);
        let n = m.num_states();
        let init = vec![1.0 / n as f64; n];
        let mut p = init.clone();
        for step in 1..=horizon + 5 {
            let mut next = vec![0.0; n];
            for x in 0..n {
                for &(y, pr) in &m.controls(x)[choices[x]].transitions {
                    next[y] += p[x] * pr;
                }
            }
            p = next;
            if step >= horizon {
                let lib = ok(state_marginal(m, &policy, &init, step))?;
                ensure!(lib.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12), "{}: marginals disagree", c.label);
                let e: f64 = (0..n).map(|x| p[x] * c.jstar[x].value()).sum();
                worst = worst.max(e);
                ensure!(e < 1e-6, "{} n = {step}: E J*(x_n) = {e:e}", c.label);
            }
        }
    }
    Ok(format!("{} models, largest E J*(x_n) past the horizon {worst:e}", cases.len()))
}

fn c16() -> Outcome {
    let fx = ok(fixture("FX-D"))?;
    let c = case("FX-D".into(), fx.model.clone(), oracle_optimum(&fx.model));
    let m = &c.model;
    let cfg = SolverConfig {
        masks: Some(MaskSchedule::RoundRobin),
        n_schedule: NSchedule::Constant(1),
        tol: 1e-12,
        max_iter: 1_000_000,
        track_bounds: false,
        ..SolverConfig::default()
    };
    let asynchronous = ok(mixed_vpi(m, &cfg))?;
    let (ja, qa) = (asynchronous.js.last().unwrap(), asynchronous.qs.last().unwrap());
    let d = sup(ja, &c.jstar).max(sup(qa, &c.qstar));
    ensure!(d < 1e-9, "asynchronous limit at distance {d:e}");
    let sync = ok(mixed_vpi(m, &SolverConfig { tol: 1e-12, ..SolverConfig::default() }))?;
    let ds = sup(sync.js.last().unwrap(), ja).max(sup(sync.qs.last().unwrap(), qa));
    ensure!(ds < 1e-9, "asynchronous and synchronous limits differ by {ds:e}");
    Ok(format!("{} masked updates, distance to (J*, Q*) {d:e}", asynchronous.trace.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 16] = [
        ("01 nonpositive two-state model: unimprovable stay policy", c01),
        ("02 nonnegative two-state model: PI stuck, mixed method converges", c02),
        ("03 affine controls: value iteration limit below J*", c03),
        ("04 affine family: every J_μ is a fixed point of T", c04),
        ("05 discounted geometric rate", c05),
        ("06 nonpositive sandwich and convergence", c06),
        ("07 nonnegative monotone VI and cone discrimination", c07),
        ("08 nonnegative VI from the uniqueness class", c08),
        ("09 nonnegative mixed and LP variant convergence", c09),
        ("10 stopping reformulation matches Q_θ,J", c10),
        ("11 LP bound brackets Q_θ,J", c11),
        ("12 mixed method reproduces modified policy iteration", c12),
        ("13 transfinite value iteration", c13),
        ("14 discounted policy extraction bound", c14),
        ("15 optimal cost at the state vanishes along a near-optimal policy", c15),
        ("16 asynchronous round-robin updates", c16),
    ];
    let started = Instant::now();
    let mut failures = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{detail}] ({secs:.2}s)"),
            Err(why) => {
                failures += 1;
                println!("FAIL  {name}  [{why}] ({secs:.2}s)");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed in {:.1}s",
        criteria.len() - failures,
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
