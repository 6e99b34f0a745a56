//! Reference computations written directly from the model data, sharing
//! no code with the library's operators or evaluation routines.

#![allow(dead_code)]

use totalcost::{ExtReal, QVector, TotalCostModel, ValueVector};

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Cost of the nonrandomized policy `choices`, assuming every state other
/// than those in `fixed_zero` reaches them with probability one (or `α < 1`).
pub fn policy_value(model: &TotalCostModel, choices: &[usize], fixed_zero: &[usize]) -> Vec<f64> {
    let n = model.num_states();
    let alpha = model.discount();
    let free: Vec<usize> = (0..n).filter(|x| !fixed_zero.contains(x)).collect();
    let pos = |x: usize| free.iter().position(|&y| y == x);
    let m = free.len();
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (i, &x) in free.iter().enumerate() {
        let c = &model.controls(x)[choices[x]];
        a[i][i] += 1.0;
        b[i] = c.cost.value();
        for &(y, p) in &c.transitions {
            if let Some(jy) = pos(y) {
                a[i][jy] -= alpha * p;
            }
        }
    }
    let sol = solve_dense(a, b);
    let mut j = vec![0.0; n];
    for (i, &x) in free.iter().enumerate() {
        j[x] = sol[i];
    }
    j
}

/// `J*` as the elementwise minimum of `J_μ` over all nonrandomized
/// stationary policies. Valid for discounted models and for undiscounted
/// models in which state 0 is the only cost-free trap and every policy
/// reaches it with probability one.
pub fn enumerate_optimum(model: &TotalCostModel) -> ValueVector {
    let n = model.num_states();
    let fixed: Vec<usize> = if model.discount() < 1.0 { vec![] } else { vec![0] };
    let counts: Vec<usize> = (0..n).map(|x| model.controls(x).len()).collect();
    let mut best = vec![f64::INFINITY; n];
    let mut choice = vec![0usize; n];
    loop {
        let j = policy_value(model, &choice, &fixed);
        for x in 0..n {
            best[x] = best[x].min(j[x]);
        }
        let mut x = 0;
        loop {
            if x == n {
                return ValueVector::from_f64(&best);
            }
            choice[x] += 1;
            if choice[x] < counts[x] {
                break;
            }
            choice[x] = 0;
            x += 1;
        }
    }
}

pub fn control_q(model: &TotalCostModel, x: usize, u: usize, j: &[ExtReal]) -> ExtReal {
    let c = &model.controls(x)[u];
    let mut e = ExtReal::ZERO;
    for &(y, p) in &c.transitions {
        e += ExtReal::new(p) * j[y];
    }
    c.cost + ExtReal::new(model.discount()) * e
}

pub fn q_of(model: &TotalCostModel, j: &ValueVector) -> QVector {
    let mut out = Vec::new();
    for x in 0..model.num_states() {
        for u in 0..model.controls(x).len() {
            out.push(control_q(model, x, u, j));
        }
    }
    QVector(out)
}

pub fn t_of(model: &TotalCostModel, j: &ValueVector) -> ValueVector {
    ValueVector(
        (0..model.num_states())
            .map(|x| (0..model.controls(x).len()).map(|u| control_q(model, x, u, j)).min().unwrap())
            .collect(),
    )
}

pub fn t_mu_of(model: &TotalCostModel, choices: &[usize], j: &ValueVector) -> ValueVector {
    ValueVector((0..model.num_states()).map(|x| control_q(model, x, choices[x], j)).collect())
}

/// `F_θ(Q; J)` for a nonrandomized `μ` given by `choices` and membership `b`.
pub fn f_theta_of(model: &TotalCostModel, choices: &[usize], b: &[bool], q: &QVector, j: &ValueVector) -> QVector {
    let mut base = vec![0; model.num_states()];
    let mut acc = 0;
    for x in 0..model.num_states() {
        base[x] = acc;
        acc += model.controls(x).len();
    }
    let v: Vec<ExtReal> =
        (0..model.num_states()).map(|y| if b[y] { j[y].min(q[base[y] + choices[y]]) } else { j[y] }).collect();
    q_of(model, &ValueVector(v))
}

/// `Q_{θ,J}` as the limit of `F_θ^k(0; J)`, iterated `iters` times.
pub fn q_theta_of(model: &TotalCostModel, choices: &[usize], b: &[bool], j: &ValueVector, iters: usize) -> QVector {
    let mut q = QVector::zeros(model.num_pairs());
    for _ in 0..iters {
        q = f_theta_of(model, choices, b, &q, j);
    }
    q
}

/// `‖a − b‖∞` with equal infinities at distance zero.
pub fn sup(a: &[ExtReal], b: &[ExtReal]) -> f64 {
    a.iter().zip(b).map(|(x, y)| if x == y { 0.0 } else { (x.value() - y.value()).abs() }).fold(0.0, f64::max)
}

/// Elementwise `a ≤ b + slack·(1 + |b|)`.
pub fn le_rel(a: &[ExtReal], b: &[ExtReal], slack: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y || (y.is_finite() && x.value() - y.value() <= slack * (1.0 + y.value().abs())))
}
