//! Graph analysis of models and policy-induced chains: strongly connected
//! components, end components, divergence classification, marginals and
//! occupation measures.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{check_len, Error, Result};
use crate::ext_real::ExtReal;
use crate::model::{Regime, TotalCostModel};
use crate::policy::{Action, Policy};
use crate::vectors::StateSet;

/// Sparse row-stochastic kernel: `rows[x]` lists `(successor, probability)`.
pub type Kernel = Vec<Vec<(usize, f64)>>;

/// Transition kernel `κ(·|x)` induced by a stationary policy.
pub fn induced_kernel(model: &TotalCostModel, policy: &Policy) -> Result<Kernel> {
    policy.validate(model)?;
    let n = model.num_states();
    let rows = (0..n)
        .map(|x| {
            let mut dense: Vec<(usize, f64)> = Vec::new();
            let mut add = |y: usize, p: f64| {
                if p == 0.0 {
                    return;
                }
                match dense.iter_mut().find(|(z, _)| *z == y) {
                    Some(e) => e.1 += p,
                    None => dense.push((y, p)),
                }
            };
            match policy.action(x) {
                Action::Mixed(_) => {
                    for (u, w) in policy.support(x) {
                        for &(y, p) in &model.controls(x)[u].transitions {
                            add(y, w * p);
                        }
                    }
                }
                Action::Affine { family, t } => {
                    for (y, p) in model.families(x)[*family].transitions_at(*t) {
                        add(y, p);
                    }
                }
            }
            dense
        })
        .collect();
    Ok(rows)
}

/// Expected one-stage cost at each state under a stationary policy.
pub fn policy_costs(model: &TotalCostModel, policy: &Policy) -> Vec<ExtReal> {
    (0..model.num_states())
        .map(|x| match policy.action(x) {
            Action::Mixed(_) => policy
                .support(x)
                .into_iter()
                .map(|(u, w)| ExtReal::new(w) * model.controls(x)[u].cost)
                .sum(),
            Action::Affine { family, t } => ExtReal::new(model.families(x)[*family].cost_at(*t)),
        })
        .collect()
}

/// Strongly connected components of a directed graph given by successor
/// lists, in reverse topological order (sink components first).
pub fn strongly_connected(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(succ.len(), 0);
    let nodes: Vec<_> = (0..succ.len()).map(|_| g.add_node(())).collect();
    for (x, ys) in succ.iter().enumerate() {
        for &y in ys {
            g.add_edge(nodes[x], nodes[y], ());
        }
    }
    tarjan_scc(&g).into_iter().map(|c| c.into_iter().map(|n| n.index()).collect()).collect()
}

/// States from which some state in `target` is reachable (including `target`).
pub fn can_reach(succ: &[Vec<usize>], target: &[bool]) -> Vec<bool> {
    let n = succ.len();
    let mut pred = vec![Vec::new(); n];
    for (x, ys) in succ.iter().enumerate() {
        for &y in ys {
            pred[y].push(x);
        }
    }
    let mut seen = target.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&x| target[x]).collect();
    while let Some(y) = stack.pop() {
        for &x in &pred[y] {
            if !seen[x] {
                seen[x] = true;
                stack.push(x);
            }
        }
    }
    seen
}

fn support_graph(kernel: &Kernel) -> Vec<Vec<usize>> {
    kernel.iter().map(|row| row.iter().filter(|(_, p)| *p > 0.0).map(|&(y, _)| y).collect()).collect()
}

/// `D̄ = {x ∈ B : κ^n(S∖B | x) = 0 for all n ≥ 1}`.
pub fn absorbing_core(model: &TotalCostModel, policy: &Policy, b: &StateSet) -> Result<StateSet> {
    check_len(model.num_states(), b.universe())?;
    let succ = support_graph(&induced_kernel(model, policy)?);
    let outside: Vec<bool> = b.0.iter().map(|&m| !m).collect();
    let leaks = can_reach(&succ, &outside);
    Ok(StateSet((0..succ.len()).map(|x| b.contains(x) && !leaks[x]).collect()))
}

/// Distribution of `x_n` under the policy from `initial`.
pub fn state_marginal(model: &TotalCostModel, policy: &Policy, initial: &[f64], n: usize) -> Result<Vec<f64>> {
    check_len(model.num_states(), initial.len())?;
    let kernel = induced_kernel(model, policy)?;
    let mut p = initial.to_vec();
    for _ in 0..n {
        let mut next = vec![0.0; p.len()];
        for (x, row) in kernel.iter().enumerate() {
            if p[x] == 0.0 {
                continue;
            }
            for &(y, q) in row {
                next[y] += p[x] * q;
            }
        }
        p = next;
    }
    Ok(p)
}

/// β-discounted occupation measure `p = (1−β)Σ β^n ρᵀκ^n`, obtained by
/// solving `(I − βκᵀ) p = (1−β) ρ`.
pub fn occupation_measure(model: &TotalCostModel, policy: &Policy, rho: &[f64], beta: f64) -> Result<Vec<f64>> {
    let n = model.num_states();
    check_len(n, rho.len())?;
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("β = {beta} must lie in [0, 1)")));
    }
    let kernel = induced_kernel(model, policy)?;
    let mut a = DMatrix::<f64>::identity(n, n);
    for (x, row) in kernel.iter().enumerate() {
        for &(y, q) in row {
            a[(y, x)] -= beta * q;
        }
    }
    let rhs = DVector::from_iterator(n, rho.iter().map(|r| (1.0 - beta) * r));
    let p = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("occupation-measure system is singular".into()))?;
    Ok(p.iter().copied().collect())
}

/// One action of a qualitative MDP: its cost and the support of its
/// successor distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphAction {
    pub cost: ExtReal,
    pub succ: Vec<usize>,
}

/// Qualitative view of an MDP used for divergence classification.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionGraph {
    pub actions: Vec<Vec<GraphAction>>,
}

impl ActionGraph {
    /// The model's atomic controls plus, for each affine family, the two
    /// endpoint limits of its parameter interval (closed or not).
    pub fn closure_of(model: &TotalCostModel) -> Self {
        let actions = model
            .states()
            .iter()
            .map(|s| {
                let mut acts: Vec<GraphAction> = s
                    .controls
                    .iter()
                    .map(|c| GraphAction {
                        cost: c.cost,
                        succ: c.transitions.iter().filter(|(_, p)| *p > 0.0).map(|&(y, _)| y).collect(),
                    })
                    .collect();
                for f in &s.families {
                    for t in [f.interval.lo, f.interval.hi] {
                        acts.push(GraphAction {
                            cost: ExtReal::new(f.cost_at(t)),
                            succ: f.transitions.iter().filter(|tr| tr.prob_at(t) > 0.0).map(|tr| tr.state).collect(),
                        });
                    }
                }
                acts
            })
            .collect();
        ActionGraph { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Maximal end components of the sub-MDP restricted to actions accepted
    /// by `allowed`. Returns, per state, the component index (if any) and the
    /// actions that keep the process inside it.
    pub fn end_components(&self, allowed: impl Fn(&GraphAction) -> bool) -> (Vec<Option<usize>>, Vec<Vec<usize>>) {
        let n = self.len();
        let mut avail: Vec<Vec<usize>> = self
            .actions
            .iter()
            .map(|acts| (0..acts.len()).filter(|&a| allowed(&acts[a])).collect())
            .collect();
        let mut alive: Vec<bool> = avail.iter().map(|a| !a.is_empty()).collect();
        loop {
            let succ: Vec<Vec<usize>> = (0..n)
                .map(|x| {
                    if !alive[x] {
                        return Vec::new();
                    }
                    avail[x].iter().flat_map(|&a| self.actions[x][a].succ.iter().copied()).collect()
                })
                .collect();
            let mut comp = vec![usize::MAX; n];
            for (i, c) in strongly_connected(&succ).iter().enumerate() {
                for &x in c {
                    comp[x] = i;
                }
            }
            let mut changed = false;
            for x in 0..n {
                if !alive[x] {
                    continue;
                }
                let before = avail[x].len();
                avail[x].retain(|&a| self.actions[x][a].succ.iter().all(|&y| alive[y] && comp[y] == comp[x]));
                if avail[x].len() != before {
                    changed = true;
                }
                if avail[x].is_empty() {
                    alive[x] = false;
                    changed = true;
                }
            }
            if !changed {
                let ids = (0..n).map(|x| alive[x].then_some(comp[x])).collect();
                return (ids, avail);
            }
        }
    }

    /// States from which `target` is reached with probability one under
    /// some strategy using only actions accepted by `allowed`.
    pub fn almost_sure_reach(&self, target: &[bool], allowed: impl Fn(&GraphAction) -> bool) -> Vec<bool> {
        let n = self.len();
        let mut region = vec![true; n];
        loop {
            let mut reach = target.to_vec();
            let mut grew = true;
            while grew {
                grew = false;
                for x in 0..n {
                    if reach[x] || !region[x] {
                        continue;
                    }
                    let ok = self.actions[x].iter().any(|a| {
                        allowed(a) && a.succ.iter().all(|&y| region[y]) && a.succ.iter().any(|&y| reach[y])
                    });
                    if ok {
                        reach[x] = true;
                        grew = true;
                    }
                }
            }
            if reach == region {
                return region;
            }
            region = reach;
        }
    }

    /// States whose optimal total cost is infinite in the regime's
    /// direction: `+∞` under P when no strategy reaches a zero-cost end
    /// component almost surely, `−∞` under N when some strategy reaches an
    /// end component containing a negative-cost action (or any `−∞` cost).
    pub fn divergent(&self, regime: Regime) -> Vec<bool> {
        let n = self.len();
        match regime {
            Regime::Discounted => vec![false; n],
            Regime::Positive => {
                let (zero_ec, _) = self.end_components(|a| a.cost == ExtReal::ZERO);
                let target: Vec<bool> = zero_ec.iter().map(|c| c.is_some()).collect();
                let ok = self.almost_sure_reach(&target, |a| a.cost.is_finite());
                ok.iter().map(|&b| !b).collect()
            }
            Regime::Negative => {
                let (ec, inside) = self.end_components(|_| true);
                let mut negative_comp = Vec::new();
                for x in 0..n {
                    if let Some(c) = ec[x] {
                        if inside[x].iter().any(|&a| self.actions[x][a].cost < ExtReal::ZERO) {
                            negative_comp.push(c);
                        }
                    }
                }
                let seeds: Vec<bool> = (0..n)
                    .map(|x| {
                        ec[x].is_some_and(|c| negative_comp.contains(&c))
                            || self.actions[x].iter().any(|a| a.cost.is_neg_inf())
                    })
                    .collect();
                let succ: Vec<Vec<usize>> =
                    self.actions.iter().map(|acts| acts.iter().flat_map(|a| a.succ.iter().copied()).collect()).collect();
                can_reach(&succ, &seeds)
            }
        }
    }
}

/// States of the model at which value iteration runs off to the regime's
/// infinity (see [`ActionGraph::divergent`]).
pub fn divergent_states(model: &TotalCostModel) -> StateSet {
    StateSet(ActionGraph::closure_of(model).divergent(model.regime()))
}
