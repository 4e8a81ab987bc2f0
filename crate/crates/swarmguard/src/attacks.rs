//! Adversary models and the brute-force optimum oracle.
//!
//! The adversary observes the final assignment S and removes up to `alpha`
//! of its actions to minimize the residual objective f(S∖A). Two models
//! ship: an exact subset enumeration and a greedy heuristic. The optimum
//! oracle exhaustively solves the max-min assignment problem and is the
//! reference every bound certification compares against.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::objective::{strictly_better, strictly_worse, CoverageObjective};
use crate::robust::{Assignment, Provenance};

/// Default cap on exact enumerations.
pub const ATTACK_ENUM_CAP: u128 = 1_000_000;

/// Subset-count threshold below which [`AttackModel::Auto`] stays exact.
pub const AUTO_EXACT_SUBSETS: u128 = 100_000;

/// Actions removed by the adversary and the objective value left behind.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSet {
    pub removed: BTreeSet<usize>,
    pub residual_value: f64,
}

/// Which adversary to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackModel {
    /// Exact worst case by subset enumeration; errors over the cap.
    WorstCase,
    /// Greedy removal heuristic; never errors.
    Greedy,
    /// Exact when the enumeration stays under [`AUTO_EXACT_SUBSETS`]
    /// subsets, greedy otherwise.
    Auto,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut out: u128 = 1;
    for i in 0..k {
        out = out.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    out
}

/// Number of subsets an exact attack on `n` actions with budget `alpha`
/// enumerates: all sizes 0..=min(alpha, n).
pub fn attack_subset_count(n: usize, alpha: usize) -> u128 {
    (0..=alpha.min(n)).map(|k| binomial(n, k)).sum()
}

/// Exact worst-case removal of at most `alpha` actions from the assignment.
/// Ties resolve to the lexicographically smallest removed-id set (the empty
/// set when no removal hurts).
pub fn worst_case_attack(
    obj: &CoverageObjective,
    assignment: &Assignment,
    alpha: usize,
) -> Result<AttackSet> {
    worst_case_attack_with_cap(obj, assignment, alpha, ATTACK_ENUM_CAP)
}

pub fn worst_case_attack_with_cap(
    obj: &CoverageObjective,
    assignment: &Assignment,
    alpha: usize,
    cap: u128,
) -> Result<AttackSet> {
    Ok(worst_case_on_actions(obj, &assignment.actions(), alpha, cap)?.0)
}

/// Core enumeration over a sorted action list. Also reports how many
/// objective evaluations it spent.
pub(crate) fn worst_case_on_actions(
    obj: &CoverageObjective,
    actions: &[usize],
    alpha: usize,
    cap: u128,
) -> Result<(AttackSet, u64)> {
    let total = attack_subset_count(actions.len(), alpha);
    if total > cap {
        return Err(Error::Capacity(format!(
            "worst-case attack enumeration would visit {total} subsets \
             (cap {cap}); use greedy_attack or raise the cap"
        )));
    }
    let mut sorted = actions.to_vec();
    sorted.sort_unstable();

    struct Search<'a> {
        obj: &'a CoverageObjective,
        actions: Vec<usize>,
        alpha: usize,
        best_value: f64,
        best_removed: Vec<usize>,
        evals: u64,
    }

    impl Search<'_> {
        /// Depth-first over removal sets in lexicographic order of their
        /// sorted id sequences, so the first strict improvement seen is the
        /// lexicographically smallest minimizer.
        fn visit(&mut self, start: usize, removed: &mut Vec<usize>) {
            let kept: Vec<usize> = self
                .actions
                .iter()
                .copied()
                .filter(|a| !removed.contains(a))
                .collect();
            let value = self.obj.value_of(&kept);
            self.evals += 1;
            if strictly_worse(value, self.best_value) {
                self.best_value = value;
                self.best_removed = removed.clone();
            }
            if removed.len() == self.alpha {
                return;
            }
            for idx in start..self.actions.len() {
                removed.push(self.actions[idx]);
                self.visit(idx + 1, removed);
                removed.pop();
            }
        }
    }

    let mut search = Search {
        obj,
        actions: sorted,
        alpha,
        best_value: f64::INFINITY,
        best_removed: Vec::new(),
        evals: 0,
    };
    search.visit(0, &mut Vec::new());
    Ok((
        AttackSet {
            removed: search.best_removed.into_iter().collect(),
            residual_value: search.best_value,
        },
        search.evals,
    ))
}

/// Greedy removal: `alpha` rounds, each removing the action whose removal
/// decreases f the most (ties: smallest action id).
pub fn greedy_attack(obj: &CoverageObjective, assignment: &Assignment, alpha: usize) -> AttackSet {
    greedy_on_actions(obj, &assignment.actions(), alpha).0
}

pub(crate) fn greedy_on_actions(
    obj: &CoverageObjective,
    actions: &[usize],
    alpha: usize,
) -> (AttackSet, u64) {
    let mut kept: Vec<usize> = actions.to_vec();
    kept.sort_unstable();
    let mut removed = BTreeSet::new();
    let mut evals = 0u64;
    for _ in 0..alpha.min(actions.len()) {
        let mut best: Option<(f64, usize)> = None;
        for (idx, _) in kept.iter().enumerate() {
            let rest: Vec<usize> = kept
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != idx)
                .map(|(_, &a)| a)
                .collect();
            let value = obj.value_of(&rest);
            evals += 1;
            if best.is_none() || strictly_worse(value, best.unwrap().0) {
                best = Some((value, idx));
            }
        }
        let (_, idx) = best.expect("kept is non-empty");
        removed.insert(kept.remove(idx));
    }
    let residual = obj.value_of(&kept);
    evals += 1;
    (
        AttackSet {
            removed,
            residual_value: residual,
        },
        evals,
    )
}

/// Run the configured adversary on an explicit action set.
pub(crate) fn attack_on_actions(
    model: AttackModel,
    obj: &CoverageObjective,
    actions: &[usize],
    alpha: usize,
) -> Result<(AttackSet, u64)> {
    match model {
        AttackModel::WorstCase => worst_case_on_actions(obj, actions, alpha, ATTACK_ENUM_CAP),
        AttackModel::Greedy => Ok(greedy_on_actions(obj, actions, alpha)),
        AttackModel::Auto => {
            if attack_subset_count(actions.len(), alpha) <= AUTO_EXACT_SUBSETS {
                worst_case_on_actions(obj, actions, alpha, ATTACK_ENUM_CAP)
            } else {
                Ok(greedy_on_actions(obj, actions, alpha))
            }
        }
    }
}

/// Apply the configured adversary to a planner's assignment.
pub fn attack_assignment(
    model: AttackModel,
    obj: &CoverageObjective,
    assignment: &Assignment,
    alpha: usize,
) -> Result<AttackSet> {
    Ok(attack_on_actions(model, obj, &assignment.actions(), alpha)?.0)
}

/// Exhaustive optimum of the max-min assignment problem: the best full
/// assignment (one action per robot) under exact worst-case removal.
/// Returns the optimal value and one maximizer.
pub fn optimal_value(obj: &CoverageObjective, alpha: usize) -> Result<(f64, Assignment)> {
    optimal_value_with_cap(obj, alpha, ATTACK_ENUM_CAP)
}

pub fn optimal_value_with_cap(
    obj: &CoverageObjective,
    alpha: usize,
    cap: u128,
) -> Result<(f64, Assignment)> {
    let n = obj.n_robots();
    if n == 0 {
        return Err(Error::InvalidParameter("objective has no robots".into()));
    }
    let mut assignments: u128 = 1;
    for r in 0..n {
        assignments = assignments.saturating_mul(obj.actions_of(r)?.len() as u128);
    }
    let inner = attack_subset_count(n, alpha);
    if assignments.saturating_mul(inner) > cap {
        return Err(Error::Capacity(format!(
            "optimum enumeration would visit {assignments} assignments x {inner} \
             attack subsets (cap {cap})"
        )));
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut digits = vec![0usize; n];
    loop {
        let set: Vec<usize> = digits
            .iter()
            .enumerate()
            .map(|(r, &d)| obj.actions_of(r).unwrap()[d])
            .collect();
        let (attack, _) = worst_case_on_actions(obj, &set, alpha, cap)?;
        if best.is_none() || strictly_better(attack.residual_value, best.as_ref().unwrap().0) {
            best = Some((attack.residual_value, set));
        }
        let mut pos = 0;
        loop {
            if pos == n {
                let (value, set) = best.expect("at least one assignment enumerated");
                let mut assignment = Assignment::new();
                for &a in &set {
                    assignment.insert(obj.owner_of(a)?, a, Provenance::Exhaustive)?;
                }
                return Ok((value, assignment));
            }
            digits[pos] += 1;
            if digits[pos] < obj.actions_of(pos)?.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}
