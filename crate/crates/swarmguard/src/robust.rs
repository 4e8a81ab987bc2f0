//! Centralized building blocks: greedy assignment, the bait+greedy robust
//! assignment, and the myopic per-robot baseline.
//!
//! One global tie-breaking contract applies everywhere: argmax over
//! (robot, action) candidates resolves by smallest robot id, then smallest
//! action id. This makes every planner deterministic and makes myopic
//! coincide exactly with the all-bait robust assignment.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{strictly_better, CoverAcc, CoverageObjective};

/// How a robot's action entered the assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Chosen in the bait stage: one of the top single-action values,
    /// placed to absorb attacks.
    Bait,
    /// Chosen by the marginal-gain greedy stage.
    Greedy,
    /// Chosen independently by its robot (myopic baseline).
    Myopic,
    /// Produced by exhaustive search (the optimum oracle).
    Exhaustive,
}

/// One chosen action per robot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    chosen: BTreeMap<usize, usize>,
    provenance: BTreeMap<usize, Provenance>,
}

impl Default for Assignment {
    fn default() -> Self {
        Self::new()
    }
}

impl Assignment {
    pub fn new() -> Self {
        Assignment {
            chosen: BTreeMap::new(),
            provenance: BTreeMap::new(),
        }
    }

    /// Record `robot -> action`. Errors if the robot already has an action.
    pub fn insert(&mut self, robot: usize, action: usize, provenance: Provenance) -> Result<()> {
        if self.chosen.insert(robot, action).is_some() {
            return Err(Error::Infeasible(format!(
                "robot {robot} was assigned twice"
            )));
        }
        self.provenance.insert(robot, provenance);
        Ok(())
    }

    /// robot id -> action id.
    pub fn chosen(&self) -> &BTreeMap<usize, usize> {
        &self.chosen
    }

    pub fn provenance_of(&self, robot: usize) -> Option<Provenance> {
        self.provenance.get(&robot).copied()
    }

    pub fn action_of(&self, robot: usize) -> Option<usize> {
        self.chosen.get(&robot).copied()
    }

    /// All chosen action ids, ascending.
    pub fn actions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.chosen.values().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn robots_with(&self, provenance: Provenance) -> Vec<usize> {
        self.provenance
            .iter()
            .filter(|(_, &p)| p == provenance)
            .map(|(&r, _)| r)
            .collect()
    }

    /// Merge a disjoint assignment into this one.
    pub fn merge(&mut self, other: Assignment) -> Result<()> {
        for (robot, action) in other.chosen {
            let prov = other.provenance[&robot];
            self.insert(robot, action, prov)?;
        }
        Ok(())
    }

    /// Every chosen action exists and is owned by its robot.
    pub fn validate(&self, obj: &CoverageObjective) -> Result<()> {
        for (&robot, &action) in &self.chosen {
            let owner = obj.owner_of(action)?;
            if owner != robot {
                return Err(Error::Infeasible(format!(
                    "robot {robot} holds action {action} owned by robot {owner}"
                )));
            }
        }
        Ok(())
    }
}

/// Planner output plus the number of objective evaluations it spent.
#[derive(Debug, Clone)]
pub struct PlannerRun {
    pub assignment: Assignment,
    pub evals: u64,
}

fn dedup_robots(robots: &[usize], obj: &CoverageObjective) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = robots.iter().copied().collect();
    for &r in &set {
        obj.actions_of(r)?;
    }
    Ok(set.into_iter().collect())
}

/// Iteratively assign the (robot, action) pair with the largest marginal
/// gain until every robot holds an action.
pub fn central_greedy(robots: &[usize], obj: &CoverageObjective) -> Result<PlannerRun> {
    let robots = dedup_robots(robots, obj)?;
    let mut evals = 0u64;
    let mut assignment = Assignment::new();
    let mut acc = CoverAcc::new(obj.n_targets().div_ceil(64).max(1));
    let mut remaining: BTreeSet<usize> = robots.into_iter().collect();
    while !remaining.is_empty() {
        let mut best: Option<(f64, usize, usize)> = None;
        for &robot in &remaining {
            for &action in obj.actions_of(robot)? {
                let gain = acc.gain(obj.cover_bits(action)) as f64;
                evals += 1;
                if best.is_none() || strictly_better(gain, best.unwrap().0) {
                    best = Some((gain, robot, action));
                }
            }
        }
        let (_, robot, action) = best.expect("remaining robots always have actions");
        acc.add(obj.cover_bits(action));
        assignment.insert(robot, action, Provenance::Greedy)?;
        remaining.remove(&robot);
    }
    Ok(PlannerRun { assignment, evals })
}

/// Best single action of each robot: (value, robot, action), action ties
/// resolved to the smallest id. Costs one evaluation per action.
pub(crate) fn best_singletons(
    robots: &[usize],
    obj: &CoverageObjective,
    evals: &mut u64,
) -> Result<Vec<(f64, usize, usize)>> {
    let mut out = Vec::with_capacity(robots.len());
    for &robot in robots {
        let mut best: Option<(f64, usize)> = None;
        for &action in obj.actions_of(robot)? {
            let v = obj.singleton_value(action)?;
            *evals += 1;
            if best.is_none() || strictly_better(v, best.unwrap().0) {
                best = Some((v, action));
            }
        }
        let (v, action) = best.expect("robots always have actions");
        out.push((v, robot, action));
    }
    Ok(out)
}

/// Bait + greedy: the `alpha_prime` robots with the highest single-action
/// values each take that action (bait); the rest are assigned by
/// [`central_greedy`] with the bait actions excluded from the objective's
/// argument set entirely.
pub fn central_robust(
    robots: &[usize],
    obj: &CoverageObjective,
    alpha_prime: usize,
) -> Result<PlannerRun> {
    let robots = dedup_robots(robots, obj)?;
    if alpha_prime > robots.len() {
        return Err(Error::InvalidParameter(format!(
            "alpha_prime {alpha_prime} exceeds the {} robots available",
            robots.len()
        )));
    }
    let mut evals = 0u64;
    let mut singles = best_singletons(&robots, obj, &mut evals)?;
    // Descending value; robot id ascending among exact ties.
    singles.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));

    let mut assignment = Assignment::new();
    for &(_, robot, action) in singles.iter().take(alpha_prime) {
        assignment.insert(robot, action, Provenance::Bait)?;
    }
    let rest: Vec<usize> = singles[alpha_prime..].iter().map(|&(_, r, _)| r).collect();
    let greedy = central_greedy(&rest, obj)?;
    evals += greedy.evals;
    assignment.merge(greedy.assignment)?;
    Ok(PlannerRun { assignment, evals })
}

/// Every robot independently takes its best single action.
pub fn myopic(robots: &[usize], obj: &CoverageObjective) -> Result<PlannerRun> {
    let robots = dedup_robots(robots, obj)?;
    let mut evals = 0u64;
    let singles = best_singletons(&robots, obj, &mut evals)?;
    let mut assignment = Assignment::new();
    for (_, robot, action) in singles {
        assignment.insert(robot, action, Provenance::Myopic)?;
    }
    Ok(PlannerRun { assignment, evals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{overlap_pair, random_objective};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_robots(obj: &CoverageObjective) -> Vec<usize> {
        (0..obj.n_robots()).collect()
    }

    #[test]
    fn greedy_takes_the_big_sweep_first_then_ties_low() {
        let obj = overlap_pair();
        let run = central_greedy(&all_robots(&obj), &obj).unwrap();
        // Robot 1's forward (action 5) gains 4 and wins the first round;
        // every action of robot 0 then gains 0 and the tie rule picks its
        // forward (action 0).
        assert_eq!(run.assignment.action_of(1), Some(5));
        assert_eq!(run.assignment.action_of(0), Some(0));
        assert_eq!(obj.evaluate(&run.assignment.actions()).unwrap(), 4.0);
    }

    #[test]
    fn single_robot_takes_its_argmax_action() {
        let obj =
            CoverageObjective::from_parts(vec![0, 0, 0], vec![vec![0], vec![0, 1], vec![1]], 2)
                .unwrap();
        let run = central_greedy(&[0], &obj).unwrap();
        assert_eq!(run.assignment.action_of(0), Some(1));
    }

    #[test]
    fn zero_baits_reduce_to_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let obj = random_objective(&mut rng, 4, 3, 8);
            let robots = all_robots(&obj);
            let a = central_robust(&robots, &obj, 0).unwrap();
            let b = central_greedy(&robots, &obj).unwrap();
            assert_eq!(a.assignment.chosen(), b.assignment.chosen());
        }
    }

    #[test]
    fn all_baits_give_every_robot_its_best_action() {
        let obj = overlap_pair();
        let run = central_robust(&all_robots(&obj), &obj, 2).unwrap();
        for robot in 0..2 {
            assert_eq!(run.assignment.provenance_of(robot), Some(Provenance::Bait));
            let chosen = run.assignment.action_of(robot).unwrap();
            let best = obj
                .actions_of(robot)
                .unwrap()
                .iter()
                .map(|&a| (obj.singleton_value(a).unwrap(), a))
                .fold(None::<(f64, usize)>, |acc, (v, a)| match acc {
                    Some((bv, ba)) if v <= bv => Some((bv, ba)),
                    _ => Some((v, a)),
                })
                .unwrap()
                .1;
            assert_eq!(chosen, best);
        }
    }

    #[test]
    fn one_bait_is_the_globally_best_single_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let obj = random_objective(&mut rng, 4, 3, 8);
            let robots = all_robots(&obj);
            let run = central_robust(&robots, &obj, 1).unwrap();
            let baits = run.assignment.robots_with(Provenance::Bait);
            assert_eq!(baits.len(), 1);
            let bait_action = run.assignment.action_of(baits[0]).unwrap();
            // Exhaustive argmax with the same tie rule.
            let mut best = (f64::NEG_INFINITY, usize::MAX, usize::MAX);
            for &r in &robots {
                for &a in obj.actions_of(r).unwrap() {
                    let v = obj.singleton_value(a).unwrap();
                    if v > best.0 {
                        best = (v, r, a);
                    }
                }
            }
            assert_eq!((baits[0], bait_action), (best.1, best.2));
        }
    }

    #[test]
    fn alpha_prime_out_of_range_is_rejected() {
        let obj = overlap_pair();
        assert!(matches!(
            central_robust(&[0, 1], &obj, 3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn myopic_equals_all_bait_robust() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..40 {
            let obj = random_objective(&mut rng, 5, 3, 9);
            let robots = all_robots(&obj);
            let m = myopic(&robots, &obj).unwrap();
            let r = central_robust(&robots, &obj, robots.len()).unwrap();
            assert_eq!(m.assignment.chosen(), r.assignment.chosen());
        }
    }

    #[test]
    fn myopic_picks_each_robots_best() {
        let obj = overlap_pair();
        let run = myopic(&[0, 1], &obj).unwrap();
        // All of robot 0's actions cover 2 targets; the tie rule keeps its
        // forward. Robot 1's forward covers all 4.
        assert_eq!(run.assignment.action_of(0), Some(0));
        assert_eq!(run.assignment.action_of(1), Some(5));
    }

    #[test]
    fn greedy_result_is_at_least_half_of_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..50 {
            let obj = random_objective(&mut rng, 4, 3, 8);
            let robots = all_robots(&obj);
            let run = central_greedy(&robots, &obj).unwrap();
            let achieved = obj.evaluate(&run.assignment.actions()).unwrap();
            // Exhaustive unattacked optimum over full assignments.
            let mut best = 0.0f64;
            let counts: Vec<usize> = robots
                .iter()
                .map(|&r| obj.actions_of(r).unwrap().len())
                .collect();
            let mut digits = vec![0usize; robots.len()];
            loop {
                let set: Vec<usize> = digits
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| obj.actions_of(robots[i]).unwrap()[d])
                    .collect();
                best = best.max(obj.evaluate(&set).unwrap());
                let mut pos = 0;
                loop {
                    if pos == digits.len() {
                        break;
                    }
                    digits[pos] += 1;
                    if digits[pos] < counts[pos] {
                        break;
                    }
                    digits[pos] = 0;
                    pos += 1;
                }
                if pos == digits.len() {
                    break;
                }
            }
            assert!(
                achieved * 2.0 + 1e-9 >= best,
                "greedy {achieved} vs optimum {best}"
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(80))]
        #[test]
        fn planners_return_feasible_assignments(seed in 0u64..100_000, n in 1usize..6, ap_frac in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obj = random_objective(&mut rng, n, 4, 10);
            let robots: Vec<usize> = (0..n).collect();
            let ap = ((n as f64) * ap_frac).floor() as usize;
            for run in [
                central_greedy(&robots, &obj).unwrap(),
                central_robust(&robots, &obj, ap).unwrap(),
                myopic(&robots, &obj).unwrap(),
            ] {
                prop_assert_eq!(run.assignment.len(), n);
                prop_assert!(run.assignment.validate(&obj).is_ok());
                prop_assert!(obj.evaluate(&run.assignment.actions()).is_ok());
                prop_assert!(run.evals > 0);
            }
        }

        #[test]
        fn greedy_prefix_values_never_decrease(seed in 0u64..100_000, n in 1usize..6) {
            // Rebuild the greedy order and check the running value grows
            // monotonically: each accepted gain is >= 0.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let obj = random_objective(&mut rng, n, 3, 10);
            let robots: Vec<usize> = (0..n).collect();
            let run = central_greedy(&robots, &obj).unwrap();
            let actions = run.assignment.actions();
            for k in 1..=actions.len() {
                let prev = obj.evaluate(&actions[..k - 1]).unwrap();
                let here = obj.evaluate(&actions[..k]).unwrap();
                prop_assert!(here >= prev);
            }
        }
    }
}
