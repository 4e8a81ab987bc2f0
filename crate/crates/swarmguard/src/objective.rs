//! Coverage objective: f(S) = number of distinct targets covered by the
//! actions in S. Monotone and submodular by construction.
//!
//! The objective is precomputed into per-action target bitsets, so set
//! evaluation is a handful of word operations. Feasible sets contain at most
//! one action per robot.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::{action_region, ActionKind, Geometry, Point, Scenario};

/// Absolute tolerance applied before tie-breaking when comparing objective
/// values. Coverage counts are integers, so this never changes a decision
/// today; it documents the contract a future real-valued objective must obey.
pub(crate) const VALUE_EPS: f64 = 1e-9;

pub(crate) fn strictly_better(a: f64, b: f64) -> bool {
    a > b + VALUE_EPS
}

pub(crate) fn strictly_worse(a: f64, b: f64) -> bool {
    a + VALUE_EPS < b
}

#[derive(Debug, Clone)]
pub struct CoverageObjective {
    n_targets: usize,
    words: usize,
    /// action id -> owning robot id
    owner: Vec<usize>,
    /// robot id -> its action ids, ascending
    robot_actions: Vec<Vec<usize>>,
    /// action id -> bitset over target ids
    cover: Vec<Vec<u64>>,
}

impl CoverageObjective {
    /// Build from explicit robot positions: five motion primitives per robot,
    /// coverage by point-in-rectangle over `target_positions`. This is the
    /// constructor the tracking engine uses with estimated positions.
    pub fn from_geometry(
        robot_positions: &[Point],
        geometry: &Geometry,
        target_positions: &[Point],
    ) -> Self {
        let n_targets = target_positions.len();
        let words = n_targets.div_ceil(64).max(1);
        let mut owner = Vec::with_capacity(robot_positions.len() * 5);
        let mut robot_actions = Vec::with_capacity(robot_positions.len());
        let mut cover = Vec::with_capacity(robot_positions.len() * 5);
        for (rid, &pos) in robot_positions.iter().enumerate() {
            let mut ids = Vec::with_capacity(5);
            for kind in ActionKind::ALL {
                let region = action_region(pos, kind, geometry);
                let mut bits = vec![0u64; words];
                for (tid, &tp) in target_positions.iter().enumerate() {
                    if region.contains(tp) {
                        bits[tid / 64] |= 1 << (tid % 64);
                    }
                }
                ids.push(owner.len());
                owner.push(rid);
                cover.push(bits);
            }
            robot_actions.push(ids);
        }
        CoverageObjective {
            n_targets,
            words,
            owner,
            robot_actions,
            cover,
        }
    }

    /// Coverage of the scenario's derived action table over its true target
    /// positions.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self::from_geometry(
            &scenario.robot_positions(),
            &scenario.geometry,
            &scenario.target_positions(),
        )
    }

    /// Build a synthetic instance from explicit coverage sets. `owner[a]` is
    /// the robot owning action `a`; `covered[a]` lists the target ids action
    /// `a` covers. Robot ids must be contiguous from 0 and every robot must
    /// own at least one action.
    pub fn from_parts(
        owner: Vec<usize>,
        covered: Vec<Vec<usize>>,
        n_targets: usize,
    ) -> Result<Self> {
        if owner.len() != covered.len() {
            return Err(Error::InvalidParameter(format!(
                "owner and covered tables differ in length ({} vs {})",
                owner.len(),
                covered.len()
            )));
        }
        let n_robots = owner.iter().copied().max().map_or(0, |m| m + 1);
        let mut robot_actions = vec![Vec::new(); n_robots];
        for (aid, &rid) in owner.iter().enumerate() {
            robot_actions[rid].push(aid);
        }
        if let Some(empty) = robot_actions.iter().position(|a| a.is_empty()) {
            return Err(Error::InvalidParameter(format!(
                "robot {empty} owns no action (robot ids must be contiguous)"
            )));
        }
        let words = n_targets.div_ceil(64).max(1);
        let mut cover = Vec::with_capacity(covered.len());
        for (aid, targets) in covered.iter().enumerate() {
            let mut bits = vec![0u64; words];
            for &tid in targets {
                if tid >= n_targets {
                    return Err(Error::InvalidParameter(format!(
                        "action {aid} covers unknown target {tid} (n_targets = {n_targets})"
                    )));
                }
                bits[tid / 64] |= 1 << (tid % 64);
            }
            cover.push(bits);
        }
        Ok(CoverageObjective {
            n_targets,
            words,
            owner,
            robot_actions,
            cover,
        })
    }

    pub fn n_actions(&self) -> usize {
        self.owner.len()
    }

    pub fn n_robots(&self) -> usize {
        self.robot_actions.len()
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn owner_of(&self, action: usize) -> Result<usize> {
        self.owner
            .get(action)
            .copied()
            .ok_or(Error::UnknownAction(action))
    }

    pub fn actions_of(&self, robot: usize) -> Result<&[usize]> {
        self.robot_actions
            .get(robot)
            .map(|v| v.as_slice())
            .ok_or(Error::UnknownRobot(robot))
    }

    pub(crate) fn cover_bits(&self, action: usize) -> &[u64] {
        &self.cover[action]
    }

    /// f over a set already known to be feasible (internal fast path).
    pub(crate) fn value_of(&self, set: &[usize]) -> f64 {
        let mut acc = CoverAcc::new(self.words);
        for &a in set {
            debug_assert!(a < self.owner.len());
            acc.add(&self.cover[a]);
        }
        acc.covered() as f64
    }

    /// f({x}) for one action.
    pub fn singleton_value(&self, action: usize) -> Result<f64> {
        if action >= self.owner.len() {
            return Err(Error::UnknownAction(action));
        }
        Ok(self.cover[action]
            .iter()
            .map(|w| w.count_ones())
            .sum::<u32>() as f64)
    }

    fn check_feasible(&self, set: &[usize]) -> Result<()> {
        let mut seen_robots = std::collections::BTreeMap::new();
        for &a in set {
            let rid = self.owner_of(a)?;
            if let Some(prev) = seen_robots.insert(rid, a) {
                return Err(Error::Infeasible(format!(
                    "actions {prev} and {a} both belong to robot {rid}"
                )));
            }
        }
        Ok(())
    }

    /// Number of distinct targets covered by `set`. Errors if the set holds
    /// two actions of the same robot or an unknown action id.
    pub fn evaluate(&self, set: &[usize]) -> Result<f64> {
        self.check_feasible(set)?;
        Ok(self.value_of(set))
    }

    /// f(S ∪ {x}) − f(S). Errors if `x` is in `S`, its owner already has an
    /// action in `S`, or the set is infeasible.
    pub fn marginal_gain(&self, set: &[usize], x: usize) -> Result<f64> {
        self.check_feasible(set)?;
        let owner = self.owner_of(x)?;
        for &a in set {
            if a == x {
                return Err(Error::Infeasible(format!(
                    "action {x} is already in the set"
                )));
            }
            if self.owner[a] == owner {
                return Err(Error::Infeasible(format!(
                    "robot {owner} already has action {a} in the set"
                )));
            }
        }
        let mut acc = CoverAcc::new(self.words);
        for &a in set {
            acc.add(&self.cover[a]);
        }
        Ok(acc.gain(&self.cover[x]) as f64)
    }
}

/// Running union of coverage bitsets; the greedy inner loops live on this.
pub(crate) struct CoverAcc {
    bits: Vec<u64>,
}

impl CoverAcc {
    pub(crate) fn new(words: usize) -> Self {
        CoverAcc {
            bits: vec![0; words],
        }
    }

    /// Targets `action_bits` would add on top of the accumulated union.
    pub(crate) fn gain(&self, action_bits: &[u64]) -> u32 {
        action_bits
            .iter()
            .zip(&self.bits)
            .map(|(a, b)| (a & !b).count_ones())
            .sum()
    }

    pub(crate) fn add(&mut self, action_bits: &[u64]) {
        for (b, a) in self.bits.iter_mut().zip(action_bits) {
            *b |= a;
        }
    }

    /// Total targets accumulated so far.
    pub(crate) fn covered(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }
}

/// Curvature of the coverage objective: how far f is from additive.
/// 0 means additive (every action's contribution is independent); 1 means
/// some action is fully redundant inside some feasible set.
#[derive(Debug, Clone)]
pub struct Curvature {
    pub value: f64,
    /// A feasible set S and member x attaining the minimizing ratio
    /// (f(S) − f(S∖{x})) / f({x}); `None` only if no action covers anything.
    pub witness: Option<(Vec<usize>, usize)>,
    /// True when produced by sampling rather than full enumeration.
    pub is_estimate: bool,
}

pub const CURVATURE_ENUM_CAP: usize = 1_000_000;

/// Exact curvature by enumerating every feasible partial assignment.
///
/// Errors with a capacity message when the instance has more than `cap`
/// (default [`CURVATURE_ENUM_CAP`]) feasible partial assignments; use
/// [`curvature_sampled`] there.
pub fn curvature_exact(obj: &CoverageObjective, cap: Option<usize>) -> Result<Curvature> {
    let cap = cap.unwrap_or(CURVATURE_ENUM_CAP);
    let mut space = 1usize;
    for r in 0..obj.n_robots() {
        space = space.saturating_mul(obj.actions_of(r)?.len() + 1);
        if space > cap {
            return Err(Error::Capacity(format!(
                "curvature enumeration needs more than {cap} feasible partial assignments; \
                 use curvature_sampled instead"
            )));
        }
    }

    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    let mut digits = vec![0usize; obj.n_robots()];
    loop {
        let set: Vec<usize> = digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(r, &d)| obj.robot_actions[r][d - 1])
            .collect();
        if !set.is_empty() {
            consider_set(obj, &set, &mut best);
        }
        // Mixed-radix increment over (no action | action index) per robot.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                let value = best
                    .as_ref()
                    .map(|(ratio, _, _)| (1.0 - ratio).clamp(0.0, 1.0))
                    .unwrap_or(0.0);
                return Ok(Curvature {
                    value,
                    witness: best.map(|(_, s, x)| (s, x)),
                    is_estimate: false,
                });
            }
            digits[pos] += 1;
            if digits[pos] <= obj.robot_actions[pos].len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Sampled curvature: the same ratio minimized over `n_samples` random
/// feasible sets. The result is a lower bound on the exact curvature
/// (inspecting fewer sets can only raise the minimum ratio) and is flagged
/// as an estimate.
pub fn curvature_sampled(
    obj: &CoverageObjective,
    n_samples: usize,
    seed: u64,
) -> Result<Curvature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    for _ in 0..n_samples {
        let set: Vec<usize> = (0..obj.n_robots())
            .filter_map(|r| {
                let k = rng.random_range(0..=obj.robot_actions[r].len());
                (k > 0).then(|| obj.robot_actions[r][k - 1])
            })
            .collect();
        if set.is_empty() {
            continue;
        }
        consider_set(obj, &set, &mut best);
    }
    let value = best
        .as_ref()
        .map(|(ratio, _, _)| (1.0 - ratio).clamp(0.0, 1.0))
        .unwrap_or(0.0);
    Ok(Curvature {
        value,
        witness: best.map(|(_, s, x)| (s, x)),
        is_estimate: true,
    })
}

fn consider_set(
    obj: &CoverageObjective,
    set: &[usize],
    best: &mut Option<(f64, Vec<usize>, usize)>,
) {
    let full = obj.value_of(set);
    for (i, &x) in set.iter().enumerate() {
        let single = obj.value_of(&[x]);
        if single <= 0.0 {
            // Zero-value actions are excluded from the minimization.
            continue;
        }
        let mut without: Vec<usize> = set.to_vec();
        without.remove(i);
        let ratio = (full - obj.value_of(&without)) / single;
        if best.as_ref().is_none_or(|(b, _, _)| ratio < *b) {
            *best = Some((ratio, set.to_vec(), x));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Rect};
    use crate::testutil::{additive_pair, duplicate_pair, overlap_pair};
    use proptest::prelude::*;

    #[test]
    fn nested_coverage_pair_totals_four() {
        let obj = overlap_pair();
        // Robot 1 forward (action 5) covers everything.
        assert_eq!(obj.evaluate(&[5]).unwrap(), 4.0);
        // Robot 0 forward (action 0) covers two of them.
        assert_eq!(obj.evaluate(&[0]).unwrap(), 2.0);
        assert_eq!(obj.evaluate(&[0, 5]).unwrap(), 4.0);
        assert_eq!(obj.evaluate(&[]).unwrap(), 0.0);
    }

    #[test]
    fn nested_action_has_zero_marginal_gain() {
        let obj = overlap_pair();
        assert_eq!(obj.marginal_gain(&[5], 0).unwrap(), 0.0);
        // From the empty set, the gain is the singleton value.
        for a in 0..obj.n_actions() {
            assert_eq!(
                obj.marginal_gain(&[], a).unwrap(),
                obj.singleton_value(a).unwrap()
            );
        }
    }

    #[test]
    fn two_actions_of_one_robot_are_rejected() {
        let obj = overlap_pair();
        assert!(matches!(obj.evaluate(&[0, 1]), Err(Error::Infeasible(_))));
        assert!(matches!(
            obj.marginal_gain(&[0], 1),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(obj.evaluate(&[99]), Err(Error::UnknownAction(99))));
    }

    #[test]
    fn evaluate_matches_geometric_union_count() {
        let s = generate_scenario(
            11,
            3,
            8,
            Rect::new(0.0, 0.0, 25.0, 25.0),
            10.0,
            1,
            Geometry::new(10.0, 3.0).unwrap(),
        )
        .unwrap();
        let obj = CoverageObjective::from_scenario(&s);
        // One action per robot, every combination.
        for a0 in 0..5 {
            for a1 in 5..10 {
                for a2 in 10..15 {
                    let set = [a0, a1, a2];
                    let direct = s
                        .targets
                        .iter()
                        .filter(|t| {
                            set.iter()
                                .any(|&a| s.actions[a].region.contains(t.position))
                        })
                        .count() as f64;
                    assert_eq!(obj.evaluate(&set).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn curvature_is_zero_on_disjoint_coverage() {
        let c = curvature_exact(&additive_pair(), None).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(!c.is_estimate);
        let (s, x) = c.witness.unwrap();
        // The witness reproduces the reported ratio.
        let obj = additive_pair();
        let without: Vec<usize> = s.iter().copied().filter(|&a| a != x).collect();
        let ratio = (obj.value_of(&s) - obj.value_of(&without)) / obj.value_of(&[x]);
        assert_eq!(1.0 - ratio, c.value);
    }

    #[test]
    fn curvature_is_one_on_duplicated_coverage() {
        let c = curvature_exact(&duplicate_pair(), None).unwrap();
        assert_eq!(c.value, 1.0);
        let (s, x) = c.witness.unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.contains(&x));
    }

    #[test]
    fn curvature_matches_independent_enumeration() {
        // Three robots, two actions each, random-ish coverage fixed by hand.
        let obj = CoverageObjective::from_parts(
            vec![0, 0, 1, 1, 2, 2],
            vec![
                vec![0, 1],
                vec![2],
                vec![1, 2],
                vec![3],
                vec![0, 3],
                vec![1, 4],
            ],
            5,
        )
        .unwrap();
        // Independent double loop: every subset of {0,1} x {2,3} x {4,5}
        // including "robot absent", every member.
        let mut min_ratio = f64::INFINITY;
        for d0 in 0..3 {
            for d1 in 0..3 {
                for d2 in 0..3 {
                    let mut s = Vec::new();
                    if d0 > 0 {
                        s.push(d0 - 1);
                    }
                    if d1 > 0 {
                        s.push(2 + d1 - 1);
                    }
                    if d2 > 0 {
                        s.push(4 + d2 - 1);
                    }
                    for (i, &x) in s.iter().enumerate() {
                        let fx = obj.evaluate(&[x]).unwrap();
                        if fx == 0.0 {
                            continue;
                        }
                        let mut rest = s.clone();
                        rest.remove(i);
                        let ratio = (obj.evaluate(&s).unwrap() - obj.evaluate(&rest).unwrap()) / fx;
                        min_ratio = min_ratio.min(ratio);
                    }
                }
            }
        }
        let c = curvature_exact(&obj, None).unwrap();
        assert_eq!(c.value, 1.0 - min_ratio);
    }

    #[test]
    fn curvature_cap_is_enforced() {
        let obj = overlap_pair();
        match curvature_exact(&obj, Some(10)) {
            Err(Error::Capacity(msg)) => assert!(msg.contains("curvature_sampled")),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn sampled_curvature_lower_bounds_exact() {
        let obj = overlap_pair();
        let exact = curvature_exact(&obj, None).unwrap();
        for seed in 0..10 {
            let est = curvature_sampled(&obj, 40, seed).unwrap();
            assert!(est.is_estimate);
            assert!(est.value <= exact.value + 1e-12);
        }
        // Enough samples on a tiny instance reach the exact value.
        let est = curvature_sampled(&obj, 20_000, 1).unwrap();
        assert_eq!(est.value, exact.value);
        // Additive instances report zero for any sample set.
        assert_eq!(
            curvature_sampled(&additive_pair(), 50, 3).unwrap().value,
            0.0
        );
    }

    prop_compose! {
        /// Random synthetic objective: up to 4 robots, up to 3 actions each.
        fn arb_objective()(
            n_robots in 1usize..=4,
            n_targets in 1usize..=10,
            seed in 0u64..10_000,
        )(
            counts in proptest::collection::vec(1usize..=3, n_robots),
            n_targets in Just(n_targets),
            seed in Just(seed),
        ) -> CoverageObjective {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut owner = Vec::new();
            let mut covered = Vec::new();
            for (rid, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    owner.push(rid);
                    covered.push(
                        (0..n_targets)
                            .filter(|_| rng.random_bool(0.4))
                            .collect::<Vec<_>>(),
                    );
                }
            }
            CoverageObjective::from_parts(owner, covered, n_targets).unwrap()
        }
    }

    fn random_chain(
        obj: &CoverageObjective,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<usize>, Vec<usize>, Option<usize>) {
        // Feasible S ⊆ S' plus an action x whose robot is free in S'.
        let mut small = Vec::new();
        let mut big = Vec::new();
        let mut x = None;
        for r in 0..obj.n_robots() {
            let acts = obj.actions_of(r).unwrap();
            match rng.random_range(0..4) {
                0 => {}
                1 => {
                    let a = acts[rng.random_range(0..acts.len())];
                    big.push(a);
                }
                2 => {
                    let a = acts[rng.random_range(0..acts.len())];
                    small.push(a);
                    big.push(a);
                }
                _ => {
                    if x.is_none() {
                        x = Some(acts[rng.random_range(0..acts.len())]);
                    }
                }
            }
        }
        (small, big, x)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn monotone_and_submodular(obj in arb_objective(), seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (small, big, x) = random_chain(&obj, &mut rng);
            let f_small = obj.evaluate(&small).unwrap();
            let f_big = obj.evaluate(&big).unwrap();
            prop_assert!(f_small <= f_big);
            if let Some(x) = x {
                let g_small = obj.marginal_gain(&small, x).unwrap();
                let g_big = obj.marginal_gain(&big, x).unwrap();
                prop_assert!(g_small >= g_big);
                prop_assert!(g_big >= 0.0);
            }
        }

        #[test]
        fn curvature_stays_in_unit_interval(obj in arb_objective()) {
            let c = curvature_exact(&obj, None).unwrap();
            prop_assert!((0.0..=1.0).contains(&c.value));
            if let Some((s, x)) = &c.witness {
                let without: Vec<usize> = s.iter().copied().filter(|a| a != x).collect();
                let ratio = (obj.value_of(s) - obj.value_of(&without)) / obj.value_of(&[*x]);
                prop_assert!((1.0 - ratio - c.value).abs() < 1e-12);
            }
        }
    }
}
