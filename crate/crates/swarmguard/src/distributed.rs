//! Distributed planners: DRM (clique partition + per-clique robust
//! assignment), IDRM (3-hop inference of per-clique attack counts) and
//! DRM-UNA (per-clique attack-count selection when the budget is unknown),
//! with message/round/evaluation accounting for all three.
//!
//! Cliques are optimized on a rayon pool; results are merged in clique
//! order, so scheduling never affects the output. `parallel_time` is
//! derived from per-clique measured durations (partition prefix + slowest
//! clique) rather than pool wall-clock, which keeps reported speedups
//! independent of machine load.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{attack_on_actions, attack_subset_count, AttackModel, AUTO_EXACT_SUBSETS};
use crate::commgraph::{CliquePartition, CommGraph};
use crate::error::{Error, Result};
use crate::objective::{strictly_better, CoverageObjective};
use crate::robust::{best_singletons, central_robust, Assignment};
use crate::scenario::Scenario;

/// Rounds used by DRM and DRM-UNA: three for the clique partition plus one
/// intra-clique exchange of chosen actions.
pub const DRM_ROUNDS: u64 = 4;

/// Rounds used by IDRM: the DRM four plus three more hops to flood
/// single-action values through the 3-hop neighborhoods.
pub const IDRM_ROUNDS: u64 = 7;

/// Communication and computation accounting for one distributed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommStats {
    pub rounds: u64,
    /// Indexed by robot id. For DRM and DRM-UNA robot i in clique C_k sends
    /// 3|N_i| + |C_k|-1 messages; IDRM doubles the neighbor term.
    pub messages_per_robot: Vec<u64>,
    /// Objective evaluations spent on behalf of each clique, in clique order.
    pub evals_per_clique: Vec<u64>,
    /// Partition (and, for IDRM, inference) time plus the slowest clique.
    pub parallel_time: Duration,
    /// Partition (and inference) time plus the sum of all clique times.
    pub total_time: Duration,
}

impl CommStats {
    pub fn messages_total(&self) -> u64 {
        self.messages_per_robot.iter().sum()
    }

    pub fn evals_max_clique(&self) -> u64 {
        self.evals_per_clique.iter().copied().max().unwrap_or(0)
    }

    pub fn evals_total(&self) -> u64 {
        self.evals_per_clique.iter().sum()
    }
}

/// Audit entry for one IDRM demotion: `robot` held a provisional bait slot
/// in `clique` but was not among the top-budget robots of its own 3-hop
/// neighborhood.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemotionRecord {
    pub clique: usize,
    pub robot: usize,
    /// The comparison set: the robot itself plus its 3-hop neighbors,
    /// ascending ids.
    pub neighborhood: Vec<usize>,
    /// The winners of the comparison, best first.
    pub neighborhood_top: Vec<usize>,
}

/// Per-clique attack-count conjecture plus how it was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaInference {
    /// Conjectured count per clique, in clique order.
    pub alpha_per_clique: Vec<usize>,
    /// IDRM only: one record per demotion, in the order they were applied.
    pub demotions: Vec<DemotionRecord>,
    /// DRM-UNA only: mean post-attack value per candidate count, indexed
    /// `score_tables[clique][candidate]`; empty for IDRM.
    pub score_tables: Vec<Vec<f64>>,
}

impl AlphaInference {
    pub fn total_alpha(&self) -> usize {
        self.alpha_per_clique.iter().sum()
    }
}

/// Everything a distributed planner produces.
#[derive(Debug, Clone)]
pub struct DistributedRun {
    pub assignment: Assignment,
    pub partition: CliquePartition,
    pub stats: CommStats,
    /// `None` for plain DRM; the conjecture audit for IDRM and DRM-UNA.
    pub inference: Option<AlphaInference>,
}

/// The outcome of choosing an attack count for one clique when the true
/// budget is unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueAlphaChoice {
    /// Argmax of `scores`, ties resolved to the smallest count.
    pub alpha: usize,
    /// Mean post-attack value for each candidate count 0..=|C_k|.
    pub scores: Vec<f64>,
    pub evals: u64,
    /// The robust assignment computed for the winning count.
    pub assignment: Assignment,
}

fn check_scenario(scenario: &Scenario, obj: &CoverageObjective) -> Result<()> {
    if obj.n_robots() != scenario.robots.len() {
        return Err(Error::InvalidParameter(format!(
            "objective has {} robots but the scenario has {}",
            obj.n_robots(),
            scenario.robots.len()
        )));
    }
    Ok(())
}

/// DRM on a scenario: partition by comm range, then robust assignment per
/// clique with budget min(attack_budget, clique size).
pub fn drm(scenario: &Scenario, obj: &CoverageObjective) -> Result<DistributedRun> {
    check_scenario(scenario, obj)?;
    let graph = CommGraph::build(&scenario.robot_positions(), scenario.comm_range)?;
    drm_on(&graph, obj, scenario.attack_budget)
}

pub fn drm_on(graph: &CommGraph, obj: &CoverageObjective, alpha: usize) -> Result<DistributedRun> {
    let start = Instant::now();
    let (partition, _) = graph.dcp_partition();
    let prefix = start.elapsed();
    let budgets: Vec<usize> = partition
        .cliques
        .iter()
        .map(|c| alpha.min(c.len()))
        .collect();
    finish_with_budgets(graph, obj, partition, &budgets, prefix, DRM_ROUNDS, 3, None)
}

/// DRM with an injected per-clique budget vector (indexed by the clique
/// order of this graph's partition). The robustness guarantee needs the
/// budgets to sum to at least `alpha`, so that is enforced here; the
/// per-clique cap budget ≤ |C_k| is structural.
pub fn drm_with_budgets(
    graph: &CommGraph,
    obj: &CoverageObjective,
    alpha: usize,
    budgets: &[usize],
) -> Result<DistributedRun> {
    let start = Instant::now();
    let (partition, _) = graph.dcp_partition();
    let prefix = start.elapsed();
    if budgets.len() != partition.k() {
        return Err(Error::InvalidParameter(format!(
            "{} budgets supplied for {} cliques",
            budgets.len(),
            partition.k()
        )));
    }
    for (k, (&b, clique)) in budgets.iter().zip(&partition.cliques).enumerate() {
        if b > clique.len() {
            return Err(Error::InvalidParameter(format!(
                "budget {b} for clique {k} exceeds its {} members",
                clique.len()
            )));
        }
    }
    if budgets.iter().sum::<usize>() < alpha {
        return Err(Error::InvalidParameter(format!(
            "budgets sum to {} which is below the attack budget {alpha}",
            budgets.iter().sum::<usize>()
        )));
    }
    finish_with_budgets(graph, obj, partition, budgets, prefix, DRM_ROUNDS, 3, None)
}

/// IDRM on a scenario: DRM with per-clique budgets shrunk by the 3-hop
/// demotion rule.
pub fn idrm(scenario: &Scenario, obj: &CoverageObjective) -> Result<DistributedRun> {
    check_scenario(scenario, obj)?;
    let graph = CommGraph::build(&scenario.robot_positions(), scenario.comm_range)?;
    idrm_on(&graph, obj, scenario.attack_budget)
}

pub fn idrm_on(graph: &CommGraph, obj: &CoverageObjective, alpha: usize) -> Result<DistributedRun> {
    let start = Instant::now();
    let (partition, _) = graph.dcp_partition();
    let inference = infer_alpha_known(&partition, graph, obj, alpha)?;
    let prefix = start.elapsed();
    let budgets = inference.alpha_per_clique.clone();
    // Value flooding costs one evaluation per action, attributed to the
    // owning robot's clique.
    let mut ranking_evals = vec![0u64; partition.k()];
    for (robot, &k) in partition.assignment.iter().enumerate() {
        ranking_evals[k] += obj.actions_of(robot)?.len() as u64;
    }
    let mut run = finish_with_budgets(
        graph,
        obj,
        partition,
        &budgets,
        prefix,
        IDRM_ROUNDS,
        6,
        Some(ranking_evals),
    )?;
    run.inference = Some(inference);
    Ok(run)
}

/// The 3-hop demotion rule: every clique starts at min(alpha, |C_k|); each
/// provisional bait robot that is not among the top-`alpha` robots of its
/// own 3-hop neighborhood (itself included) gives the count back.
///
/// Robots are ranked by their best single-action value, ties to the
/// smallest id — the same statistic the bait stage maximizes. Demotion
/// checks are independent, so the scan order (ascending robot id) only
/// affects the order of the audit records, never the counts.
pub fn infer_alpha_known(
    partition: &CliquePartition,
    graph: &CommGraph,
    obj: &CoverageObjective,
    alpha: usize,
) -> Result<AlphaInference> {
    let mut evals = 0u64;
    let all_robots: Vec<usize> = (0..obj.n_robots()).collect();
    let singles = best_singletons(&all_robots, obj, &mut evals)?;
    let values: Vec<f64> = singles.iter().map(|&(v, _, _)| v).collect();

    let mut alpha_per_clique = Vec::with_capacity(partition.k());
    let mut demotions = Vec::new();
    for (k, members) in partition.cliques.iter().enumerate() {
        let mut alpha_hat = alpha.min(members.len());
        let provisional: Vec<usize> = {
            let mut top = rank_robots(members.iter().copied(), &values);
            top.truncate(alpha_hat);
            top.sort_unstable();
            top
        };
        for &robot in &provisional {
            let mut hood: BTreeSet<usize> = graph.k_hop_neighbors(robot, 3)?;
            hood.insert(robot);
            let mut hood_top = rank_robots(hood.iter().copied(), &values);
            hood_top.truncate(alpha);
            if !hood_top.contains(&robot) {
                alpha_hat -= 1;
                demotions.push(DemotionRecord {
                    clique: k,
                    robot,
                    neighborhood: hood.into_iter().collect(),
                    neighborhood_top: hood_top,
                });
            }
        }
        alpha_per_clique.push(alpha_hat);
    }
    Ok(AlphaInference {
        alpha_per_clique,
        demotions,
        score_tables: Vec::new(),
    })
}

/// Descending best-single value, robot id ascending among ties. Values are
/// exact target counts, so plain comparison is the tolerance-aware one.
fn rank_robots(robots: impl IntoIterator<Item = usize>, values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = robots.into_iter().collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    order
}

/// DRM-UNA on a scenario. The scenario's attack budget is ignored: each
/// clique picks the count that maximizes its mean post-attack value.
pub fn drm_una(
    scenario: &Scenario,
    obj: &CoverageObjective,
    oracle: AttackModel,
) -> Result<DistributedRun> {
    check_scenario(scenario, obj)?;
    let graph = CommGraph::build(&scenario.robot_positions(), scenario.comm_range)?;
    drm_una_on(&graph, obj, oracle)
}

pub fn drm_una_on(
    graph: &CommGraph,
    obj: &CoverageObjective,
    oracle: AttackModel,
) -> Result<DistributedRun> {
    let start = Instant::now();
    let (partition, _) = graph.dcp_partition();
    let prefix = start.elapsed();

    let outcomes: Vec<(CliqueAlphaChoice, Duration)> = partition
        .cliques
        .par_iter()
        .map(|members| {
            let t = Instant::now();
            let choice = infer_alpha_unknown(members, obj, oracle)?;
            Ok((choice, t.elapsed()))
        })
        .collect::<Result<_>>()?;

    let mut assignment = Assignment::new();
    let mut alpha_per_clique = Vec::with_capacity(outcomes.len());
    let mut score_tables = Vec::with_capacity(outcomes.len());
    let mut evals_per_clique = Vec::with_capacity(outcomes.len());
    let mut durations = Vec::with_capacity(outcomes.len());
    for (choice, duration) in outcomes {
        alpha_per_clique.push(choice.alpha);
        score_tables.push(choice.scores);
        evals_per_clique.push(choice.evals);
        durations.push(duration);
        assignment.merge(choice.assignment)?;
    }
    let stats = comm_stats(
        graph,
        &partition,
        DRM_ROUNDS,
        3,
        prefix,
        &durations,
        evals_per_clique,
    )?;
    Ok(DistributedRun {
        assignment,
        partition,
        stats,
        inference: Some(AlphaInference {
            alpha_per_clique,
            demotions: Vec::new(),
            score_tables,
        }),
    })
}

/// Candidate scan for one clique with the attack count unknown: for every
/// count in 0..=|C_k| build the robust assignment, score it by its mean
/// value after a worst-case (or greedy) removal of 0..=|C_k| actions, and
/// keep the argmax (ties to the smallest count).
///
/// `Auto` resolves once per clique: exact while the largest probe stays
/// within the enumeration budget, greedy beyond it.
pub fn infer_alpha_unknown(
    members: &[usize],
    obj: &CoverageObjective,
    oracle: AttackModel,
) -> Result<CliqueAlphaChoice> {
    if members.is_empty() {
        return Err(Error::InvalidParameter("empty clique".into()));
    }
    let size = members.len();
    let oracle = match oracle {
        AttackModel::Auto => {
            if attack_subset_count(size, size) <= AUTO_EXACT_SUBSETS {
                AttackModel::WorstCase
            } else {
                AttackModel::Greedy
            }
        }
        fixed => fixed,
    };

    let mut evals = 0u64;
    let mut scores = Vec::with_capacity(size + 1);
    let mut best: Option<(usize, f64, Assignment)> = None;
    for candidate in 0..=size {
        let run = central_robust(members, obj, candidate)?;
        evals += run.evals;
        let actions = run.assignment.actions();
        let mut g = 0.0;
        for probe in 0..=size {
            let (attack, attack_evals) = attack_on_actions(oracle, obj, &actions, probe)?;
            evals += attack_evals;
            g += attack.residual_value;
        }
        let mean = g / size as f64;
        scores.push(mean);
        if best
            .as_ref()
            .is_none_or(|&(_, incumbent, _)| strictly_better(mean, incumbent))
        {
            best = Some((candidate, mean, run.assignment));
        }
    }
    let (alpha, _, assignment) = best.expect("at least the zero candidate is scored");
    Ok(CliqueAlphaChoice {
        alpha,
        scores,
        evals,
        assignment,
    })
}

/// Run central-robust on every clique (rayon pool, order-preserving merge)
/// and assemble the stats.
#[allow(clippy::too_many_arguments)]
fn finish_with_budgets(
    graph: &CommGraph,
    obj: &CoverageObjective,
    partition: CliquePartition,
    budgets: &[usize],
    prefix: Duration,
    rounds: u64,
    neighbor_msg_factor: u64,
    extra_evals: Option<Vec<u64>>,
) -> Result<DistributedRun> {
    let outcomes: Vec<(Assignment, u64, Duration)> = partition
        .cliques
        .par_iter()
        .zip(budgets.par_iter())
        .map(|(members, &alpha_k)| {
            let t = Instant::now();
            let run = central_robust(members, obj, alpha_k)?;
            Ok((run.assignment, run.evals, t.elapsed()))
        })
        .collect::<Result<_>>()?;

    let mut assignment = Assignment::new();
    let mut evals_per_clique = Vec::with_capacity(outcomes.len());
    let mut durations = Vec::with_capacity(outcomes.len());
    for (part, evals, duration) in outcomes {
        assignment.merge(part)?;
        evals_per_clique.push(evals);
        durations.push(duration);
    }
    if let Some(extra) = extra_evals {
        for (total, e) in evals_per_clique.iter_mut().zip(extra) {
            *total += e;
        }
    }
    let stats = comm_stats(
        graph,
        &partition,
        rounds,
        neighbor_msg_factor,
        prefix,
        &durations,
        evals_per_clique,
    )?;
    Ok(DistributedRun {
        assignment,
        partition,
        stats,
        inference: None,
    })
}

fn comm_stats(
    graph: &CommGraph,
    partition: &CliquePartition,
    rounds: u64,
    neighbor_msg_factor: u64,
    prefix: Duration,
    durations: &[Duration],
    evals_per_clique: Vec<u64>,
) -> Result<CommStats> {
    let mut messages_per_robot = Vec::with_capacity(graph.n());
    for robot in 0..graph.n() {
        let clique_size = partition.cliques[partition.clique_of(robot)?].len() as u64;
        messages_per_robot
            .push(neighbor_msg_factor * graph.degree(robot)? as u64 + (clique_size - 1));
    }
    let slowest = durations.iter().max().copied().unwrap_or_default();
    let parallel_time = prefix + slowest;
    let total_time = prefix + durations.iter().sum::<Duration>();
    Ok(CommStats {
        rounds,
        messages_per_robot,
        evals_per_clique,
        parallel_time,
        total_time,
    })
}
