//! One results row per (scenario, planner, attacker) run.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use swarmguard::attacks::attack_assignment;
use swarmguard::distributed::{drm, drm_una, idrm, AlphaInference};
use swarmguard::objective::CoverageObjective;
use swarmguard::robust::{central_greedy, central_robust, myopic, Assignment, PlannerRun};
use swarmguard::scenario::Scenario;
use swarmguard::tracking::{Attacker, Planner};
use swarmguard::{attacks::AttackModel, Result};

pub const CSV_HEADER: &str = "algo,seed,n,r_c,alpha,K,max_clique,rounds,msgs_total,\
                              evals_max_clique,parallel_time_s,coverage_pre,coverage_post";

/// A single line of the results CSV. `parallel_time_s` is wall-clock and is
/// the only column that varies between repeat runs of the same cell.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub algo: String,
    pub seed: u64,
    pub n: usize,
    pub r_c: f64,
    pub alpha: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub max_clique: usize,
    pub rounds: u64,
    pub msgs_total: u64,
    pub evals_max_clique: u64,
    pub parallel_time_s: f64,
    pub coverage_pre: f64,
    pub coverage_post: f64,
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.9},{},{}",
            self.algo,
            self.seed,
            self.n,
            self.r_c,
            self.alpha,
            self.k,
            self.max_clique,
            self.rounds,
            self.msgs_total,
            self.evals_max_clique,
            self.parallel_time_s,
            self.coverage_pre,
            self.coverage_post,
        )
    }
}

/// Everything a run produced beyond the CSV row, for --json / --dump-attack.
pub struct RunDetail {
    pub assignment: Assignment,
    pub removed: BTreeSet<usize>,
    pub cliques: Option<Vec<Vec<usize>>>,
    pub inference: Option<AlphaInference>,
}

/// Run one planner + one attacker on a scenario and package the outcome.
///
/// Central planners fill the communication columns with their degenerate
/// values (one clique spanning all robots, zero rounds and messages);
/// distributed planners report the simulated protocol's accounting.
pub fn run_one(
    scenario: &Scenario,
    planner: Planner,
    attacker: Attacker,
) -> Result<(ResultRow, RunDetail)> {
    let obj = CoverageObjective::from_scenario(scenario);
    let n = scenario.robots.len();
    let alpha = scenario.attack_budget;
    let all: Vec<usize> = (0..n).collect();

    struct Planned {
        assignment: Assignment,
        k: usize,
        max_clique: usize,
        rounds: u64,
        msgs_total: u64,
        evals_max_clique: u64,
        parallel_time_s: f64,
        cliques: Option<Vec<Vec<usize>>>,
        inference: Option<AlphaInference>,
    }

    let central = |run: PlannerRun, elapsed_s: f64| Planned {
        assignment: run.assignment,
        k: 1,
        max_clique: n,
        rounds: 0,
        msgs_total: 0,
        evals_max_clique: run.evals,
        parallel_time_s: elapsed_s,
        cliques: None,
        inference: None,
    };
    let distributed = |run: swarmguard::distributed::DistributedRun| Planned {
        k: run.partition.k(),
        max_clique: run.partition.max_clique_size(),
        rounds: run.stats.rounds,
        msgs_total: run.stats.messages_total(),
        evals_max_clique: run.stats.evals_max_clique(),
        parallel_time_s: run.stats.parallel_time.as_secs_f64(),
        assignment: run.assignment,
        cliques: Some(run.partition.cliques),
        inference: run.inference,
    };

    let planned = match planner {
        Planner::CentralGreedy => {
            let start = Instant::now();
            let run = central_greedy(&all, &obj)?;
            central(run, start.elapsed().as_secs_f64())
        }
        Planner::CentralRobust => {
            let start = Instant::now();
            let run = central_robust(&all, &obj, alpha.min(n))?;
            central(run, start.elapsed().as_secs_f64())
        }
        Planner::Myopic => {
            let start = Instant::now();
            let run = myopic(&all, &obj)?;
            central(run, start.elapsed().as_secs_f64())
        }
        Planner::Drm => distributed(drm(scenario, &obj)?),
        Planner::Idrm => distributed(idrm(scenario, &obj)?),
        Planner::DrmUna => distributed(drm_una(scenario, &obj, AttackModel::Auto)?),
    };

    let coverage_pre = obj.evaluate(&planned.assignment.actions())?;
    let (coverage_post, removed) = match attacker.model() {
        Some(model) => {
            let hit = attack_assignment(model, &obj, &planned.assignment, alpha)?;
            (hit.residual_value, hit.removed)
        }
        None => (coverage_pre, BTreeSet::new()),
    };

    let row = ResultRow {
        algo: planner.name().to_string(),
        seed: scenario.seed,
        n,
        r_c: scenario.comm_range,
        alpha,
        k: planned.k,
        max_clique: planned.max_clique,
        rounds: planned.rounds,
        msgs_total: planned.msgs_total,
        evals_max_clique: planned.evals_max_clique,
        parallel_time_s: planned.parallel_time_s,
        coverage_pre,
        coverage_post,
    };
    let detail = RunDetail {
        assignment: planned.assignment,
        removed,
        cliques: planned.cliques,
        inference: planned.inference,
    };
    Ok((row, detail))
}
