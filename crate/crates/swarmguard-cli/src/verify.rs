//! Bound certification on fuzzed small instances.
//!
//! Every instance is small enough for the exact oracles: exact curvature,
//! exact optimum of the max-min problem, exact worst-case attacks. The
//! planners under test must then clear their guarantees,
//!
//!   f(S \ A*(S)) >= (1 - nu) / 2 * f*   for drm and idrm,
//!   f(S \ A*(S)) >= (1 - nu)     * f*   for myopic,
//!
//! on every single instance. Any miss is a bug, not noise.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use swarmguard::attacks::{optimal_value, worst_case_attack};
use swarmguard::commgraph::CommGraph;
use swarmguard::distributed::{drm_on, idrm_on};
use swarmguard::objective::{curvature_exact, CoverageObjective};
use swarmguard::robust::myopic;
use swarmguard::Result;

use rand::SeedableRng;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct VerifyParams {
    pub instances: u64,
    pub seed: u64,
    pub max_robots: usize,
    pub max_actions: usize,
    pub max_alpha: usize,
}

pub struct InstanceReport {
    pub n_robots: usize,
    pub n_actions: usize,
    pub alpha: usize,
    pub nu: f64,
    pub fstar: f64,
    pub drm_ratio: f64,
    pub idrm_ratio: f64,
    pub myopic_ratio: f64,
    pub violations: Vec<String>,
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    params: &VerifyParams,
) -> Result<(CoverageObjective, CommGraph, usize)> {
    let n_robots = rng.random_range(1..=params.max_robots.max(1));
    let n_targets = rng.random_range(1..=6usize);
    let mut owner = Vec::new();
    let mut covered = Vec::new();
    for robot in 0..n_robots {
        for _ in 0..rng.random_range(1..=params.max_actions.max(1)) {
            owner.push(robot);
            covered.push(
                (0..n_targets)
                    .filter(|_| rng.random_bool(0.5))
                    .collect::<Vec<usize>>(),
            );
        }
    }
    let obj = CoverageObjective::from_parts(owner, covered, n_targets)?;

    let mut edges = Vec::new();
    for i in 0..n_robots {
        for j in i + 1..n_robots {
            if rng.random_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    let graph = CommGraph::from_edges(n_robots, &edges)?;
    let alpha = rng.random_range(0..=params.max_alpha.min(n_robots));
    Ok((obj, graph, alpha))
}

fn ratio(residual: f64, fstar: f64) -> f64 {
    if fstar > EPS {
        residual / fstar
    } else {
        1.0
    }
}

/// Check one instance against all three guarantees.
pub fn check_instance(
    obj: &CoverageObjective,
    graph: &CommGraph,
    alpha: usize,
) -> Result<InstanceReport> {
    let nu = curvature_exact(obj, None)?.value;
    let (fstar, _) = optimal_value(obj, alpha)?;
    let all: Vec<usize> = (0..obj.n_robots()).collect();

    let drm_run = drm_on(graph, obj, alpha)?;
    let idrm_run = idrm_on(graph, obj, alpha)?;
    let myopic_run = myopic(&all, obj)?;
    let drm_residual = worst_case_attack(obj, &drm_run.assignment, alpha)?.residual_value;
    let idrm_residual = worst_case_attack(obj, &idrm_run.assignment, alpha)?.residual_value;
    let myopic_residual = worst_case_attack(obj, &myopic_run.assignment, alpha)?.residual_value;

    let half_bound = (1.0 - nu) / 2.0 * fstar;
    let full_bound = (1.0 - nu) * fstar;
    let mut violations = Vec::new();
    for (name, residual, bound) in [
        ("drm", drm_residual, half_bound),
        ("idrm", idrm_residual, half_bound),
        ("myopic", myopic_residual, full_bound),
    ] {
        if residual + EPS < bound {
            violations.push(format!(
                "{name} residual {residual} falls below its bound {bound}"
            ));
        }
    }

    Ok(InstanceReport {
        n_robots: obj.n_robots(),
        n_actions: obj.n_actions(),
        alpha,
        nu,
        fstar,
        drm_ratio: ratio(drm_residual, fstar),
        idrm_ratio: ratio(idrm_residual, fstar),
        myopic_ratio: ratio(myopic_residual, fstar),
        violations,
    })
}

/// Fuzz `params.instances` instances, print one report line each, and
/// return how many violated a bound.
pub fn certify(params: &VerifyParams) -> Result<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut violations = 0u64;
    for index in 0..params.instances {
        let (obj, graph, alpha) = random_instance(&mut rng, params)?;
        let report = check_instance(&obj, &graph, alpha)?;
        let verdict = if report.violations.is_empty() {
            "ok"
        } else {
            "VIOLATION"
        };
        println!(
            "instance {index}: n={} actions={} alpha={} nu={:.3} fstar={} \
             drm_ratio={:.3} idrm_ratio={:.3} myopic_ratio={:.3} {verdict}",
            report.n_robots,
            report.n_actions,
            report.alpha,
            report.nu,
            report.fstar,
            report.drm_ratio,
            report.idrm_ratio,
            report.myopic_ratio,
        );
        for v in &report.violations {
            println!("  {v}");
        }
        violations += report.violations.len() as u64;
    }
    println!(
        "checked {} instances: {violations} bound violations",
        params.instances
    );
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Additive objective (nu = 0): myopic is optimal, so its ratio is
    /// exactly 1 and the half bound holds for the distributed planners.
    #[test]
    fn additive_instance_gives_myopic_ratio_one() {
        // Three robots, disjoint unit coverage per action.
        let owner = vec![0, 0, 1, 1, 2];
        let covered = vec![vec![0], vec![1], vec![2], vec![3], vec![4]];
        let obj = CoverageObjective::from_parts(owner, covered, 5).unwrap();
        let graph = CommGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let report = check_instance(&obj, &graph, 1).unwrap();
        assert_eq!(report.nu, 0.0);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert_eq!(report.myopic_ratio, 1.0);
    }

    /// Fully duplicated coverage (nu = 1): the bounds are vacuous and the
    /// report still carries finite ratios.
    #[test]
    fn redundant_instance_reports_vacuous_bounds() {
        let owner = vec![0, 1];
        let covered = vec![vec![0], vec![0]];
        let obj = CoverageObjective::from_parts(owner, covered, 1).unwrap();
        let graph = CommGraph::from_edges(2, &[(0, 1)]).unwrap();
        let report = check_instance(&obj, &graph, 1).unwrap();
        assert_eq!(report.nu, 1.0);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.drm_ratio.is_finite());
        assert!(report.myopic_ratio.is_finite());
    }

    #[test]
    fn fuzzed_corpus_is_clean() {
        let params = VerifyParams {
            instances: 25,
            seed: 7,
            max_robots: 4,
            max_actions: 3,
            max_alpha: 2,
        };
        assert_eq!(certify(&params).unwrap(), 0);
    }
}
