//! Fixtures and generators shared by the unit tests. Compiled only for
//! `cargo test`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::commgraph::CommGraph;
use crate::objective::CoverageObjective;
use crate::scenario::{Geometry, Point, Scenario, Target};

/// Positions of the 15-robot topology fixture (comm range 30): five cliques
/// {0}, {1,7}, {2,10,11,12}, {3,4,5,6}, {8,9,13,14}, with robot 1 three hops
/// away from robots 8, 9, 11 and 12.
pub(crate) const FIFTEEN_ROBOT_POSITIONS: [(f64, f64); 15] = [
    (67.16, 138.08),
    (80.16, 115.95),
    (87.73, 153.77),
    (106.30, 111.08),
    (115.92, 85.85),
    (130.34, 98.79),
    (116.22, 94.52),
    (80.28, 106.63),
    (132.78, 64.77),
    (148.84, 79.14),
    (108.90, 137.95),
    (103.30, 163.56),
    (102.59, 161.86),
    (157.02, 53.87),
    (158.44, 58.19),
];

/// Expected adjacency of the 15-robot fixture under comm range 30.
pub(crate) const FIFTEEN_ROBOT_ADJACENCY: [&[usize]; 15] = [
    &[1, 2],
    &[0, 3, 7],
    &[0, 10, 11, 12],
    &[1, 4, 5, 6, 7, 10],
    &[3, 5, 6, 8],
    &[3, 4, 6, 9],
    &[3, 4, 5],
    &[1, 3],
    &[4, 9, 13, 14],
    &[5, 8, 13, 14],
    &[2, 3, 11, 12],
    &[2, 10, 12],
    &[2, 10, 11],
    &[8, 9, 14],
    &[8, 9, 13],
];

/// The 15-robot scenario with targets clustered under robots 4 and 5 and a
/// single target each near robots 1 and 7. Attack budget 2.
pub(crate) fn fifteen_robot_scenario() -> Scenario {
    let positions: Vec<Point> = FIFTEEN_ROBOT_POSITIONS
        .iter()
        .map(|&(x, y)| Point::new(x, y))
        .collect();
    let target_points = [
        (115.9, 85.8),
        (116.0, 85.9),
        (115.8, 85.9),
        (130.3, 98.8),
        (130.4, 98.7),
        (130.2, 98.9),
        (80.2, 115.9),
        (80.3, 106.6),
    ];
    let targets: Vec<Target> = target_points
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| Target {
            id,
            position: Point::new(x, y),
            velocity: Point::new(0.0, 0.0),
        })
        .collect();
    Scenario::assemble(
        0,
        30.0,
        2,
        Geometry::new(10.0, 3.0).unwrap(),
        &positions,
        targets,
    )
    .unwrap()
}

/// Two robots on a line: robot 1's forward sweep covers all four targets,
/// every action of robot 0 covers a strict subset of them.
pub(crate) fn overlap_pair() -> CoverageObjective {
    let geometry = Geometry::new(10.0, 3.0).unwrap();
    CoverageObjective::from_geometry(
        &[Point::new(5.0, 0.0), Point::new(0.0, 0.0)],
        &geometry,
        &[
            Point::new(2.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(6.0, 0.0),
            Point::new(8.0, 0.0),
        ],
    )
}

/// Disjoint coverage across robots: f is additive.
pub(crate) fn additive_pair() -> CoverageObjective {
    CoverageObjective::from_parts(
        vec![0, 0, 1, 1],
        vec![vec![0], vec![1], vec![2], vec![3]],
        4,
    )
    .unwrap()
}

/// Two robots whose actions cover the exact same target.
pub(crate) fn duplicate_pair() -> CoverageObjective {
    CoverageObjective::from_parts(vec![0, 1], vec![vec![0], vec![0]], 1).unwrap()
}

/// Random synthetic objective: `n_robots` robots with 1..=max_actions actions
/// each, coverage sampled per (action, target) pair.
pub(crate) fn random_objective(
    rng: &mut ChaCha8Rng,
    n_robots: usize,
    max_actions: usize,
    n_targets: usize,
) -> CoverageObjective {
    let mut owner = Vec::new();
    let mut covered = Vec::new();
    for rid in 0..n_robots {
        let count = rng.random_range(1..=max_actions);
        for _ in 0..count {
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

/// Erdős–Rényi style random graph over `n` robots.
pub(crate) fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> CommGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    CommGraph::from_edges(n, &edges).unwrap()
}
