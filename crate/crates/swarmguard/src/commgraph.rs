//! Communication graph, the three-round distributed clique partition, and
//! k-hop neighborhood queries.
//!
//! Robots i and j can communicate when `‖p_i − p_j‖₂ ≤ r_c` (boundary
//! inclusive). The clique partition simulates a synchronous protocol:
//!
//! 1. neighbor discovery — every robot learns its neighbor set N_i;
//! 2. every robot i receives each neighbor's closed neighborhood N_j⁺ and
//!    picks `C^i = argmax_{j ∈ N_i} |N_i⁺ ∩ N_j⁺|` (ties: smallest j);
//!    isolated robots pick `C^i = {i}`;
//! 3. robots exchange their picks; the final cliques are the equivalence
//!    classes of robots that selected the identical set.
//!
//! Every robot is a member of its own pick (`i ∈ C^i`), so two robots with
//! equal picks are mutually adjacent — each class is a genuine clique.
//! Each round costs robot i one send per neighbor, 3·|N_i| messages total.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scenario::Point;

#[derive(Debug, Clone)]
pub struct CommGraph {
    n: usize,
    /// Sorted neighbor lists; symmetric, no self-loops.
    neighbors: Vec<Vec<usize>>,
}

impl CommGraph {
    /// Euclidean disk graph over robot positions.
    pub fn build(positions: &[Point], comm_range: f64) -> Result<Self> {
        if comm_range.is_nan() || comm_range <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "comm_range must be positive (got {comm_range})"
            )));
        }
        let n = positions.len();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if positions[i].dist(&positions[j]) <= comm_range {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        Ok(CommGraph { n, neighbors })
    }

    /// Explicit edge list (fixtures and fuzzing). Edges are undirected;
    /// duplicates and self-loops are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::UnknownRobot(i.max(j)));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop on robot {i}")));
            }
            sets[i].insert(j);
            sets[j].insert(i);
        }
        Ok(CommGraph {
            n,
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, robot: usize) -> Result<&[usize]> {
        self.neighbors
            .get(robot)
            .map(|v| v.as_slice())
            .ok_or(Error::UnknownRobot(robot))
    }

    pub fn degree(&self, robot: usize) -> Result<usize> {
        Ok(self.neighbors(robot)?.len())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors
            .get(i)
            .is_some_and(|ns| ns.binary_search(&j).is_ok())
    }

    /// Robots at graph distance 1..=k from `robot`, excluding the robot.
    pub fn k_hop_neighbors(&self, robot: usize, k: usize) -> Result<BTreeSet<usize>> {
        if robot >= self.n {
            return Err(Error::UnknownRobot(robot));
        }
        let mut seen = vec![false; self.n];
        seen[robot] = true;
        let mut frontier = vec![robot];
        let mut out = BTreeSet::new();
        for _ in 0..k {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        next.push(v);
                        out.insert(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(out)
    }

    /// Three-round distributed clique partition. Returns the partition and
    /// each robot's message count (3·|N_i|).
    pub fn dcp_partition(&self) -> (CliquePartition, Vec<u64>) {
        let messages: Vec<u64> = self
            .neighbors
            .iter()
            .map(|ns| 3 * ns.len() as u64)
            .collect();

        // Round 2: pick the neighbor with the largest closed-neighborhood
        // intersection; the pick is that intersection set.
        let closed: Vec<BTreeSet<usize>> = (0..self.n)
            .map(|i| {
                let mut s: BTreeSet<usize> = self.neighbors[i].iter().copied().collect();
                s.insert(i);
                s
            })
            .collect();
        let picks: Vec<BTreeSet<usize>> = (0..self.n)
            .map(|i| {
                if self.neighbors[i].is_empty() {
                    return BTreeSet::from([i]);
                }
                let mut best: Option<(usize, BTreeSet<usize>)> = None;
                for &j in &self.neighbors[i] {
                    let inter: BTreeSet<usize> =
                        closed[i].intersection(&closed[j]).copied().collect();
                    if best.as_ref().is_none_or(|(sz, _)| inter.len() > *sz) {
                        best = Some((inter.len(), inter));
                    }
                }
                best.unwrap().1
            })
            .collect();

        // Round 3 reconciliation: group robots by identical picks.
        let mut assignment = vec![usize::MAX; self.n];
        let mut cliques: Vec<Vec<usize>> = Vec::new();
        let mut keys: Vec<&BTreeSet<usize>> = Vec::new();
        for i in 0..self.n {
            match keys.iter().position(|k| **k == picks[i]) {
                Some(idx) => {
                    assignment[i] = idx;
                    cliques[idx].push(i);
                }
                None => {
                    assignment[i] = cliques.len();
                    keys.push(&picks[i]);
                    cliques.push(vec![i]);
                }
            }
        }
        // Robots are scanned in id order, so cliques are already sorted by
        // their smallest member and members are ascending.
        (
            CliquePartition {
                cliques,
                assignment,
            },
            messages,
        )
    }
}

/// Disjoint cliques covering every robot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliquePartition {
    /// Ordered by smallest member; members ascending.
    pub cliques: Vec<Vec<usize>>,
    /// robot id -> index into `cliques`.
    pub assignment: Vec<usize>,
}

impl CliquePartition {
    pub fn k(&self) -> usize {
        self.cliques.len()
    }

    pub fn max_clique_size(&self) -> usize {
        self.cliques.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    pub fn clique_of(&self, robot: usize) -> Result<usize> {
        self.assignment
            .get(robot)
            .copied()
            .ok_or(Error::UnknownRobot(robot))
    }

    /// Structural check: disjoint, covering, and every pair in a clique
    /// adjacent in `graph`.
    pub fn validate(&self, graph: &CommGraph) -> Result<()> {
        let mut seen = vec![false; graph.n()];
        for (k, clique) in self.cliques.iter().enumerate() {
            if clique.is_empty() {
                return Err(Error::InvalidState(format!("clique {k} is empty")));
            }
            for &i in clique {
                if i >= graph.n() {
                    return Err(Error::UnknownRobot(i));
                }
                if seen[i] {
                    return Err(Error::InvalidState(format!(
                        "robot {i} appears in more than one clique"
                    )));
                }
                seen[i] = true;
                if self.assignment[i] != k {
                    return Err(Error::InvalidState(format!(
                        "robot {i} assigned to clique {} but listed in {k}",
                        self.assignment[i]
                    )));
                }
            }
            for (a, &i) in clique.iter().enumerate() {
                for &j in &clique[a + 1..] {
                    if !graph.has_edge(i, j) {
                        return Err(Error::InvalidState(format!(
                            "robots {i} and {j} share clique {k} but are not adjacent"
                        )));
                    }
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidState(format!(
                "robot {missing} is not covered by any clique"
            )));
        }
        Ok(())
    }

    /// Structured text dump: one `index: members…` line per clique.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, clique) in self.cliques.iter().enumerate() {
            out.push_str(&format!("{k}:"));
            for &i in clique {
                out.push_str(&format!(" {i}"));
            }
            out.push('\n');
        }
        out
    }
}
