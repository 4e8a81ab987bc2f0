//! Monte Carlo sweeps over (seed, N, r_c, alpha, planner) grids.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swarmguard::scenario::{generate_scenario, Geometry, Rect};
use swarmguard::tracking::{Attacker, Planner};
use swarmguard::{Error, Result};

use crate::row::{run_one, ResultRow, CSV_HEADER};

/// How the attack budget scales with the team size.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// The listed budgets, used as-is for every N.
    Fixed(Vec<usize>),
    /// One budget per listed numerator k: alpha = floor(N * k / 4).
    QuarterFloors(Vec<u32>),
}

impl AlphaRule {
    fn alphas(&self, n: usize) -> Vec<usize> {
        match self {
            AlphaRule::Fixed(values) => values.clone(),
            AlphaRule::QuarterFloors(ks) => ks.iter().map(|&k| n * k as usize / 4).collect(),
        }
    }
}

fn default_targets() -> usize {
    100
}
fn default_area() -> f64 {
    200.0
}
fn default_l_t() -> f64 {
    10.0
}
fn default_l_o() -> f64 {
    3.0
}

/// A sweep description, read from JSON. Every cell of
/// seeds x n_robots x r_c x alpha(N) x planners becomes one CSV row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    pub n_robots: Vec<usize>,
    pub r_c: Vec<f64>,
    pub alpha: AlphaRule,
    pub planners: Vec<Planner>,
    pub attacker: Attacker,
    #[serde(default = "default_targets")]
    pub n_targets: usize,
    /// Side of the square deployment area [0, area] x [0, area].
    #[serde(default = "default_area")]
    pub area: f64,
    #[serde(default = "default_l_t")]
    pub l_t: f64,
    #[serde(default = "default_l_o")]
    pub l_o: f64,
    /// Output CSV path; `--out` overrides it.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl SweepConfig {
    /// A small grid mirroring the usual evaluation layout: three
    /// communication ranges, budgets of N/4, N/2 and 3N/4, every planner,
    /// greedy attacks so nothing hits an enumeration cap.
    pub fn template() -> Self {
        SweepConfig {
            seeds: (1..=30).collect(),
            n_robots: vec![10, 20],
            r_c: vec![30.0, 60.0, 90.0],
            alpha: AlphaRule::QuarterFloors(vec![1, 2, 3]),
            planners: vec![
                Planner::CentralGreedy,
                Planner::CentralRobust,
                Planner::Myopic,
                Planner::Drm,
                Planner::Idrm,
            ],
            attacker: Attacker::Greedy,
            n_targets: default_targets(),
            area: default_area(),
            l_t: default_l_t(),
            l_o: default_l_o(),
            out: Some(PathBuf::from("results.csv")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::Parse {
                field: "sweep config".into(),
                reason,
            })
        };
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        if self.n_robots.is_empty() || self.n_robots.contains(&0) {
            return fail("n_robots must be non-empty and positive".into());
        }
        if self.r_c.iter().any(|&r| r <= 0.0 || !r.is_finite()) || self.r_c.is_empty() {
            return fail("r_c must be non-empty, positive and finite".into());
        }
        if self.planners.is_empty() {
            return fail("planner list must be non-empty".into());
        }
        if let AlphaRule::QuarterFloors(ks) = &self.alpha {
            if ks.is_empty() {
                return fail("quarter_floors must list at least one numerator".into());
            }
            if ks.iter().any(|&k| k > 4) {
                return fail("quarter_floors numerators must be at most 4".into());
            }
        }
        for &n in &self.n_robots {
            for alpha in self.alpha.alphas(n) {
                if alpha > n {
                    return fail(format!("alpha {alpha} exceeds n_robots {n}"));
                }
            }
        }
        if self.area <= 0.0 || !self.area.is_finite() {
            return fail("area must be positive and finite".into());
        }
        Geometry::new(self.l_t, self.l_o)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Cell {
    seed: u64,
    n: usize,
    r_c: f64,
    alpha: usize,
    planner: Planner,
}

enum Outcome {
    Done(ResultRow),
    Failed { cell: Cell, reason: String },
}

/// Run the whole grid. Returns the CSV text (rows in grid order, then the
/// summary block), the number of rows, and the number of failed cells.
/// Individual failures are reported as `NA` rows and noted on stderr; they
/// never abort the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<(String, usize, usize)> {
    config.validate()?;

    let mut cells = Vec::new();
    for &seed in &config.seeds {
        for &n in &config.n_robots {
            for &r_c in &config.r_c {
                for alpha in config.alpha.alphas(n) {
                    for &planner in &config.planners {
                        cells.push(Cell {
                            seed,
                            n,
                            r_c,
                            alpha,
                            planner,
                        });
                    }
                }
            }
        }
    }

    let area = Rect::new(0.0, 0.0, config.area, config.area);
    let geometry = Geometry::new(config.l_t, config.l_o)?;
    let outcomes: Vec<Outcome> = cells
        .into_par_iter()
        .map(|cell| {
            let run = generate_scenario(
                cell.seed,
                cell.n,
                config.n_targets,
                area,
                cell.r_c,
                cell.alpha,
                geometry,
            )
            .and_then(|scenario| run_one(&scenario, cell.planner, config.attacker));
            match run {
                Ok((row, _)) => Outcome::Done(row),
                Err(e) => Outcome::Failed {
                    cell,
                    reason: e.to_string(),
                },
            }
        })
        .collect();

    let mut text = String::new();
    let mut failed = 0usize;
    writeln!(text, "{CSV_HEADER}").unwrap();
    for outcome in &outcomes {
        match outcome {
            Outcome::Done(row) => writeln!(text, "{}", row.to_csv()).unwrap(),
            Outcome::Failed { cell, reason } => {
                failed += 1;
                eprintln!(
                    "cell failed: algo={} seed={} n={} r_c={} alpha={}: {reason}",
                    cell.planner.name(),
                    cell.seed,
                    cell.n,
                    cell.r_c,
                    cell.alpha
                );
                writeln!(
                    text,
                    "{},{},{},{},{},NA,NA,NA,NA,NA,NA,NA,NA",
                    cell.planner.name(),
                    cell.seed,
                    cell.n,
                    cell.r_c,
                    cell.alpha
                )
                .unwrap();
            }
        }
    }
    write_summary(&mut text, &outcomes);
    Ok((text, outcomes.len(), failed))
}

/// Per-setting means over seeds, appended as comment lines so the file
/// stays a single valid CSV.
fn write_summary(text: &mut String, outcomes: &[Outcome]) {
    type Key = (String, usize, String, usize);
    type Group = (Key, Vec<(f64, f64)>, usize);
    let mut groups: Vec<Group> = Vec::new();
    for outcome in outcomes {
        let (key, sample) = match outcome {
            Outcome::Done(row) => (
                (row.algo.clone(), row.n, format!("{}", row.r_c), row.alpha),
                Some((row.coverage_pre, row.coverage_post)),
            ),
            Outcome::Failed { cell, .. } => (
                (
                    cell.planner.name().to_string(),
                    cell.n,
                    format!("{}", cell.r_c),
                    cell.alpha,
                ),
                None,
            ),
        };
        let group = match groups.iter_mut().find(|(k, _, _)| *k == key) {
            Some(g) => g,
            None => {
                groups.push((key, Vec::new(), 0));
                groups.last_mut().unwrap()
            }
        };
        match sample {
            Some(s) => group.1.push(s),
            None => group.2 += 1,
        }
    }

    for ((algo, n, r_c, alpha), samples, failed) in &groups {
        let runs = samples.len();
        let (mean_pre, mean_post) = if runs > 0 {
            let pre: f64 = samples.iter().map(|s| s.0).sum();
            let post: f64 = samples.iter().map(|s| s.1).sum();
            (
                format!("{}", pre / runs as f64),
                format!("{}", post / runs as f64),
            )
        } else {
            ("NA".to_string(), "NA".to_string())
        };
        writeln!(
            text,
            "# summary: algo={algo} n={n} r_c={r_c} alpha={alpha} runs={runs} \
             failed={failed} mean_coverage_pre={mean_pre} mean_coverage_post={mean_post}"
        )
        .unwrap();
    }
}
