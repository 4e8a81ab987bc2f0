//! World model: robots with motion-primitive actions, targets, geometry,
//! deterministic random generation, and scenario file I/O.
//!
//! A robot chooses one of five motion primitives per planning step. Each
//! primitive sweeps a rectangular sensing footprint:
//!
//! * `forward`/`backward`/`left`/`right`: a rectangle of length `l_t` along
//!   the motion axis and width `l_o` centered on that axis, anchored at the
//!   robot's current position and extending in the motion direction.
//! * `stay`: an `l_o × l_o` square centered on the robot (no translation).
//!
//! `l_t = l_f + l_o`, where `l_f` is the distance flown. Rectangles are
//! closed: a target on the boundary counts as covered.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version written to and required from scenario files.
pub const SCHEMA_VERSION: u64 = 1;

/// 2D point (also used as a 2D vector), meters / meters-per-second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// Boundary inclusive on all four sides.
    pub fn contains(&self, p: Point) -> bool {
        self.x0 <= p.x && p.x <= self.x1 && self.y0 <= p.y && p.y <= self.y1
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0)
    }
}

/// The five motion primitives, in action-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Forward,
    Backward,
    Left,
    Right,
    Stay,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] = [
        ActionKind::Forward,
        ActionKind::Backward,
        ActionKind::Left,
        ActionKind::Right,
        ActionKind::Stay,
    ];

    pub fn index(self) -> usize {
        match self {
            ActionKind::Forward => 0,
            ActionKind::Backward => 1,
            ActionKind::Left => 2,
            ActionKind::Right => 3,
            ActionKind::Stay => 4,
        }
    }

    /// Unit motion axis: forward = +x, backward = -x, left = +y, right = -y,
    /// stay = zero.
    pub fn axis(self) -> Point {
        match self {
            ActionKind::Forward => Point::new(1.0, 0.0),
            ActionKind::Backward => Point::new(-1.0, 0.0),
            ActionKind::Left => Point::new(0.0, 1.0),
            ActionKind::Right => Point::new(0.0, -1.0),
            ActionKind::Stay => Point::new(0.0, 0.0),
        }
    }
}

/// Footprint geometry shared by all robots in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub l_t: f64,
    pub l_o: f64,
    pub l_f: f64,
}

impl Geometry {
    /// Build from track length and width; flight distance is the difference.
    pub fn new(l_t: f64, l_o: f64) -> Result<Self> {
        let g = Geometry {
            l_t,
            l_o,
            l_f: l_t - l_o,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_o > 0.0 && self.l_t > 0.0 && self.l_f >= 0.0) {
            return Err(Error::Parse {
                field: "geometry".into(),
                reason: format!(
                    "require l_o > 0, l_t > 0, l_f >= 0 (got l_t={}, l_o={}, l_f={})",
                    self.l_t, self.l_o, self.l_f
                ),
            });
        }
        if !(self.l_t.is_finite() && self.l_o.is_finite() && self.l_f.is_finite())
            || (self.l_t - (self.l_f + self.l_o)).abs() > 1e-9
        {
            return Err(Error::Parse {
                field: "geometry".into(),
                reason: format!(
                    "l_t must equal l_f + l_o (got l_t={}, l_o={}, l_f={})",
                    self.l_t, self.l_o, self.l_f
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub id: usize,
    pub position: Point,
    /// The robot's five actions, ordered as [`ActionKind::ALL`]; action id
    /// `robot_id * 5 + kind_index`.
    pub action_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub id: usize,
    pub owner: usize,
    pub kind: ActionKind,
    pub region: Rect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub id: usize,
    pub position: Point,
    /// m/s; zero for static scenarios.
    pub velocity: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub comm_range: f64,
    pub attack_budget: usize,
    pub geometry: Geometry,
    pub robots: Vec<Robot>,
    /// Derived from robot positions and geometry; never serialized.
    pub actions: Vec<Action>,
    pub targets: Vec<Target>,
}

/// Sensing footprint of one motion primitive for a robot at `position`.
pub fn action_region(position: Point, kind: ActionKind, geometry: &Geometry) -> Rect {
    let (px, py) = (position.x, position.y);
    let h = geometry.l_o / 2.0;
    let l = geometry.l_t;
    match kind {
        ActionKind::Forward => Rect::new(px, py - h, px + l, py + h),
        ActionKind::Backward => Rect::new(px - l, py - h, px, py + h),
        ActionKind::Left => Rect::new(px - h, py, px + h, py + l),
        ActionKind::Right => Rect::new(px - h, py - l, px + h, py),
        ActionKind::Stay => Rect::new(px - h, py - h, px + h, py + h),
    }
}

fn build_actions(robots: &[Robot], geometry: &Geometry) -> Vec<Action> {
    let mut actions = Vec::with_capacity(robots.len() * 5);
    for robot in robots {
        for kind in ActionKind::ALL {
            actions.push(Action {
                id: robot.id * 5 + kind.index(),
                owner: robot.id,
                kind,
                region: action_region(robot.position, kind, geometry),
            });
        }
    }
    actions
}

impl Scenario {
    /// Assemble a scenario from raw parts, deriving the action table.
    pub fn assemble(
        seed: u64,
        comm_range: f64,
        attack_budget: usize,
        geometry: Geometry,
        robot_positions: &[Point],
        targets: Vec<Target>,
    ) -> Result<Scenario> {
        let robots: Vec<Robot> = robot_positions
            .iter()
            .enumerate()
            .map(|(id, &position)| Robot {
                id,
                position,
                action_ids: (id * 5..id * 5 + 5).collect(),
            })
            .collect();
        let actions = build_actions(&robots, &geometry);
        let scenario = Scenario {
            seed,
            comm_range,
            attack_budget,
            geometry,
            robots,
            actions,
            targets,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn robot_positions(&self) -> Vec<Point> {
        self.robots.iter().map(|r| r.position).collect()
    }

    pub fn target_positions(&self) -> Vec<Point> {
        self.targets.iter().map(|t| t.position).collect()
    }

    /// Check every structural invariant; load and generate both call this.
    pub fn validate(&self) -> Result<()> {
        if !(self.comm_range > 0.0 && self.comm_range.is_finite()) {
            return Err(Error::Parse {
                field: "comm_range".into(),
                reason: format!("must be positive and finite (got {})", self.comm_range),
            });
        }
        if self.attack_budget > self.robots.len() {
            return Err(Error::Parse {
                field: "attack_budget".into(),
                reason: format!(
                    "must not exceed the robot count {} (got {})",
                    self.robots.len(),
                    self.attack_budget
                ),
            });
        }
        self.geometry.validate()?;
        if self.robots.is_empty() {
            return Err(Error::Parse {
                field: "robots".into(),
                reason: "at least one robot required".into(),
            });
        }
        for (i, robot) in self.robots.iter().enumerate() {
            if robot.id != i {
                return Err(Error::Parse {
                    field: "robots.id".into(),
                    reason: format!(
                        "ids must be 0-based and contiguous (index {i} has id {})",
                        robot.id
                    ),
                });
            }
            if !robot.position.is_finite() {
                return Err(Error::Parse {
                    field: "robots.position".into(),
                    reason: format!("robot {} has a non-finite position", robot.id),
                });
            }
            if robot.action_ids.is_empty() {
                return Err(Error::Parse {
                    field: "robots.action_ids".into(),
                    reason: format!("robot {} has no actions", robot.id),
                });
            }
        }
        for (i, target) in self.targets.iter().enumerate() {
            if target.id != i {
                return Err(Error::Parse {
                    field: "targets.id".into(),
                    reason: format!(
                        "ids must be 0-based and contiguous (index {i} has id {})",
                        target.id
                    ),
                });
            }
            if !target.position.is_finite() || !target.velocity.is_finite() {
                return Err(Error::Parse {
                    field: "targets".into(),
                    reason: format!("target {} has a non-finite position or velocity", target.id),
                });
            }
        }
        for action in &self.actions {
            let robot = self
                .robots
                .get(action.owner)
                .ok_or(Error::UnknownRobot(action.owner))?;
            if !robot.action_ids.contains(&action.id) {
                return Err(Error::Parse {
                    field: "actions".into(),
                    reason: format!(
                        "action {} not listed by its owner {}",
                        action.id, action.owner
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Sample a scenario: robot and target positions i.i.d. uniform over `area`.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)` and the draw order is
/// fixed: all robot x coordinates, then all robot y, then all target x, then
/// all target y. Identical arguments produce a bit-identical scenario.
pub fn generate_scenario(
    seed: u64,
    n_robots: usize,
    n_targets: usize,
    area: Rect,
    comm_range: f64,
    attack_budget: usize,
    geometry: Geometry,
) -> Result<Scenario> {
    if n_robots == 0 {
        return Err(Error::InvalidParameter(
            "n_robots must be at least 1".into(),
        ));
    }
    if area.is_degenerate() {
        return Err(Error::InvalidParameter(format!(
            "area must be non-degenerate (got [{}, {}] x [{}, {}])",
            area.x0, area.x1, area.y0, area.y1
        )));
    }
    if comm_range.is_nan() || comm_range <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "comm_range must be positive (got {comm_range})"
        )));
    }
    if attack_budget > n_robots {
        return Err(Error::InvalidParameter(format!(
            "attack_budget {attack_budget} exceeds robot count {n_robots}"
        )));
    }
    geometry
        .validate()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |lo: f64, hi: f64, count: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..count).map(|_| rng.random_range(lo..=hi)).collect()
    };
    let rx = uniform(area.x0, area.x1, n_robots, &mut rng);
    let ry = uniform(area.y0, area.y1, n_robots, &mut rng);
    let tx = uniform(area.x0, area.x1, n_targets, &mut rng);
    let ty = uniform(area.y0, area.y1, n_targets, &mut rng);

    let robot_positions: Vec<Point> = rx
        .into_iter()
        .zip(ry)
        .map(|(x, y)| Point::new(x, y))
        .collect();
    let targets: Vec<Target> = tx
        .into_iter()
        .zip(ty)
        .enumerate()
        .map(|(id, (x, y))| Target {
            id,
            position: Point::new(x, y),
            velocity: Point::new(0.0, 0.0),
        })
        .collect();

    Scenario::assemble(
        seed,
        comm_range,
        attack_budget,
        geometry,
        &robot_positions,
        targets,
    )
}

// ---------------------------------------------------------------------------
// File form. Numeric fields are read permissively and validated by name so a
// bad value reports which field broke, not just a byte offset.

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u64,
    seed: u64,
    comm_range: f64,
    attack_budget: i64,
    geometry: Geometry,
    robots: Vec<RobotFile>,
    targets: Vec<TargetFile>,
}

#[derive(Serialize, Deserialize)]
struct RobotFile {
    id: i64,
    position: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct TargetFile {
    id: i64,
    position: [f64; 2],
    #[serde(default)]
    velocity: [f64; 2],
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    let file = ScenarioFile {
        schema_version: SCHEMA_VERSION,
        seed: scenario.seed,
        comm_range: scenario.comm_range,
        attack_budget: scenario.attack_budget as i64,
        geometry: scenario.geometry,
        robots: scenario
            .robots
            .iter()
            .map(|r| RobotFile {
                id: r.id as i64,
                position: r.position.into(),
            })
            .collect(),
        targets: scenario
            .targets
            .iter()
            .map(|t| TargetFile {
                id: t.id as i64,
                position: t.position.into(),
                velocity: t.velocity.into(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: file.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if file.attack_budget < 0 {
        return Err(Error::Parse {
            field: "attack_budget".into(),
            reason: format!("must be non-negative (got {})", file.attack_budget),
        });
    }
    let mut robot_positions = Vec::with_capacity(file.robots.len());
    for (i, r) in file.robots.iter().enumerate() {
        if r.id != i as i64 {
            return Err(Error::Parse {
                field: "robots.id".into(),
                reason: format!(
                    "ids must be 0-based and contiguous (index {i} has id {})",
                    r.id
                ),
            });
        }
        robot_positions.push(Point::from(r.position));
    }
    let mut targets = Vec::with_capacity(file.targets.len());
    for (i, t) in file.targets.iter().enumerate() {
        if t.id != i as i64 {
            return Err(Error::Parse {
                field: "targets.id".into(),
                reason: format!(
                    "ids must be 0-based and contiguous (index {i} has id {})",
                    t.id
                ),
            });
        }
        targets.push(Target {
            id: i,
            position: Point::from(t.position),
            velocity: Point::from(t.velocity),
        });
    }
    Scenario::assemble(
        file.seed,
        file.comm_range,
        file.attack_budget as usize,
        file.geometry,
        &robot_positions,
        targets,
    )
}
