//! Multi-round tracking episodes: targets drift under a noisy
//! constant-velocity model, robots estimate them with per-target Kalman
//! filters, plan on the estimates, suffer a per-round attack, and are
//! scored against the ground truth.
//!
//! One round is: measure → filter → plan → attack → score → move → drift.
//! Attacks are non-permanent — a robot hit this round plans again next
//! round — and an attacked robot stays in the communication graph (it stops
//! sensing, not relaying). Planning and the attacker both see the
//! estimate-based objective; `coverage_pre`/`coverage_post` are counted
//! against true target positions, so estimation error shows up as the gap
//! between what the planner expected and what the log records.
//!
//! Everything is deterministic in the seed. The generator draws, per round:
//! two standard normals per target (measurement noise, target-id order),
//! then four per target (process noise), so logs are bit-reproducible.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attacks::{attack_on_actions, AttackModel};
use crate::commgraph::CommGraph;
use crate::distributed::{drm_on, drm_una_on, idrm_on};
use crate::error::{Error, Result};
use crate::objective::CoverageObjective;
use crate::robust::{central_greedy, central_robust, myopic, Assignment};
use crate::scenario::{ActionKind, Geometry, Point, Scenario, Target};

/// Version stamp written into every episode log.
pub const EPISODE_SCHEMA_VERSION: u64 = 1;

/// Smallest eigenvalue a covariance may show before it counts as non-PSD.
const PSD_TOLERANCE: f64 = 1e-9;

/// Linear-Gaussian target dynamics on the state [x, y, vx, vy].
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMotionModel {
    pub transition: Matrix4<f64>,
    pub process_noise_cov: Matrix4<f64>,
    pub measurement_noise_cov: Matrix2<f64>,
}

impl TargetMotionModel {
    /// Constant-velocity dynamics over time step `dt` with diagonal noise:
    /// `q_pos`/`q_vel` variance added to positions/velocities per step and
    /// `r_meas` variance on each measured coordinate.
    pub fn constant_velocity(dt: f64, q_pos: f64, q_vel: f64, r_meas: f64) -> Result<Self> {
        #[rustfmt::skip]
        let transition = Matrix4::new(
            1.0, 0.0, dt, 0.0,
            0.0, 1.0, 0.0, dt,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        );
        let model = TargetMotionModel {
            transition,
            process_noise_cov: Matrix4::from_diagonal(&Vector4::new(q_pos, q_pos, q_vel, q_vel)),
            measurement_noise_cov: Matrix2::from_diagonal(&Vector2::new(r_meas, r_meas)),
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive and finite (got {dt})"
            )));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.transition.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite transition matrix".into()));
        }
        check_psd4(&self.process_noise_cov, "process noise covariance")?;
        check_psd2(&self.measurement_noise_cov, "measurement noise covariance")?;
        Ok(())
    }
}

fn check_psd4(m: &Matrix4<f64>, what: &str) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) || (m - m.transpose()).amax() > PSD_TOLERANCE {
        return Err(Error::InvalidState(format!("{what} is not symmetric")));
    }
    let min = m.symmetric_eigen().eigenvalues.min();
    if min < -PSD_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "{what} has negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

fn check_psd2(m: &Matrix2<f64>, what: &str) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) || (m - m.transpose()).amax() > PSD_TOLERANCE {
        return Err(Error::InvalidState(format!("{what} is not symmetric")));
    }
    let min = m.symmetric_eigen().eigenvalues.min();
    if min < -PSD_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "{what} has negative eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Gaussian belief over one target's state.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl KalmanState {
    /// Initialize from the first position measurement: velocity unknown,
    /// so its mean is zero and its variance comes from the config.
    pub fn from_first_measurement(z: Point, pos_var: f64, vel_var: f64) -> Result<Self> {
        let state = KalmanState {
            mean: Vector4::new(z.x, z.y, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::new(pos_var, pos_var, vel_var, vel_var)),
        };
        state.checked()
    }

    pub fn position(&self) -> Point {
        Point::new(self.mean[0], self.mean[1])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.symmetric_eigen().eigenvalues.min()
    }

    /// Symmetrize, then reject if any eigenvalue dips below the tolerance.
    fn checked(mut self) -> Result<Self> {
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite filter mean".into()));
        }
        self.covariance = (self.covariance + self.covariance.transpose()) * 0.5;
        check_psd4(&self.covariance, "filter covariance")?;
        Ok(self)
    }
}

/// Time update: push the belief through the dynamics and add process noise.
pub fn kf_predict(state: &KalmanState, model: &TargetMotionModel) -> Result<KalmanState> {
    let f = &model.transition;
    KalmanState {
        mean: f * state.mean,
        covariance: f * state.covariance * f.transpose() + model.process_noise_cov,
    }
    .checked()
}

/// Measurement update with a position observation, in Joseph form so the
/// covariance stays PSD under roundoff.
pub fn kf_update(
    state: &KalmanState,
    model: &TargetMotionModel,
    measurement: Point,
) -> Result<KalmanState> {
    #[rustfmt::skip]
    let h = Matrix2x4::new(
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    );
    let z = Vector2::new(measurement.x, measurement.y);
    let innovation = z - h * state.mean;
    let s = h * state.covariance * h.transpose() + model.measurement_noise_cov;
    let s_inv = s.try_inverse().ok_or_else(|| {
        Error::InvalidState("singular innovation covariance in measurement update".into())
    })?;
    let gain: Matrix4x2<f64> = state.covariance * h.transpose() * s_inv;
    let closure = Matrix4::identity() - gain * h;
    KalmanState {
        mean: state.mean + gain * innovation,
        covariance: closure * state.covariance * closure.transpose()
            + gain * model.measurement_noise_cov * gain.transpose(),
    }
    .checked()
}

/// Draw from N(0, cov) via the eigendecomposition; tiny negative
/// eigenvalues (within tolerance) clamp to zero.
fn noise2(cov: &Matrix2<f64>, rng: &mut ChaCha8Rng) -> Vector2<f64> {
    let eig = cov.symmetric_eigen();
    let scale = Matrix2::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let z = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    eig.eigenvectors * scale * z
}

fn noise4(cov: &Matrix4<f64>, rng: &mut ChaCha8Rng) -> Vector4<f64> {
    let eig = cov.symmetric_eigen();
    let scale = Matrix4::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    let z = Vector4::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    eig.eigenvectors * scale * z
}

/// Advance every target one step: transition plus sampled process noise,
/// in target-id order (four draws per target).
pub fn step_targets(
    targets: &[Target],
    model: &TargetMotionModel,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Target>> {
    model.validate()?;
    let mut out = Vec::with_capacity(targets.len());
    for t in targets {
        let state = Vector4::new(t.position.x, t.position.y, t.velocity.x, t.velocity.y);
        let next = model.transition * state + noise4(&model.process_noise_cov, rng);
        out.push(Target {
            id: t.id,
            position: Point::new(next[0], next[1]),
            velocity: Point::new(next[2], next[3]),
        });
    }
    Ok(out)
}

/// Tunable episode parameters; all noise in SI units. A config file may
/// set any subset — missing fields keep these defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub dt: f64,
    pub q_pos: f64,
    pub q_vel: f64,
    pub r_meas: f64,
    pub init_pos_var: f64,
    pub init_vel_var: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            dt: 1.0,
            q_pos: 0.01,
            q_vel: 0.05,
            r_meas: 0.25,
            init_pos_var: 1.0,
            init_vel_var: 0.25,
        }
    }
}

impl EpisodeConfig {
    pub fn model(&self) -> Result<TargetMotionModel> {
        for (name, v) in [
            ("q_pos", self.q_pos),
            ("q_vel", self.q_vel),
            ("r_meas", self.r_meas),
            ("init_pos_var", self.init_pos_var),
            ("init_vel_var", self.init_vel_var),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative (got {v})"
                )));
            }
        }
        TargetMotionModel::constant_velocity(self.dt, self.q_pos, self.q_vel, self.r_meas)
    }
}

/// Which assignment algorithm an episode runs each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Planner {
    CentralGreedy,
    CentralRobust,
    Myopic,
    Drm,
    Idrm,
    DrmUna,
}

impl Planner {
    pub const ALL: [Planner; 6] = [
        Planner::CentralGreedy,
        Planner::CentralRobust,
        Planner::Myopic,
        Planner::Drm,
        Planner::Idrm,
        Planner::DrmUna,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Planner::CentralGreedy => "central-greedy",
            Planner::CentralRobust => "central-robust",
            Planner::Myopic => "myopic",
            Planner::Drm => "drm",
            Planner::Idrm => "idrm",
            Planner::DrmUna => "drm-una",
        }
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Planner::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse {
                field: "planner".into(),
                reason: format!(
                    "unknown planner `{s}` (expected one of: {})",
                    Planner::ALL.map(Planner::name).join(", ")
                ),
            })
    }
}

/// Which adversary removes actions each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attacker {
    WorstCase,
    Greedy,
    None,
}

impl Attacker {
    pub const ALL: [Attacker; 3] = [Attacker::WorstCase, Attacker::Greedy, Attacker::None];

    pub fn name(self) -> &'static str {
        match self {
            Attacker::WorstCase => "worst-case",
            Attacker::Greedy => "greedy",
            Attacker::None => "none",
        }
    }

    /// The oracle this adversary runs, or `None` for the attack-free case.
    pub fn model(self) -> Option<AttackModel> {
        match self {
            Attacker::WorstCase => Some(AttackModel::WorstCase),
            Attacker::Greedy => Some(AttackModel::Greedy),
            Attacker::None => None,
        }
    }
}

impl fmt::Display for Attacker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attacker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Attacker::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse {
                field: "attacker".into(),
                reason: format!(
                    "unknown attacker `{s}` (expected one of: {})",
                    Attacker::ALL.map(Attacker::name).join(", ")
                ),
            })
    }
}

/// Everything observable about one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Robot positions at planning time (before this round's motion).
    pub robot_positions: Vec<Point>,
    /// Ground-truth target positions the round was scored against.
    pub target_positions: Vec<Point>,
    /// Filter position means the planner saw.
    pub target_estimates: Vec<Point>,
    pub assignment: Assignment,
    /// Actions the adversary removed this round (ascending ids).
    pub removed_actions: Vec<usize>,
    /// True targets covered by the full assignment.
    pub coverage_pre: f64,
    /// True targets covered after the removal.
    pub coverage_post: f64,
    /// Smallest covariance eigenvalue across all filters this round.
    pub kf_min_eigen: f64,
}

/// Full record of one episode; serializes to versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub schema_version: u64,
    pub planner: Planner,
    pub attacker: Attacker,
    pub seed: u64,
    pub rounds: usize,
    pub comm_range: f64,
    pub attack_budget: usize,
    pub geometry: Geometry,
    pub config: EpisodeConfig,
    pub records: Vec<RoundRecord>,
}

impl EpisodeLog {
    /// Recompute (coverage_pre, coverage_post) for every round from the
    /// logged positions and actions alone.
    pub fn replay_coverage(&self) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(self.records.len());
        for rec in &self.records {
            let obj = CoverageObjective::from_geometry(
                &rec.robot_positions,
                &self.geometry,
                &rec.target_positions,
            );
            let actions = rec.assignment.actions();
            let pre = obj.evaluate(&actions)?;
            let kept: Vec<usize> = actions
                .iter()
                .copied()
                .filter(|a| !rec.removed_actions.contains(a))
                .collect();
            let post = obj.evaluate(&kept)?;
            out.push((pre, post));
        }
        Ok(out)
    }

    pub fn mean_coverage_post(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.coverage_post).sum::<f64>() / self.records.len() as f64
    }
}

pub fn save_episode_log(log: &EpisodeLog, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(log)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_episode_log(path: &Path) -> Result<EpisodeLog> {
    let text = std::fs::read_to_string(path)?;
    let log: EpisodeLog = serde_json::from_str(&text)?;
    if log.schema_version != EPISODE_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: log.schema_version,
            expected: EPISODE_SCHEMA_VERSION,
        });
    }
    Ok(log)
}

fn with_round(round: usize, e: Error) -> Error {
    match e {
        Error::Capacity(msg) => Error::Capacity(format!("round {round}: {msg}")),
        Error::InvalidParameter(msg) => Error::InvalidParameter(format!("round {round}: {msg}")),
        Error::InvalidState(msg) => Error::InvalidState(format!("round {round}: {msg}")),
        other => other,
    }
}

fn plan(
    planner: Planner,
    obj: &CoverageObjective,
    robots: &[Point],
    comm_range: f64,
    alpha: usize,
) -> Result<Assignment> {
    let all: Vec<usize> = (0..robots.len()).collect();
    Ok(match planner {
        Planner::CentralGreedy => central_greedy(&all, obj)?.assignment,
        Planner::CentralRobust => central_robust(&all, obj, alpha)?.assignment,
        Planner::Myopic => myopic(&all, obj)?.assignment,
        Planner::Drm => drm_on(&CommGraph::build(robots, comm_range)?, obj, alpha)?.assignment,
        Planner::Idrm => idrm_on(&CommGraph::build(robots, comm_range)?, obj, alpha)?.assignment,
        Planner::DrmUna => {
            drm_una_on(
                &CommGraph::build(robots, comm_range)?,
                obj,
                AttackModel::Auto,
            )?
            .assignment
        }
    })
}

/// Run one episode. Per round: measure all targets, update the filters
/// (initialized from the first measurements), plan on the estimate means,
/// attack the plan on that same objective, score against ground truth,
/// move every robot `l_f` along its chosen action's axis, drift targets.
pub fn run_episode(
    scenario: &Scenario,
    planner: Planner,
    attacker: Attacker,
    rounds: usize,
    config: &EpisodeConfig,
    seed: u64,
) -> Result<EpisodeLog> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    if scenario.targets.is_empty() {
        return Err(Error::InvalidParameter(
            "a tracking episode needs at least one target".into(),
        ));
    }
    scenario.validate()?;
    let model = config.model()?;
    let alpha = scenario.attack_budget;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut robots = scenario.robot_positions();
    let mut targets = scenario.targets.clone();
    let mut filters: Vec<KalmanState> = Vec::new();
    let mut records = Vec::with_capacity(rounds);

    for round in 0..rounds {
        let mut measurements = Vec::with_capacity(targets.len());
        for t in &targets {
            let noise = noise2(&model.measurement_noise_cov, &mut rng);
            measurements.push(Point::new(t.position.x + noise[0], t.position.y + noise[1]));
        }
        if round == 0 {
            filters = measurements
                .iter()
                .map(|&z| {
                    KalmanState::from_first_measurement(z, config.init_pos_var, config.init_vel_var)
                })
                .collect::<Result<_>>()?;
        } else {
            for (filter, &z) in filters.iter_mut().zip(&measurements) {
                let predicted = kf_predict(filter, &model).map_err(|e| with_round(round, e))?;
                *filter = kf_update(&predicted, &model, z).map_err(|e| with_round(round, e))?;
            }
        }
        let kf_min_eigen = filters
            .iter()
            .map(KalmanState::min_eigenvalue)
            .fold(f64::INFINITY, f64::min);
        let estimates: Vec<Point> = filters.iter().map(KalmanState::position).collect();

        let planning_obj =
            CoverageObjective::from_geometry(&robots, &scenario.geometry, &estimates);
        let assignment = plan(planner, &planning_obj, &robots, scenario.comm_range, alpha)
            .map_err(|e| with_round(round, e))?;
        let actions = assignment.actions();

        let removed_actions: Vec<usize> = match attacker.model() {
            Some(oracle) => attack_on_actions(oracle, &planning_obj, &actions, alpha)
                .map_err(|e| with_round(round, e))?
                .0
                .removed
                .into_iter()
                .collect(),
            None => Vec::new(),
        };

        let target_positions: Vec<Point> = targets.iter().map(|t| t.position).collect();
        let true_obj =
            CoverageObjective::from_geometry(&robots, &scenario.geometry, &target_positions);
        let coverage_pre = true_obj.evaluate(&actions)?;
        let kept: Vec<usize> = actions
            .iter()
            .copied()
            .filter(|a| !removed_actions.contains(a))
            .collect();
        let coverage_post = true_obj.evaluate(&kept)?;

        records.push(RoundRecord {
            round,
            robot_positions: robots.clone(),
            target_positions,
            target_estimates: estimates,
            assignment: assignment.clone(),
            removed_actions,
            coverage_pre,
            coverage_post,
            kf_min_eigen,
        });

        for (rid, pos) in robots.iter_mut().enumerate() {
            let action = assignment
                .action_of(rid)
                .expect("every planner assigns every robot");
            let axis = ActionKind::ALL[action % ActionKind::ALL.len()].axis();
            pos.x += scenario.geometry.l_f * axis.x;
            pos.y += scenario.geometry.l_f * axis.y;
        }
        targets = step_targets(&targets, &model, &mut rng)?;
    }

    Ok(EpisodeLog {
        schema_version: EPISODE_SCHEMA_VERSION,
        planner,
        attacker,
        seed,
        rounds,
        comm_range: scenario.comm_range,
        attack_budget: alpha,
        geometry: scenario.geometry,
        config: *config,
        records,
    })
}
