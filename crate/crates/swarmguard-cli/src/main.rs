//! Command-line harness for the swarmguard library.
//!
//! Subcommands:
//!   gen            write a randomly generated scenario file
//!   run            one planner + one attacker on a scenario -> CSV row
//!   mc             Monte Carlo sweep over a config grid -> CSV file
//!   episode        multi-round tracking episode -> JSON log
//!   verify-bounds  fuzz small instances and certify the guarantees
//!
//! Exit codes: 0 success, 2 usage or config error, 3 an exact oracle hit
//! its enumeration cap, 4 a certified bound was violated.

mod row;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use swarmguard::distributed::AlphaInference;
use swarmguard::objective::CoverageObjective;
use swarmguard::robust::Assignment;
use swarmguard::scenario::{generate_scenario, load_scenario, save_scenario, Geometry, Rect};
use swarmguard::tracking::{
    load_episode_log, run_episode, save_episode_log, Attacker, EpisodeConfig, Planner,
};
use swarmguard::{Error, Result};

use crate::row::{run_one, ResultRow, CSV_HEADER};
use crate::sweep::{run_sweep, SweepConfig};
use crate::verify::{certify, VerifyParams};

/// Stand-in for an unbounded communication range: large enough that every
/// robot pair in any finite scenario is connected, small enough to stay
/// well inside f64 range arithmetic.
const RC_HUGE: f64 = 1e12;

fn parse_planner(s: &str) -> std::result::Result<Planner, String> {
    Planner::from_str(s).map_err(|e| e.to_string())
}

fn parse_attacker(s: &str) -> std::result::Result<Attacker, String> {
    Attacker::from_str(s).map_err(|e| e.to_string())
}

fn parse_comm_range(s: &str) -> std::result::Result<f64, String> {
    let value = if s == "huge" {
        RC_HUGE
    } else {
        s.parse::<f64>().map_err(|e| e.to_string())?
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!(
            "communication range must be positive and finite, got {s}"
        ))
    }
}

#[derive(Parser)]
#[command(
    name = "swarmguard",
    version,
    about = "Attack-robust multi-robot action assignment"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a scenario file (uniform robot and target positions).
    Gen(GenArgs),
    /// Run one planner and one attacker on a scenario; print the CSV row.
    Run(RunArgs),
    /// Monte Carlo sweep over a (seed, N, r_c, alpha, planner) grid.
    Mc(McArgs),
    /// Multi-round tracking episode with Kalman-filtered target estimates.
    Episode(EpisodeArgs),
    /// Fuzz small instances with exact oracles and certify the
    /// post-attack guarantees; exits 4 on any violation.
    VerifyBounds(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// RNG seed; identical arguments write byte-identical files.
    #[arg(long)]
    seed: u64,
    /// Team size N.
    #[arg(long)]
    robots: usize,
    /// Number of targets.
    #[arg(long)]
    targets: usize,
    /// Communication range r_c.
    #[arg(long, value_parser = parse_comm_range)]
    rc: f64,
    /// Attack budget alpha.
    #[arg(long)]
    alpha: usize,
    /// Output path.
    #[arg(long, default_value = "scenario.json")]
    out: PathBuf,
    /// Side of the square deployment area [0, AREA] x [0, AREA].
    #[arg(long, default_value_t = 200.0)]
    area: f64,
    /// Tracking region length l_t.
    #[arg(long, default_value_t = 10.0)]
    lt: f64,
    /// Tracking region width l_o.
    #[arg(long, default_value_t = 3.0)]
    lo: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file written by `gen` (or by hand).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_parser = parse_planner)]
    planner: Planner,
    #[arg(long, value_parser = parse_attacker)]
    attacker: Attacker,
    /// Replace the scenario's communication range for this run; accepts a
    /// number or `huge` for an effectively complete graph.
    #[arg(long, value_parser = parse_comm_range)]
    rc_override: Option<f64>,
    /// Also write the full run report (assignment, attack, inference) here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print the removed actions as comment lines after the row.
    #[arg(long)]
    dump_attack: bool,
}

#[derive(Args)]
struct McArgs {
    /// Sweep config JSON (see --write-default-config for the shape).
    #[arg(long, required_unless_present = "write_default_config")]
    config: Option<PathBuf>,
    /// Output CSV path; overrides the config's `out` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweep cells; defaults to SWARMGUARD_JOBS, then
    /// to one thread per core.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Write a template sweep config to this path and exit.
    #[arg(long)]
    write_default_config: Option<PathBuf>,
}

#[derive(Args)]
struct EpisodeArgs {
    #[arg(long, required_unless_present = "write_default_config")]
    scenario: Option<PathBuf>,
    #[arg(long, value_parser = parse_planner, required_unless_present = "write_default_config")]
    planner: Option<Planner>,
    #[arg(long, value_parser = parse_attacker, default_value = "worst-case")]
    attacker: Attacker,
    #[arg(long, default_value_t = 50)]
    rounds: usize,
    /// Seed for measurement and process noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the episode log (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise/filter config JSON; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the default noise/filter config to this path and exit.
    #[arg(long)]
    write_default_config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    instances: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    max_robots: usize,
    #[arg(long, default_value_t = 3)]
    max_actions: usize,
    #[arg(long, default_value_t = 2)]
    max_alpha: usize,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Capacity(_) => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Mc(args) => cmd_mc(args),
        Cmd::Episode(args) => cmd_episode(args),
        Cmd::VerifyBounds(args) => cmd_verify_bounds(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let scenario = generate_scenario(
        args.seed,
        args.robots,
        args.targets,
        Rect::new(0.0, 0.0, args.area, args.area),
        args.rc,
        args.alpha,
        Geometry::new(args.lt, args.lo)?,
    )?;
    save_scenario(&scenario, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

#[derive(Serialize)]
struct RunReport<'a> {
    row: &'a ResultRow,
    assignment: &'a Assignment,
    removed_actions: Vec<usize>,
    cliques: Option<&'a Vec<Vec<usize>>>,
    inference: Option<&'a AlphaInference>,
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(rc) = args.rc_override {
        scenario.comm_range = rc;
    }
    let (result_row, detail) = run_one(&scenario, args.planner, args.attacker)?;

    println!("{CSV_HEADER}");
    println!("{}", result_row.to_csv());
    if args.dump_attack {
        if detail.removed.is_empty() {
            println!("# attack removed nothing");
        } else {
            let obj = CoverageObjective::from_scenario(&scenario);
            for &action in &detail.removed {
                println!(
                    "# attack removed action {action} (robot {})",
                    obj.owner_of(action)?
                );
            }
        }
    }
    if let Some(path) = &args.json {
        let report = RunReport {
            row: &result_row,
            assignment: &detail.assignment,
            removed_actions: detail.removed.iter().copied().collect(),
            cliques: detail.cliques.as_ref(),
            inference: detail.inference.as_ref(),
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(0)
}

fn cmd_mc(args: McArgs) -> Result<i32> {
    if let Some(path) = &args.write_default_config {
        let mut text = serde_json::to_string_pretty(&SweepConfig::template())?;
        text.push('\n');
        std::fs::write(path, text)?;
        println!("wrote {}", path.display());
        return Ok(0);
    }
    let config_path = args.config.as_ref().expect("clap enforces --config");
    let config: SweepConfig = serde_json::from_str(&std::fs::read_to_string(config_path)?)?;

    let jobs: Option<usize> = match args.jobs {
        Some(j) => Some(j as usize),
        None => match std::env::var("SWARMGUARD_JOBS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&j| j >= 1)
                    .ok_or_else(|| Error::Parse {
                        field: "SWARMGUARD_JOBS".into(),
                        reason: format!("expected a positive integer, got `{v}`"),
                    })?,
            ),
            Err(_) => None,
        },
    };

    let (csv, rows, failed) = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build a {j}-thread pool: {e}")))?
            .install(|| run_sweep(&config)),
        None => run_sweep(&config),
    }?;

    let out = args
        .out
        .as_ref()
        .or(config.out.as_ref())
        .ok_or_else(|| Error::Parse {
            field: "out".into(),
            reason: "no output path: pass --out or set `out` in the config".into(),
        })?;
    std::fs::write(out, csv)?;
    println!("wrote {rows} rows ({failed} failed) to {}", out.display());
    Ok(0)
}

fn cmd_episode(args: EpisodeArgs) -> Result<i32> {
    if let Some(path) = &args.write_default_config {
        let mut text = serde_json::to_string_pretty(&EpisodeConfig::default())?;
        text.push('\n');
        std::fs::write(path, text)?;
        println!("wrote {}", path.display());
        return Ok(0);
    }
    let scenario = load_scenario(args.scenario.as_ref().expect("clap enforces --scenario"))?;
    let planner = args.planner.expect("clap enforces --planner");
    let config: EpisodeConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => EpisodeConfig::default(),
    };

    let log = run_episode(
        &scenario,
        planner,
        args.attacker,
        args.rounds,
        &config,
        args.seed,
    )?;
    let mean_pre: f64 =
        log.records.iter().map(|r| r.coverage_pre).sum::<f64>() / log.records.len() as f64;
    println!(
        "episode: planner={} attacker={} rounds={} seed={} mean_coverage_pre={mean_pre} \
         mean_coverage_post={}",
        planner.name(),
        args.attacker.name(),
        args.rounds,
        args.seed,
        log.mean_coverage_post(),
    );
    if let Some(path) = &args.out {
        save_episode_log(&log, path)?;
        // Paranoia that pays for itself: a log that cannot be read back is
        // useless to every downstream tool.
        load_episode_log(path)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn cmd_verify_bounds(args: VerifyArgs) -> Result<i32> {
    let params = VerifyParams {
        instances: args.instances,
        seed: args.seed,
        max_robots: args.max_robots,
        max_actions: args.max_actions,
        max_alpha: args.max_alpha,
    };
    let violations = certify(&params)?;
    Ok(if violations == 0 { 0 } else { 4 })
}
