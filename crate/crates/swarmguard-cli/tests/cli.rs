//! End-to-end tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

use swarmguard::scenario::{save_scenario, Geometry, Point, Scenario, Target};
use swarmguard::tracking::{load_episode_log, Planner};

const HEADER: &str = "algo,seed,n,r_c,alpha,K,max_clique,rounds,msgs_total,\
                      evals_max_clique,parallel_time_s,coverage_pre,coverage_post";

fn swarmguard_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmguard"))
        .args(args)
        .env_remove("SWARMGUARD_JOBS")
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed (status {:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV text: everything after the header that is not a
/// comment line, split on commas.
fn rows_of(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn gen_scenario(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    stdout_of(&swarmguard_cmd(&full));
    path
}

#[test]
fn gen_writes_byte_identical_files_for_identical_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let args = &[
        "--seed",
        "7",
        "--robots",
        "12",
        "--targets",
        "30",
        "--rc",
        "60",
        "--alpha",
        "3",
    ];
    let a = gen_scenario(dir.path(), "a.json", args);
    let b = gen_scenario(dir.path(), "b.json", args);
    let bytes_a = std::fs::read(&a).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
}

#[test]
fn gen_without_robots_is_a_usage_error() {
    let out = swarmguard_cmd(&[
        "gen",
        "--seed",
        "1",
        "--targets",
        "5",
        "--rc",
        "30",
        "--alpha",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--robots"));
}

#[test]
fn gen_rejects_a_footprint_wider_than_long() {
    let out = swarmguard_cmd(&[
        "gen",
        "--seed",
        "1",
        "--robots",
        "4",
        "--targets",
        "5",
        "--rc",
        "30",
        "--alpha",
        "1",
        "--lt",
        "2",
        "--lo",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_prints_the_pinned_header_and_attack_cannot_help() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(
        dir.path(),
        "s.json",
        &[
            "--seed",
            "7",
            "--robots",
            "20",
            "--targets",
            "100",
            "--rc",
            "120",
            "--alpha",
            "6",
        ],
    );
    let text = stdout_of(&swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "drm",
        "--attacker",
        "greedy",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    let row = rows_of(&text).remove(0);
    assert_eq!(row[0], "drm");
    assert_eq!(row[1], "7");
    assert_eq!(row[2], "20");
    assert_eq!(row[7], "4", "synchronous protocol round count");
    let pre: f64 = row[11].parse().unwrap();
    let post: f64 = row[12].parse().unwrap();
    assert!(
        pre >= post,
        "removals cannot increase coverage: {pre} < {post}"
    );
}

#[test]
fn an_unbounded_range_override_reduces_drm_to_central_robust() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(
        dir.path(),
        "s.json",
        &[
            "--seed",
            "11",
            "--robots",
            "15",
            "--targets",
            "80",
            "--rc",
            "40",
            "--alpha",
            "4",
        ],
    );
    let drm = rows_of(&stdout_of(&swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "drm",
        "--attacker",
        "worst-case",
        "--rc-override",
        "huge",
    ])))
    .remove(0);
    let central = rows_of(&stdout_of(&swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "central-robust",
        "--attacker",
        "worst-case",
    ])))
    .remove(0);
    assert_eq!(drm[5], "1", "one clique under an unbounded range");
    assert_eq!(drm[6], "15");
    assert_eq!(drm[11], central[11], "coverage_pre");
    assert_eq!(drm[12], central[12], "coverage_post");
}

/// Two triangles 200 apart with a 10-unit range: the clique partition has
/// no external edges, where the 3-hop inference cannot demote anything.
fn clique_disjoint_scenario(path: &Path) {
    let robots = [
        Point::new(0.0, 0.0),
        Point::new(4.0, 0.0),
        Point::new(0.0, 4.0),
        Point::new(200.0, 0.0),
        Point::new(204.0, 0.0),
        Point::new(200.0, 4.0),
    ];
    let targets: Vec<Target> = [
        (3.0, 1.0),
        (7.0, 0.5),
        (1.0, 8.0),
        (203.0, 1.0),
        (207.0, 0.5),
        (201.0, 8.0),
        (100.0, 100.0),
    ]
    .iter()
    .enumerate()
    .map(|(id, &(x, y))| Target {
        id,
        position: Point::new(x, y),
        velocity: Point::new(0.0, 0.0),
    })
    .collect();
    let scenario = Scenario::assemble(
        0,
        10.0,
        2,
        Geometry::new(8.0, 3.0).unwrap(),
        &robots,
        targets,
    )
    .unwrap();
    save_scenario(&scenario, path).unwrap();
}

#[test]
fn idrm_matches_drm_when_cliques_have_no_external_edges() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("disjoint.json");
    clique_disjoint_scenario(&path);
    let scenario = path.to_string_lossy().into_owned();
    let drm = rows_of(&stdout_of(&swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "drm",
        "--attacker",
        "worst-case",
    ])))
    .remove(0);
    let idrm = rows_of(&stdout_of(&swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "idrm",
        "--attacker",
        "worst-case",
    ])))
    .remove(0);
    for col in [1, 2, 3, 4, 5, 6, 11, 12] {
        assert_eq!(drm[col], idrm[col], "column {col} diverged");
    }
}

#[test]
fn run_json_report_lists_the_removed_actions() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(
        dir.path(),
        "s.json",
        &[
            "--seed",
            "7",
            "--robots",
            "20",
            "--targets",
            "100",
            "--rc",
            "120",
            "--alpha",
            "6",
        ],
    );
    let report_path = dir.path().join("report.json");
    let text = stdout_of(&swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "idrm",
        "--attacker",
        "greedy",
        "--dump-attack",
        "--json",
        &report_path.to_string_lossy(),
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["row"]["algo"], "idrm");
    let removed = report["removed_actions"].as_array().unwrap();
    assert!(removed.len() <= 6);
    for action in removed {
        let line = format!("# attack removed action {}", action);
        assert!(
            text.lines().any(|l| l.starts_with(&line)),
            "missing `{line}`"
        );
    }
    assert!(report["inference"]["alpha_per_clique"].is_array());
}

fn write_sweep_config(path: &Path, planners: &str, out: &Path) {
    let text = format!(
        r#"{{
  "seeds": [1, 2, 3],
  "n_robots": [8],
  "r_c": [60.0],
  "alpha": {{ "fixed": [2] }},
  "planners": {planners},
  "attacker": "greedy",
  "n_targets": 40,
  "out": "{}"
}}"#,
        out.display()
    );
    std::fs::write(path, text).unwrap();
}

#[test]
fn mc_rows_are_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    write_sweep_config(&config, r#"["central-greedy", "drm"]"#, &out_a);

    stdout_of(&swarmguard_cmd(&[
        "mc",
        "--config",
        &config.to_string_lossy(),
        "--jobs",
        "4",
    ]));
    stdout_of(&swarmguard_cmd(&[
        "mc",
        "--config",
        &config.to_string_lossy(),
        "--jobs",
        "1",
        "--out",
        &out_b.to_string_lossy(),
    ]));

    // Wall-clock timing is the one column allowed to differ between runs.
    let strip_time = |path: &Path| -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                if l.starts_with('#') || l.starts_with("algo") {
                    l.to_string()
                } else {
                    let mut cells: Vec<&str> = l.split(',').collect();
                    cells[10] = "-";
                    cells.join(",")
                }
            })
            .collect()
    };
    assert_eq!(strip_time(&out_a), strip_time(&out_b));
}

#[test]
fn mc_summary_means_match_a_recomputation_from_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    let out = dir.path().join("results.csv");
    write_sweep_config(&config, r#"["central-greedy", "drm", "idrm"]"#, &out);
    stdout_of(&swarmguard_cmd(&[
        "mc",
        "--config",
        &config.to_string_lossy(),
    ]));

    let text = std::fs::read_to_string(&out).unwrap();
    let rows = rows_of(&text);
    assert_eq!(rows.len(), 9, "3 seeds x 3 planners");

    let summaries: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("# summary:"))
        .collect();
    assert_eq!(summaries.len(), 3, "one summary line per planner");
    for line in summaries {
        let field = |key: &str| -> String {
            line.split_whitespace()
                .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
                .unwrap_or_else(|| panic!("`{key}` missing from `{line}`"))
                .to_string()
        };
        let algo = field("algo");
        let group: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == algo).collect();
        assert_eq!(group.len(), field("runs").parse::<usize>().unwrap());
        let mean = |col: usize| -> f64 {
            group
                .iter()
                .map(|r| r[col].parse::<f64>().unwrap())
                .sum::<f64>()
                / group.len() as f64
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        assert!(
            close(mean(11), field("mean_coverage_pre").parse().unwrap()),
            "{line}"
        );
        assert!(
            close(mean(12), field("mean_coverage_post").parse().unwrap()),
            "{line}"
        );
    }
}

#[test]
fn mc_rejects_an_empty_planner_list() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    let out = dir.path().join("results.csv");
    write_sweep_config(&config, "[]", &out);
    let result = swarmguard_cmd(&["mc", "--config", &config.to_string_lossy()]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("planner"));
}

#[test]
fn mc_template_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("template.json");
    stdout_of(&swarmguard_cmd(&[
        "mc",
        "--write-default-config",
        &config.to_string_lossy(),
    ]));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();
    assert_eq!(parsed["attacker"], "greedy");
    assert!(parsed["seeds"].as_array().unwrap().len() >= 30);
}

#[test]
fn worst_case_attacks_beyond_the_enumeration_cap_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(
        dir.path(),
        "big.json",
        &[
            "--seed",
            "1",
            "--robots",
            "40",
            "--targets",
            "50",
            "--rc",
            "60",
            "--alpha",
            "20",
        ],
    );
    let out = swarmguard_cmd(&[
        "run",
        "--scenario",
        &scenario,
        "--planner",
        "central-greedy",
        "--attacker",
        "worst-case",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn verify_bounds_passes_on_a_clean_corpus() {
    let out = swarmguard_cmd(&["verify-bounds", "--instances", "40", "--seed", "5"]);
    let text = stdout_of(&out);
    assert!(text.contains("checked 40 instances: 0 bound violations"));
    assert_eq!(
        text.lines().filter(|l| l.starts_with("instance ")).count(),
        40
    );
}

#[test]
fn episode_logs_are_reproducible_and_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = gen_scenario(
        dir.path(),
        "s.json",
        &[
            "--seed",
            "3",
            "--robots",
            "10",
            "--targets",
            "50",
            "--rc",
            "60",
            "--alpha",
            "4",
            "--area",
            "60",
            "--lt",
            "6",
        ],
    );
    let ep_config = dir.path().join("episode.json");
    stdout_of(&swarmguard_cmd(&[
        "episode",
        "--write-default-config",
        &ep_config.to_string_lossy(),
    ]));

    let log_a = dir.path().join("a.json");
    let log_b = dir.path().join("b.json");
    for log in [&log_a, &log_b] {
        let text = stdout_of(&swarmguard_cmd(&[
            "episode",
            "--scenario",
            &scenario,
            "--planner",
            "drm",
            "--attacker",
            "greedy",
            "--rounds",
            "12",
            "--seed",
            "9",
            "--config",
            &ep_config.to_string_lossy(),
            "--out",
            &log.to_string_lossy(),
        ]));
        assert!(text.contains("rounds=12"));
    }
    let bytes = std::fs::read(&log_a).unwrap();
    assert_eq!(bytes, std::fs::read(&log_b).unwrap());

    let log = load_episode_log(&log_a).unwrap();
    assert_eq!(log.records.len(), 12);
    assert_eq!(log.planner, Planner::Drm);
}
