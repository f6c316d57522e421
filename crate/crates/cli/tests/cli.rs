//! End-to-end checks of the omsim binary: exit codes, output layout and
//! the documented flag grammar.

use std::path::PathBuf;
use std::process::{Command, Output};

fn omsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omsim"))
        .args(args)
        .output()
        .expect("failed to spawn omsim")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("omsim-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_fig3_config(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("fig3.json");
    std::fs::write(
        &path,
        r#"{
            "m1_kg": 2e-11, "m2_kg": 2e-11, "omega_m_hz": 5.18e7,
            "gamma_hz": 4.1e4, "kappa_hz": 1.5e7,
            "g1_hz_per_m": 1.8e19, "g2_hz_per_m": 6.0e18,
            "g_tunnel_over_omega_m": 0.0,
            "delta1_over_omega_m": -1.0, "delta2_over_omega_m": -1.0,
            "pc_w": 0.03, "pp_w": 1e-6
        }"#,
    )
    .unwrap();
    path
}

#[test]
fn validate_echoes_normalized_params() {
    let dir = tmp_dir("validate");
    let cfg = write_fig3_config(&dir);
    let out = omsim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echo["config"]["pc_w"], 0.03);
    assert_eq!(echo["advisories"]["resolved_sideband"], false);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn validation_failure_exits_one_with_json_error() {
    let out = omsim(&["validate", "--set", "kappa_hz=0"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().unwrap();
    let err: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(err["error"].as_str().unwrap().contains("kappa"));
}

#[test]
fn unknown_flag_is_a_hard_error() {
    let out = omsim(&["validate", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_subcommand() {
    let out = omsim(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["validate", "steady", "multistab", "effmass", "spectrum", "figure"] {
        assert!(text.contains(sub), "missing `{sub}` in --help");
    }
}

#[test]
fn numeric_flags_parse_scientific_notation() {
    let out = omsim(&["validate", "--set", "pc_w=3.0e-2", "--set", "pp_w=1e-6"]);
    assert!(out.status.success());
}

#[test]
fn multistab_sweep_finds_five_root_points() {
    // The documented one-liner: a 500-point power sweep at g = 0.1 Omega_m
    // contains points with five branch rows.
    let out = omsim(&[
        "multistab",
        "--sweep",
        "pc:0:0.05:500",
        "--set",
        "g_tunnel_over_omega_m=0.1",
        "--out",
        "-",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_value,root_index,x1_m,stable,eigen_max_real"
    );
    let mut counts = std::collections::HashMap::<String, usize>::new();
    for line in lines {
        let sweep_value = line.split(',').next().unwrap().to_string();
        *counts.entry(sweep_value).or_default() += 1;
    }
    assert!(
        counts.values().any(|&n| n == 5),
        "no sweep point with 5 roots"
    );
}

#[test]
fn spectrum_stdout_row_count_matches_grid() {
    let out = omsim(&[
        "spectrum",
        "--set",
        "pc_w=1e-3",
        "--set",
        "g1_hz_per_m=6e18",
        "--set",
        "g_tunnel_over_omega_m=0.2",
        "--sweep",
        "omega:0.9:1.1:64",
        "--out",
        "-",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 65); // header + 64 rows
    assert!(text
        .lines()
        .next()
        .unwrap()
        .starts_with("omega_over_omega_m,eps_t_re,eps_t_im,t_b,t_f"));
}

#[test]
fn figure_writes_csv_and_json() {
    let dir = tmp_dir("figure");
    let out = omsim(&["figure", "5b", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("5b/data.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1025); // header + 1024 grid points
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("5b/result.json")).unwrap())
            .unwrap();
    assert_eq!(json["preset"]["figure_id"], "5b");
    assert!(json["provenance"]["omega_c_hz"].as_f64().unwrap() > 0.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn figure_data_is_deterministic() {
    let dir = tmp_dir("deterministic");
    for sub in ["a", "b"] {
        let out = omsim(&["figure", "2a", "--out", dir.join(sub).to_str().unwrap()]);
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.join("a/2a/data.csv")).unwrap();
    let b = std::fs::read(dir.join("b/2a/data.csv")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_figure_exits_one() {
    let out = omsim(&["figure", "7q"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn steady_reports_all_branches() {
    let dir = tmp_dir("steady");
    let cfg = write_fig3_config(&dir);
    // 8 mW sits inside the g = 0 bistable window: three branches.
    let out = omsim(&[
        "steady",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "pc_w=8e-3",
        "--out",
        "-",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["branch_count"], 3);
    let x1 = json["branches"][0]["x1_bar"].as_f64().unwrap();
    assert!(x1 > 0.0 && x1 < 1e-11);
    std::fs::remove_dir_all(&dir).ok();
}
