use std::path::Path;
use std::process::Command;

use choquard_cli::{dispatch, emit_plot_data, CommandKind, PlotKind, ResultEnvelope, RunConfig};
use serde_json::Value;

fn choquard(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_choquard")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn error_kind(stdout: &str) -> String {
    let v: Value = serde_json::from_str(stdout).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn validation_errors_exit_with_two() {
    for args in [
        vec!["solve", "--n", "3", "--mu", "3"],
        vec!["solve", "--n", "3", "--mu", "0"],
        vec!["solve", "--n", "4", "--mu", "1", "--class", "Gamma", "--grid-size", "16", "--no-cache"],
        vec!["grid", "--n", "3", "--mu", "1", "--parts", "3,3"],
        vec!["grid", "--n", "3", "--mu", "1", "--grid-size", "4"],
        vec!["ledger", "--n", "5", "--mu", "abc"],
    ] {
        let (code, stdout, _) = choquard(&args);
        assert_eq!(code, 2, "{args:?}");
        assert_eq!(error_kind(&stdout), "validation");
    }
}

#[test]
fn io_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let (code, stdout, _) = choquard(&["plot", "--input", missing.to_str().unwrap(), "--kind", "profile"]);
    assert_eq!(code, 4);
    assert_eq!(error_kind(&stdout), "io");
}

#[test]
fn ledger_command_reports_steps() {
    let (code, stdout, _) = choquard(&["ledger", "--n", "5", "--mu", "1"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["payload"]["N"], 2);
    assert_eq!(v["payload"]["case_tag"], "mu_lt_n_minus_2");
    assert!(v["payload"]["checks"].as_object().unwrap().values().all(|b| b == true));
}

#[test]
fn grid_csv_has_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    let (code, stdout, _) =
        choquard(&["grid", "--n", "5", "--mu", "3", "--parts", "3,3", "--grid-size", "24", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,weight");
    assert_eq!(lines.len(), 25);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let vol = v["payload"]["volume"].as_f64().unwrap();
    let area = v["payload"]["sphere_area"].as_f64().unwrap();
    assert!((vol - area).abs() < 1e-10 * area);
}

#[test]
fn atlas_lists_block_groups() {
    let (code, stdout, _) = choquard(&["atlas", "--n", "3", "--max-degree", "6"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let entries = v["payload"]["descriptors"].as_array().unwrap();
    let two_two = entries.iter().find(|e| e["parts"] == serde_json::json!([2, 2])).unwrap();
    assert_eq!(two_two["invariant_dims"], serde_json::json!([1, 0, 1, 0, 1, 0, 1]));
    assert_eq!(two_two["gamma_dims"], serde_json::json!([0, 0, 1, 0, 0, 0, 1]));
}

fn solve_config(dir: &Path, count: usize) -> RunConfig {
    let mut cfg = RunConfig::new(CommandKind::Solve, 3).with_mu("2").with_parts(2, 2);
    cfg.grid_size = 32;
    cfg.count = count;
    cfg.cache_dir = Some(dir.join("cache"));
    cfg.out = Some(dir.join("solve.json"));
    cfg
}

#[test]
fn plot_series_from_saved_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = solve_config(dir.path(), 3);
    let env = dispatch(&cfg).unwrap();
    let saved = ResultEnvelope::read(cfg.out.as_ref().unwrap()).unwrap();
    assert_eq!(saved.payload, env.payload);
    assert_eq!(saved.config, env.config);

    let profile = emit_plot_data(&saved, PlotKind::Profile, 0).unwrap();
    let rows: Vec<&str> = profile.lines().collect();
    assert_eq!(rows[0], "theta,value");
    assert_eq!(rows.len(), 33);
    let c_star = (3.0 / (8.0 * std::f64::consts::PI.powi(2))).powf(1.0 / 6.0);
    for r in &rows[1..] {
        let value: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - c_star).abs() < 1e-10, "{value}");
    }

    let ladder = emit_plot_data(&saved, PlotKind::EnergyLadder, 0).unwrap();
    let energies: Vec<f64> =
        ladder.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(energies.len(), 3);
    assert!(energies.windows(2).all(|w| w[1] > w[0]));
    assert!(emit_plot_data(&saved, PlotKind::Profile, 7).is_err());
    assert!(emit_plot_data(&saved, PlotKind::KernelHeatmap, 0).is_err());

    let (code, stdout, _) = choquard(&[
        "plot",
        "--input",
        cfg.out.as_ref().unwrap().to_str().unwrap(),
        "--kind",
        "energy-ladder",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout, ladder);
}

#[test]
fn kernel_heatmap_has_all_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(CommandKind::Kernel, 3).with_mu("1").with_parts(2, 2);
    cfg.grid_size = 12;
    cfg.no_cache = true;
    let env = dispatch(&cfg).unwrap();
    let csv = emit_plot_data(&env, PlotKind::KernelHeatmap, 0).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "i,j,theta_i,theta_j,k");
    assert_eq!(lines.len(), 12 * 12 + 1);
    let path = dir.path().join("env.json");
    std::fs::write(&path, env.to_json().unwrap()).unwrap();
    let back = ResultEnvelope::read(&path).unwrap();
    assert_eq!(back.payload["hash"], env.payload["hash"]);
}

#[test]
fn corrupted_cache_is_rebuilt_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache_arg = cache.to_str().unwrap();
    let args = ["kernel", "--n", "3", "--mu", "2", "--grid-size", "12", "--cache-dir", cache_arg];
    let (code, first, _) = choquard(&args);
    assert_eq!(code, 0);
    for entry in std::fs::read_dir(&cache).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e != "json") {
            std::fs::write(&path, b"garbage").unwrap();
        }
    }
    let (code, second, stderr) = choquard(&args);
    assert_eq!(code, 0);
    assert!(stderr.contains("rebuilt"), "{stderr}");
    let a: Value = serde_json::from_str(&first).unwrap();
    let b: Value = serde_json::from_str(&second).unwrap();
    assert_eq!(a["payload"]["hash"], b["payload"]["hash"]);
}

#[test]
fn verify_passes_on_a_small_grid() {
    let (code, stdout, _) = choquard(&["verify", "--n", "4", "--mu", "1", "--grid-size", "32", "--no-cache"]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let failed: Vec<&Value> = v["payload"]["checks"].as_array().unwrap().iter().filter(|c| c["passed"] != true).collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(code, 0);
}

#[test]
fn bubble_reports_the_constant_solution() {
    let (code, stdout, _) = choquard(&["bubble", "--n", "3", "--mu", "2"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let c = v["payload"]["constant_solution"].as_f64().unwrap();
    assert!((c - (3.0 / (8.0 * std::f64::consts::PI.powi(2))).powf(1.0 / 6.0)).abs() < 1e-12);
}

#[test]
fn gamma_solve_reports_nearest_g_solution() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = solve_config(dir.path(), 1);
    cfg.class = choquard_core::SymmetryClass::Gamma;
    cfg.out = None;
    let env = dispatch(&cfg).unwrap();
    let sol = &env.payload["solutions"][0];
    assert_eq!(sol["sign_change"], true);
    let nearest = &env.payload["g_class_comparison"]["nearest"][0];
    assert!(nearest["nearest_g_index"].is_u64());
    assert!(nearest["relative_distance"].as_f64().unwrap() >= 0.0);
}
