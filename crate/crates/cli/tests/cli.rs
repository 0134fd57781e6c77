use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn perimeter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perimeter"))
        .args(args)
        .output()
        .unwrap()
}

/// Small grid and a short horizon so every command finishes quickly.
fn small_config(dir: &Path, extra: &str) -> String {
    let text = format!(
        r#"
seed = 5
horizon_s = 1800
out_dir = "{out}"
grid = {{ rows = 4, cols = 4, segments_per_block = 2, link_length_m = 150.0 }}
region = {{ row_min = 1, row_max = 2, col_min = 1, col_max = 2 }}
demand = {{ name = "D1", peak_veh_h = 40.0 }}
controller = {{ kind = "smc", lambda_per_h = 15.0, eta = 200.0 }}
gating = {{ kbar_veh_per_km = 20.0, u_min_veh_h = 480.0, u_max_veh_h = 12960.0, activation_ratio = 0.85, hold_down_cycles = 5 }}

[sweep]
lambdas_per_h = [15.0]
etas = [20.0, 200.0]
alphas = [25.0]
betas = [25.0]
bounds_base = {{ lambda_per_h = 15.0, eta = 200.0 }}
{extra}
"#,
        out = dir.join("out").display()
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_config_is_printed() {
    let o = perimeter(&["default-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("horizon_s = 10560"));
    assert!(text.contains("[sweep]"));
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = perimeter(&["run", "-c", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in [
        "nfd.csv",
        "density.csv",
        "controller.csv",
        "flows.csv",
        "summary.toml",
    ] {
        let x = fs::read(a.join(f)).unwrap();
        assert!(!x.is_empty(), "{f}");
        assert_eq!(
            x,
            fs::read(b.join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
    let header = fs::read_to_string(a.join("density.csv")).unwrap();
    assert!(header.starts_with("cycle,time_s,density_veh_km,kbar_veh_per_km"));
}

#[test]
fn seed_flag_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(
        perimeter(&["run", "-c", &cfg, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(perimeter(&[
        "run",
        "-c",
        &cfg,
        "--seed",
        "6",
        "--out",
        b.to_str().unwrap()
    ])
    .status
    .success());
    assert_ne!(
        fs::read(a.join("flows.csv")).unwrap(),
        fs::read(b.join("flows.csv")).unwrap()
    );
    let summary = fs::read_to_string(b.join("summary.toml")).unwrap();
    assert!(summary.contains("seed = 6"));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = perimeter(&["run", "-c", &cfg, "--dry-run", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("seed = 9"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_2_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("seed = 5", "seed = 5\nspeed_limit = 3");
    fs::write(&cfg, text).unwrap();
    let o = perimeter(&["run", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("speed_limit"));

    let cfg = small_config(dir.path(), "");
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("eta = 200.0 }", "eta = -1.0 }");
    fs::write(&cfg, text).unwrap();
    assert_eq!(perimeter(&["run", "-c", &cfg]).status.code(), Some(2));

    assert_eq!(
        perimeter(&["run", "-c", "/no/such/file.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn setpoint_from_existing_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let run_dir = dir.path().join("run");
    assert!(
        perimeter(&["run", "-c", &cfg, "--out", run_dir.to_str().unwrap()])
            .status
            .success()
    );
    let sp_dir = dir.path().join("sp");
    let o = perimeter(&[
        "setpoint",
        "-c",
        &cfg,
        "--nfd",
        run_dir.join("nfd.csv").to_str().unwrap(),
        "--out",
        sp_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sp = fs::read_to_string(sp_dir.join("setpoint.toml")).unwrap();
    assert!(sp.contains("kbar_veh_per_km"));

    // a run pointed at the set point file picks it up
    let with_sp = fs::read_to_string(&cfg).unwrap().replace(
        "seed = 5",
        &format!(
            "seed = 5\nsetpoint_file = {:?}",
            sp_dir.join("setpoint.toml").to_str().unwrap()
        ),
    );
    fs::write(&cfg, with_sp).unwrap();
    assert!(perimeter(&["run", "-c", &cfg, "--dry-run"])
        .status
        .success());
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = perimeter(&["sweep", "-c", &cfg, "--seeds", "1,2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("out/table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    // header, baseline, 2 grid rows, one alpha and one beta row; no PIC
    // row since the file's sweep section names none
    assert_eq!(lines.len(), 1 + 1 + 2 + 1 + 1, "{table}");
    assert!(lines[1].starts_with("Base Case (NPC)"));
    let alpha = lines[4].split_once(',').unwrap().1;
    let beta = lines[5].split_once(',').unwrap().1;
    let strip = |s: &str| s.split(',').skip(7).collect::<Vec<_>>().join(",");
    assert_eq!(strip(alpha), strip(beta));
}

#[test]
fn calibration_reports_band() {
    let dir = tempfile::tempdir().unwrap();
    let easy = small_config(
        dir.path(),
        "[calibration]\nlow_ratio = 0.0\nhigh_ratio = 100.0\npeak_min_veh_h = 1.0\npeak_max_veh_h = 60.0\nmax_iterations = 4",
    );
    let o = perimeter(&["calibrate-demand", "-c", &easy]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = fs::read_to_string(dir.path().join("out/calibration.toml")).unwrap();
    assert!(out.contains("within_band = true"));

    let impossible = small_config(
        dir.path(),
        "[calibration]\nlow_ratio = 50.0\nhigh_ratio = 60.0\npeak_min_veh_h = 1.0\npeak_max_veh_h = 60.0\nmax_iterations = 2",
    );
    let o = perimeter(&["calibrate-demand", "-c", &impossible]);
    assert_eq!(o.status.code(), Some(3));
}
