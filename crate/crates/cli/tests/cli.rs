use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_vigilance-games");

fn reference(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference").join(name)
}

fn vg(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).env_remove("VG_OUT_DIR").output().unwrap()
}

fn run_ok(cmd: &str, config: &Path, out: &Path) {
    let o = vg(&[cmd, "--config", config.to_str().unwrap()], out);
    assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn scenario(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn nash_reports_existence() {
    let out = TempDir::new().unwrap();
    run_ok("nash", &reference("nash_low_rho.toml"), out.path());
    let v = json(out.path().join("nash.json"));
    assert_eq!(v["exists"], true);
    assert!((v["g"].as_f64().unwrap() - 0.1754).abs() < 1e-3);
    for key in ["a", "gap_lo", "gap_hi", "residuals"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn best_response_curves_cross_only_at_low_rho() {
    let low = TempDir::new().unwrap();
    run_ok("best-response", &reference("best_response_low_rho.toml"), low.path());
    let v = json(low.path().join("best_response.json"));
    assert_eq!(v["intersects"], true);
    assert_eq!(v["nash"]["exists"], true);
    let csv = fs::read_to_string(low.path().join("beta_g.csv")).unwrap();
    assert!(csv.starts_with("input,response,branch\n"));
    assert_eq!(csv.lines().count(), 1002);
    let inverse = fs::read_to_string(low.path().join("beta_a_inverse.csv")).unwrap();
    assert!(inverse.starts_with("input,response,branch\n"));

    let high = TempDir::new().unwrap();
    run_ok("best-response", &reference("best_response_high_rho.toml"), high.path());
    let v = json(high.path().join("best_response.json"));
    assert_eq!(v["intersects"], false);
    assert!((v["a_plus"].as_f64().unwrap() - 0.3689).abs() < 1e-3);
}

#[test]
fn play_verdicts() {
    let out = TempDir::new().unwrap();
    run_ok("play", &reference("play_oscillating.toml"), out.path());
    assert_eq!(json(out.path().join("verdict.json"))["verdict"], "oscillating");
    let header = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,g_1,a_1,theta_1,phi_1\n"));

    let out = TempDir::new().unwrap();
    run_ok("play", &reference("play_two_greedy.toml"), out.path());
    let v = json(out.path().join("verdict.json"));
    assert_eq!(v["verdict"], "converged");
    let g = &v["point"]["greedy"];
    assert_eq!(g[0], g[1]);
}

#[test]
fn flow_lists_the_attracting_point() {
    let out = TempDir::new().unwrap();
    run_ok("flow", &reference("flow_portrait.toml"), out.path());
    let v = json(out.path().join("fixed_points.json"));
    let hit = v
        .as_array()
        .unwrap()
        .iter()
        .find(|f| (f["g"].as_f64().unwrap() - 0.203).abs() < 0.01 && (f["a"].as_f64().unwrap() - 0.297).abs() < 0.01)
        .expect("attracting point listed");
    assert_eq!(hit["stable"], true);
    assert_eq!(hit["is_nash"], false);
    let field = fs::read_to_string(out.path().join("phase_portrait.csv")).unwrap();
    assert!(field.starts_with("g,a,dg,da\n"));
    assert_eq!(field.lines().count(), 1 + 21 * 21);
    assert!(fs::read_to_string(out.path().join("streamlines.csv")).unwrap().starts_with("id,step,t,g,a\n"));
}

#[test]
fn channel_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "[game]\nn = 10\nlambda = [10.0]\nrho = [0.01]\n[channel]\nslots = 20000\ng = [0.3]\na = [0.4]\n");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let args = ["channel", "--config", cfg.to_str().unwrap(), "--seed", "5"];
    assert!(vg(&args, &a).status.success());
    assert!(vg(&args, &b).status.success());
    let other = ["channel", "--config", cfg.to_str().unwrap(), "--seed", "6"];
    assert!(vg(&other, &c).status.success());
    let read = |d: &Path| fs::read(d.join("channel_summary.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(json(a.join("channel.json"))["seed"], 5);
}

#[test]
fn sampled_play_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "[game]\nn = 10\nlambda = [10.0]\nrho = [0.001]\n[play]\nt_max = 200\nobservation = \"sampled\"\nobservation_slots = 2000\n",
    );
    let args = ["play", "--config", cfg.to_str().unwrap(), "--seed", "11"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(vg(&args, &a).status.success());
    assert!(vg(&args, &b).status.success());
    for f in ["trajectory.csv", "verdict.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn output_directory_precedence() {
    let dir = TempDir::new().unwrap();
    let from_file = dir.path().join("from_file");
    let cfg = scenario(
        &dir,
        &format!("[game]\nn = 10\nlambda = [10.0]\nrho = [0.001]\n[output]\ndir = {:?}\n", from_file.to_str().unwrap()),
    );
    let from_env = dir.path().join("from_env");
    let o = Command::new(BIN)
        .args(["nash", "--config", cfg.to_str().unwrap()])
        .env("VG_OUT_DIR", &from_env)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(from_env.join("nash.json").exists() && !from_file.exists());

    let from_flag = dir.path().join("from_flag");
    let o = Command::new(BIN)
        .args(["nash", "--config", cfg.to_str().unwrap(), "--out", from_flag.to_str().unwrap()])
        .env("VG_OUT_DIR", &from_env)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(from_flag.join("nash.json").exists());

    let o = Command::new(BIN).args(["nash", "--config", cfg.to_str().unwrap()]).env_remove("VG_OUT_DIR").output().unwrap();
    assert!(o.status.success());
    assert!(from_file.join("nash.json").exists());
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    for (text, field) in [
        ("[game]\nn = 10\nlambda = [10.0]\nrho = [0.01]\nlamda = 1\n", "lamda"),
        ("[game]\nn = 10\nlambda = [10.0]\n", "rho"),
        ("[game]\nn = 10\nlambda = [10.0]\nrho = [0.01]\n[play]\nepsilon_a = 0.0\n", "epsilon_a"),
        ("[game]\nn = 10\nlambda = [10.0]\nrho = [0.01]\n[flow]\ndt = -1.0\n", "flow.dt"),
    ] {
        let cfg = scenario(&dir, text);
        let cmd = if field.starts_with("flow") { "flow" } else { "play" };
        let o = vg(&[cmd, "--config", cfg.to_str().unwrap()], &out);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{field} missing from {err}");
    }

    let cfg = scenario(&dir, "mode = \"flow\"\n[game]\nn = 10\nlambda = [10.0]\nrho = [0.01]\n");
    let o = vg(&["nash", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));

    let multi = scenario(&dir, "[game]\nn = 10\nlambda = [10.0, 10.0]\nrho = [0.01]\n");
    let o = vg(&["nash", "--config", multi.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));

    let o = vg(&["nash", "--config", dir.path().join("missing.toml").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_three() {
    // Silent vigilantes cannot invert their throughput into an estimate.
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "[game]\nn = 10\nlambda = [10.0]\nrho = [0.01]\n[play]\ninit_g = [0.5]\ninit_a = [0.0]\n");
    let o = vg(&["play", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn every_reference_scenario_parses() {
    for entry in fs::read_dir(reference("")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let parsed = vigilance_cli::Scenario::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        parsed.game_config().unwrap();
        assert!(parsed.mode.is_some(), "{} declares no mode", path.display());
    }
}
