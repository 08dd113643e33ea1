use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn emfactor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emfactor"))
        .current_dir(dir)
        .env_remove("EMFACTOR_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_dirs(out: &Path, prefix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix) && p.is_dir())
        .collect();
    v.sort();
    v
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

const SMALL_BANDS: &str = r#"
[medium]
preset = "constant"
[bands]
n = [4, 4, 4]
path = { kind = "gamma_x", samples = 3 }
"#;

#[test]
fn bands_cache_hit_and_force() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", SMALL_BANDS);
    let cfg = cfg.to_str().unwrap();
    let first = emfactor(d.path(), &["--config", cfg, "bands"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert!(!stdout(&first).contains("[cached]"));
    let dir = &run_dirs(&d.path().join("out"), "bands-")[0];
    for f in ["bands.csv", "bands.json", "nonconstancy.json", "record.json", "config.json"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let csv = fs::read(dir.join("bands.csv")).unwrap();
    let hash = json(&dir.join("record.json"))["payload_hash"].clone();

    assert!(stdout(&emfactor(d.path(), &["--config", cfg, "bands"])).contains("[cached]"));
    let forced = emfactor(d.path(), &["--config", cfg, "--force", "bands"]);
    assert!(!stdout(&forced).contains("[cached]"));
    assert_eq!(fs::read(dir.join("bands.csv")).unwrap(), csv);
    assert_eq!(json(&dir.join("record.json"))["payload_hash"], hash);
}

#[test]
fn constant_bands_match_free_oracle_in_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", SMALL_BANDS);
    assert_eq!(code(&emfactor(d.path(), &["--config", cfg.to_str().unwrap(), "bands"])), 0);
    let b = json(&run_dirs(&d.path().join("out"), "bands-")[0].join("bands.json"));
    assert!(b["free_oracle_deviation"].as_f64().unwrap() <= 1e-12);
    assert_eq!(b["max_hermitian_defect"].as_f64().unwrap(), 0.0);
}

#[test]
fn check_failure_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", &format!("{SMALL_BANDS}hermitian_tolerance = -1.0\n"));
    assert_eq!(code(&emfactor(d.path(), &["--config", cfg.to_str().unwrap(), "bands"])), 1);
}

#[test]
fn positivity_violation_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "c.toml", "[medium]\npreset = \"periodic-mild\"\namplitude = 5.0\n");
    let o = emfactor(d.path(), &["--config", cfg.to_str().unwrap(), "verify"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly positive"));
    assert!(!d.path().join("out").exists());
}

#[test]
fn invalid_inputs_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let empty = write(p, "empty.toml", "[bands]\npath = { kind = \"points\", points = [] }\n");
    assert_eq!(code(&emfactor(p, &["--config", empty.to_str().unwrap(), "bands"])), 2);
    let capped = write(p, "cap.toml", "memory_cap = 100\n");
    assert_eq!(code(&emfactor(p, &["--config", capped.to_str().unwrap(), "bands"])), 2);
    let unknown = write(p, "unknown.toml", "[grid]\nsize = 3\n");
    assert_eq!(code(&emfactor(p, &["--config", unknown.to_str().unwrap(), "verify"])), 2);
    assert_eq!(code(&emfactor(p, &["--identities", "EQ7,NOPE", "verify"])), 2);
    assert_eq!(code(&emfactor(p, &["--config", "missing.toml", "verify"])), 2);
    assert_eq!(code(&emfactor(p, &["frobnicate"])), 2);
}

#[test]
fn identities_filter_and_json_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"grid": {"n": [16, 16, 16]}, "ensemble": {"count": 2, "bandlimit": 2}, "verify": {"oracle": {"enabled": false}}}"#,
    );
    let o = emfactor(d.path(), &["--config", cfg.to_str().unwrap(), "--identities", "hodge_delta3, D_EQ19", "verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&run_dirs(&d.path().join("out"), "verify-")[0].join("verify.json"));
    let mut ids: Vec<&str> = v["suite"]["reports"].as_array().unwrap().iter().map(|r| r["identity"].as_str().unwrap()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids, ["D_EQ19", "HODGE_DELTA3"]);
}

#[test]
fn output_directory_precedence() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let plain = write(p, "plain.toml", SMALL_BANDS);
    let with_out = write(p, "with_out.toml", &format!("out = \"from-config\"\n{SMALL_BANDS}"));
    let run = |args: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_emfactor"));
        c.current_dir(p).env_remove("EMFACTOR_OUT").args(args);
        if let Some(e) = env {
            c.env("EMFACTOR_OUT", e);
        }
        assert_eq!(code(&c.output().unwrap()), 0);
    };
    run(&["--config", plain.to_str().unwrap(), "bands"], Some("from-env"));
    assert!(p.join("from-env").is_dir());
    run(&["--config", with_out.to_str().unwrap(), "bands"], Some("from-env"));
    assert!(p.join("from-config").is_dir());
    run(&["--config", with_out.to_str().unwrap(), "--out", "from-flag", "bands"], Some("from-env"));
    assert!(p.join("from-flag").is_dir());
}

const SWEEP: &str = r#"
[grid]
n = [8, 8, 8]
[ensemble]
count = 2
bandlimit = 2
[verify]
identities = ["EQ7"]
oracle = { enabled = false }
[bands]
n = [4, 4, 4]
path = { kind = "gamma_x", samples = 3 }
[sweep]
commands = ["bands", "verify"]
entries = [
  { preset = "periodic-mild", amplitude = 0.0 },
  { preset = "periodic-mild", amplitude = 0.1 },
]
"#;

#[test]
fn sweep_caches_and_resumes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let cfg = write(p, "sweep.toml", SWEEP);
    let cfg = cfg.to_str().unwrap();
    let o = emfactor(p, &["--config", cfg, "--jobs", "2", "sweep"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let out = p.join("out");
    let summary_dir = &run_dirs(&out, "sweep-")[0];
    let rows = json(&summary_dir.join("summary.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["cache_hit"] == false && r["exit_code"] == 0));
    let zero = rows.iter().find(|r| r["command"] == "bands" && r["amplitude"] == 0.0).unwrap();
    assert!(zero["summary"]["free_oracle_deviation"].as_f64().unwrap() <= 1e-12);
    let csv = fs::read_to_string(summary_dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    emfactor(p, &["--config", cfg, "sweep"]);
    let rows = json(&summary_dir.join("summary.json"));
    assert!(rows.as_array().unwrap().iter().all(|r| r["cache_hit"] == true));

    // An interrupted sweep leaves some run directories missing.
    let victim = run_dirs(&out, "bands-").remove(0);
    fs::remove_dir_all(&victim).unwrap();
    emfactor(p, &["--config", cfg, "sweep"]);
    let rows = json(&summary_dir.join("summary.json"));
    let misses: Vec<&Value> = rows.as_array().unwrap().iter().filter(|r| r["cache_hit"] == false).collect();
    assert_eq!(misses.len(), 1);
    assert_eq!(misses[0]["dir"].as_str().unwrap(), victim.file_name().unwrap().to_str().unwrap());

    let rep = emfactor(p, &["report"]);
    assert_eq!(code(&rep), 0);
    let report = json(&out.join("report.json"));
    assert_eq!(report.as_array().unwrap().len(), 5);
}

#[test]
fn resolvent_records_off_sheet_point() {
    let d = tempfile::tempdir().unwrap();
    // λ = 1 is a band value of the constant medium at k = 0 (|n| = 1).
    let cfg = write(
        d.path(),
        "r.toml",
        r#"
[medium]
preset = "constant"
[resolvent]
n = [4, 4, 4]
ks = [[0.0, 0.0, 0.0]]
lambdas = [[0.0, 1.0], [1.0, 0.0]]
trials = 2
ray_grid = [32, 32, 32]
ray = { base = [0.3, 0.0, 0.0], taus = [2.0, 4.0, 8.0] }
"#,
    );
    let o = emfactor(d.path(), &["--config", cfg.to_str().unwrap(), "resolvent"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&run_dirs(&d.path().join("out"), "resolvent-")[0].join("resolvent.json"));
    let pts = r["points"].as_array().unwrap();
    assert!(pts[0]["error"].is_null() && pts[0]["max_residual"].as_f64().unwrap() <= 1e-12);
    assert!(pts[1]["error"].is_string());
}

#[test]
fn explicit_profiles_without_preset() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "p.toml",
        r#"
[medium]
eps = { kind = "trig", mean = 1.0, terms = [{ n = [1, 0, 0], amp = 0.1 }] }
mu = { kind = "constant", value = 1.0 }
[bands]
n = [4, 4, 4]
path = { kind = "gamma_x", samples = 2 }
"#,
    );
    let o = emfactor(d.path(), &["--config", cfg.to_str().unwrap(), "bands"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let both = write(d.path(), "both.toml", "[medium]\npreset = \"constant\"\nmu = { kind = \"constant\", value = 1.0 }\n");
    assert_eq!(code(&emfactor(d.path(), &["--config", both.to_str().unwrap(), "bands"])), 2);
}
