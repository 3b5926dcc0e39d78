use std::path::Path;
use std::process::{Command, Output};

fn geolab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("GEOLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn census_of_the_shortest_modular_geodesic() {
    let d = tempfile::tempdir().unwrap();
    let o = geolab(d.path(), &["census", "--group", "modular", "--T", "2.0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("count 1\n"), "{out}");
    assert!(out.contains("ratio "));
    let lines = std::fs::read_to_string(d.path().join("census.jsonl")).unwrap();
    let row: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(row["trace"].as_f64().unwrap().abs(), 3.0);
}

#[test]
fn census_below_the_systole_is_empty() {
    let d = tempfile::tempdir().unwrap();
    let o = geolab(d.path(), &["census", "--T", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("count 0\n"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = geolab(d.path(), &["census", "--T", "6", "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0));
    }
    // the output directory itself is part of the embedded config
    let strip = |d: &Path| {
        std::fs::read_to_string(d.join("census.json")).unwrap().replace(&d.display().to_string(), "OUT")
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    for f in ["census.jsonl", "census.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    geolab(a.path(), &["excursions", "--T", "6", "--threads", "1"]);
    geolab(b.path(), &["excursions", "--T", "6", "--threads", "4"]);
    let (ra, rb) = (read_json(a.path(), "excursions.json"), read_json(b.path(), "excursions.json"));
    assert_eq!(ra["table"], rb["table"]);
    assert_eq!(ra["params"], rb["params"]);
    assert_eq!(ra["config"]["threads"], "1");
}

#[test]
fn reports_embed_config_schema_and_version() {
    let d = tempfile::tempdir().unwrap();
    geolab(d.path(), &["census", "--T", "3", "--seed", "11"]);
    let r = read_json(d.path(), "census.json");
    assert_eq!(r["schema"], "geolab/1");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["seed"], "11");
    assert_eq!(r["config"]["T"], "3");
    assert_eq!(r["config"]["group"], "modular");
    let csv = std::fs::read_to_string(d.path().join("census.csv")).unwrap();
    assert!(csv.starts_with("key,length,trace,primitive,power\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(&cfg, "# shortest geodesics\ngroup = modular\nT = 2\n").unwrap();
    let o = geolab(d.path(), &["census", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).contains("count 1\n"));
    let o = geolab(d.path(), &["census", "--config", cfg.to_str().unwrap(), "--T", "0.5"]);
    assert!(stdout(&o).contains("count 0\n"));
}

#[test]
fn config_errors_exit_with_three() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(geolab(d.path(), &["census", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
    // a key of another command is unknown here
    std::fs::write(&cfg, "betas = 0.2\n").unwrap();
    assert_eq!(geolab(d.path(), &["census", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(geolab(d.path(), &["census", "--bogus"]).status.code(), Some(3));
    assert_eq!(geolab(d.path(), &["census", "--group", "nonsense"]).status.code(), Some(3));
    assert_eq!(geolab(d.path(), &["equidistribute", "--f", "wiggle"]).status.code(), Some(3));
    assert_eq!(geolab(d.path(), &["cover", "--experiment", "other"]).status.code(), Some(3));
}

#[test]
fn budget_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(geolab(d.path(), &["covering-exponents", "--N", "9"]).status.code(), Some(2));
    assert_eq!(geolab(d.path(), &["census", "--T", "8", "--budget", "10"]).status.code(), Some(2));
}

#[test]
fn modular_delta_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = geolab(d.path(), &["delta", "--group", "modular", "--rmin", "7", "--rmax", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(d.path(), "delta.json");
    let delta = r["params"]["delta_hat"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&delta));
    assert!(stdout(&o).ends_with("PASS\n"));
    assert!(d.path().join("delta.svg").exists());
}

#[test]
fn modular_cusp_equidistribution_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = geolab(d.path(), &["equidistribute", "--group", "modular", "--T", "10", "--f", "cusp", "--Y", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(d.path(), "equidistribute.json");
    let rows = r["table"]["rows"].as_array().unwrap();
    let last = rows.last().unwrap().as_array().unwrap();
    let value = last[2].as_f64().unwrap();
    assert!((value - 3.0 / (2.0 * std::f64::consts::PI)).abs() <= 0.12);
    assert!(stdout(&o).contains("PASS slack="));
}

#[test]
fn schottky_cover_delta_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = geolab(d.path(), &["cover", "--group", "schottky:default", "--hom", "a", "--experiment", "delta"]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(d.path(), "cover-delta.json");
    assert!(r["params"]["gap"].as_f64().unwrap() <= 0.05);
    assert_eq!(r["params"]["hom"], "a");
}

#[test]
fn unmet_hypothesis_is_informational() {
    let d = tempfile::tempdir().unwrap();
    let o = geolab(d.path(), &["cover", "--group", "hecke:lambda=30", "--hom", "T%3", "--T", "8", "--experiment", "mass"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("INFO\n"));
    let r = read_json(d.path(), "cover-mass.json");
    assert!(r["notes"][0].as_str().unwrap().starts_with("hypothesis not met"));
}

#[test]
fn help_exits_cleanly() {
    let o = Command::new(env!("CARGO_BIN_EXE_geolab")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for cmd in ["census", "delta", "excursions", "equidistribute", "beta-tails", "entropy-check", "cover", "covering-exponents"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
