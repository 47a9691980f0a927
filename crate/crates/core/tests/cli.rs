use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use finite_sysid::cli::{self, Command, Config};
use finite_sysid::Error;
use serde_json::Value;

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_sysid"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_writes_one_row_per_state() {
    let out = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["simulate", "--config"])
        .arg(configs().join("simulate.toml"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(out.path().join("trajectories.csv")).unwrap();
    // 10 experiments of horizon 6 store x_0..x_6
    assert_eq!(csv.lines().count(), 1 + 10 * 7);
    let env = read_json(&out.path().join("trajectories.json"));
    assert_eq!(env["records"].as_array().unwrap().len(), 10);
}

#[test]
fn seed_flag_overrides_config() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate.toml");
    let run = |seed: &str, dir: &str| {
        let d = out.path().join(dir);
        let o = bin()
            .args(["simulate", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&d)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(d.join("trajectories.csv")).unwrap()
    };
    let base = run("1", "a");
    assert_eq!(base, run("1", "b"));
    assert_ne!(base, run("2", "c"));
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "noseed.toml",
        "schema = 1\n[system]\npreset = \"double_integrator\"\n[simulate]\nmode = \"batch\"\nexperiments = 2\nhorizon = 3\n",
    );
    let err = cli::run(Command::Simulate, &cfg, Some(dir.path()), None).unwrap_err();
    assert!(matches!(&err, Error::Config { field, .. } if field == "seed"));

    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    // an explicit --seed is enough
    cli::run(Command::Simulate, &cfg, Some(dir.path()), Some(3)).unwrap();
}

#[test]
fn output_dir_falls_back_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config");
    let text = format!(
        "schema = 1\nseed = 1\noutput_dir = {:?}\n[system]\npreset = \"double_integrator\"\n[simulate]\nmode = \"batch\"\nexperiments = 1\nhorizon = 2\n",
        target.display().to_string()
    );
    let cfg = write_config(dir.path(), "c.toml", &text);
    cli::run(Command::Simulate, &cfg, None, None).unwrap();
    assert!(target.join("trajectories.csv").exists());

    let cfg = write_config(dir.path(), "d.toml", &text.replace("output_dir", "# output_dir"));
    let err = cli::run(Command::Simulate, &cfg, None, None).unwrap_err();
    assert!(matches!(&err, Error::Config { field, .. } if field == "output_dir"));
}

#[test]
fn unknown_keys_and_wrong_schema_are_rejected() {
    let base = "schema = 1\nseed = 1\n[system]\npreset = \"double_integrator\"\n";
    assert!(Config::parse(&format!("{base}[simulate]\nmode = \"batch\"\nhorizon = 2\ntypo = 1\n")).is_err());
    assert!(Config::parse(&base.replace("schema = 1", "schema = 2")).is_err());
}

const COVERAGE_2X100: &str = r#"
schema = 1
seed = 3
[system]
preset = "double_integrator"
[[coverage.scenarios]]
id = "m"
experiment = { kind = "matrix_theorem", horizon = 6 }
grid = [300, 600]
replicates = 100
"#;

#[test]
fn coverage_detail_has_one_row_per_replicate_and_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cov.toml", COVERAGE_2X100);
    let files = cli::run(Command::Coverage, &cfg, Some(dir.path()), None).unwrap();
    for target in ["matrix_a", "matrix_b"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("m_{target}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("grid_value,replicate,error,bound,covered"));
        assert_eq!(lines.count(), 200);
    }
    assert!(files.iter().any(|f| f.ends_with("m_summary.json")));
    let summary = read_json(&dir.path().join("m_summary.json"));
    assert!(summary.to_string().contains("\"coverage\""));
}

#[test]
fn coverage_empty_grid_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cov.toml", &COVERAGE_2X100.replace("[300, 600]", "[]"));
    let err = cli::run(Command::Coverage, &cfg, Some(dir.path()), None).unwrap_err();
    assert!(matches!(&err, Error::Config { field, .. } if field.ends_with("grid")));
}

#[test]
fn certify_csv_round_trip_reproduces_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    cli::run(Command::Certify, &configs().join("certify_batch.toml"), Some(&first), None).unwrap();
    let csv = first.join("trajectories.csv");
    let text = format!(
        "schema = 1\nseed = 99\n[system]\npreset = \"double_integrator\"\n[certify]\ndata = \"batch\"\nexperiments = 1000\nhorizon = 6\ndata_csv = {:?}\nbounds = [\"theory\", \"ellipsoid\"]\n",
        csv.display().to_string()
    );
    let cfg = write_config(dir.path(), "again.toml", &text);
    let second = dir.path().join("second");
    cli::run(Command::Certify, &cfg, Some(&second), None).unwrap();
    let (a, b) = (read_json(&first.join("certify.json")), read_json(&second.join("certify.json")));
    assert_eq!(a["estimate"], b["estimate"]);
    assert_eq!(a["ellipsoid"], b["ellipsoid"]);
    assert_eq!(
        std::fs::read(&csv).unwrap(),
        std::fs::read(second.join("trajectories.csv")).unwrap()
    );
}

#[test]
fn certify_batch_bundle_contents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::load(&configs().join("certify_batch.toml")).unwrap();
    let (bundle, files) = cli::cmd_certify(&cfg, dir.path(), 7).unwrap();
    assert!(bundle.flags.is_empty());
    let theory = bundle.theory.as_ref().unwrap();
    assert!(theory.matrix_a.is_some() && theory.matrix_b.is_some());
    assert!(bundle.ellipsoid.is_some());
    let boot = bundle.bootstrap.as_ref().unwrap();
    assert_eq!(boot.trials, 200);
    assert_eq!(boot.samples_a.len(), 200);
    let csv = std::fs::read_to_string(dir.path().join("bootstrap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
    assert!(files.iter().any(|f| f.ends_with("certify.json")));
}

#[test]
fn certify_without_inputs_flags_b_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let text = "schema = 1\nseed = 5\n[system]\na = [[1.0, 0.1], [0.0, 1.0]]\nb = [[0.0], [0.1]]\nsigma_w = 0.1\nsigma_u = 0.0\n[certify]\ndata = \"batch\"\nexperiments = 500\nhorizon = 6\nbounds = [\"theory\"]\n";
    let cfg = write_config(dir.path(), "nou.toml", text);
    let o = bin()
        .args(["certify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bundle = read_json(&dir.path().join("certify.json"));
    assert_eq!(bundle["data"]["inputs_used"], Value::Bool(false));
    let flags = bundle["flags"].as_array().unwrap();
    assert!(flags.iter().any(|f| f["error"] == "ZeroSigmaU"), "{flags:?}");
}

#[test]
fn certify_single_reports_ordering_margin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config::load(&configs().join("certify_single.toml")).unwrap();
    let (bundle, _) = cli::cmd_certify(&cfg, dir.path(), 11).unwrap();
    let st = bundle.single_trajectory.expect("certificate issued");
    assert!(st.ordering_margin >= 0.0);
    assert!(st.bound.value.is_finite() && st.bound.value > 0.0);
    assert_eq!(bundle.bootstrap.unwrap().trials, 200);
}

#[test]
fn coverage_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_config(dir.path(), "one.toml", &format!("threads = 1\n{COVERAGE_2X100}"));
    let four = write_config(dir.path(), "four.toml", &format!("threads = 4\n{COVERAGE_2X100}"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cli::run(Command::Coverage, &one, Some(&a), None).unwrap();
    cli::run(Command::Coverage, &four, Some(&b), None).unwrap();
    for name in ["m_matrix_a.csv", "m_matrix_b.csv", "m_summary.csv", "m_summary.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}
