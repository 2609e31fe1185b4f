use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semistab"))
}

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn run(verb: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(verb).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn strip_timestamps(mut v: Value) -> Value {
    let obj = v.as_object_mut().unwrap();
    obj.remove("started_at");
    obj.remove("finished_at");
    v
}

#[test]
fn single_point_resolvent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"diagonal","n":1,"a":1.0},"analyses":["resolvent"],"params":{"s_grid":[1.0]}}"#,
    );
    let out = dir.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("resolvent_n1.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["s", "norm"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let s: f64 = rows[0][0].parse().unwrap();
    let norm: f64 = rows[0][1].parse().unwrap();
    assert_eq!(s, 1.0);
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn missing_tau_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"damped_wave","n":6,"damping":{"kind":"constant","value":1.0}},
            "analyses":["observability"],"params":{"betas":[1.0]}}"#,
    );
    let out = dir.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.tau"));
    assert!(!out.exists(), "no computation before validation");

    let o = bin().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_accepts_good_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"diagonal","n":4,"a":1.0},"analyses":["decay"],"params":{"decay_window":[1,10]}}"#,
    );
    let o = bin().arg("validate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn numerical_failure_exit_code() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("a.mtx"),
        "%%MatrixMarket matrix array real general\n1 1\n0.5\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"model":{{"kind":"matrix_file","a":"{}"}},"analyses":["datko"],"params":{{"p":2,"betas":[0.5]}}}}"#,
            dir.path().join("a.mtx").display()
        ),
    );
    let out = dir.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["runs"][0]["analyses"][0]["status"], "error");
}

#[test]
fn datko_sweep_ratio_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"diagonal","n":10,"a":1.0},"analyses":["datko"],
            "params":{"p":2,"betas":[0.6,0.4],"random_probes":4},"sweep":{"dims":[50,100]}}"#,
    );
    let out = dir.path().join("out");
    let o = run("sweep", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let runs = r["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0]["n"], 50);
    assert_eq!(runs[1]["n"], 100);
    assert_eq!(runs[0]["analyses"][0]["result"].as_array().unwrap().len(), 2);

    let tables = r["ratio_tables"].as_array().unwrap();
    assert_eq!(tables.len(), 2);
    let above = tables.iter().find(|t| t["beta"] == 0.6).unwrap();
    let ratio = above["table"]["ratios"][0].as_f64().unwrap();
    assert!((0.8..=1.25).contains(&ratio), "{ratio}");
    assert_eq!(above["matches_prediction"], true);
    let below = tables.iter().find(|t| t["beta"] == 0.4).unwrap();
    let ratio = below["table"]["ratios"][0].as_f64().unwrap();
    assert!((ratio / 2f64.powf(0.2) - 1.0).abs() <= 0.2, "{ratio}");
    assert_eq!(below["matches_prediction"], true);

    let mut rdr = csv::Reader::from_path(out.join("datko_b0.6_n50.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["id", "value", "error", "tail"]);
    assert_eq!(rdr.records().count(), 54);
}

#[test]
fn single_dimension_sweep_has_no_ratios() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"diagonal","n":10,"a":1.0},"analyses":["sweep","lyapunov"],
            "params":{"betas":[0.5]},"sweep":{"dims":[8]}}"#,
    );
    let out = dir.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["runs"].as_array().unwrap().len(), 1);
    assert!(r["ratio_tables"].as_array().unwrap().is_empty());
    assert!(out.join("lyapunov_P_n8.mtx").exists());
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"diagonal","n":12,"a":1.5},
            "analyses":["decay","resolvent","datko","weak-datko","lyapunov"],
            "params":{"p":2,"betas":[0.5],"decay_window":[1,50],"s_range":[2,20],"seed":"BEEF"}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run("run", &cfg, &a, &["--threads", "1"]).status.code(), Some(0));
    let o = bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .env("SEMISTAB_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let ra = report(&a);
    assert_eq!(ra["seed"], "0xBEEF");
    assert!(ra["runs"][0]["correspondence"].is_object());
    let ta = serde_json::to_string(&strip_timestamps(ra)).unwrap();
    let tb = serde_json::to_string(&strip_timestamps(report(&b))).unwrap();
    assert_eq!(ta, tb);
    for name in ["decay_n12.csv", "resolvent_n12.csv", "datko_b0.5_n12.csv", "weak_datko_b0.5_n12.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }

    let mut rdr = csv::Reader::from_path(a.join("decay_n12.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "norm", "log_t", "log_norm"]);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let log_t: f64 = rec[2].parse().unwrap();
        assert!((t.ln() - log_t).abs() < 1e-12);
    }

    let c = dir.path().join("c");
    assert_eq!(run("run", &cfg, &c, &["--seed", "1234"]).status.code(), Some(0));
    assert_eq!(report(&c)["seed"], "0x1234");
}

#[test]
fn export_model_round_trip() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"damped_wave","n":5,"damping":{"kind":"indicator","value":2.0,"lo":0.2,"hi":0.6}},
            "analyses":["lyapunov"],"params":{"betas":[1.0]}}"#,
    );
    let out = dir.path().join("model");
    let o = bin().arg("export-model").arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let sys = semistab::models::build_damped_wave(5, |x: f64| if (0.2..=0.6).contains(&x) { 2.0 } else { 0.0 }).unwrap();
    let a: semistab::Matrix = semistab::mtx::read(out.join("A.mtx")).unwrap();
    let b: semistab::Matrix = semistab::mtx::read(out.join("B.mtx")).unwrap();
    let ab: semistab::Matrix = semistab::mtx::read(out.join("A_B.mtx")).unwrap();
    assert_eq!(&a, sys.a.matrix());
    assert_eq!(b, sys.b);
    assert_eq!(&ab, sys.a_b.matrix());

    let cfg2 = write_config(
        dir.path(),
        &format!(
            r#"{{"model":{{"kind":"matrix_file","a":"{}","b":"{}"}},"analyses":["lyapunov"],"params":{{"betas":[1.0]}}}}"#,
            out.join("A.mtx").display(),
            out.join("B.mtx").display()
        ),
    );
    let rerun = dir.path().join("rerun");
    assert_eq!(run("run", &cfg2, &rerun, &[]).status.code(), Some(0));
    let direct = semistab::lyapunov::lyap_direct(&sys.a_b).unwrap();
    let p: semistab::Matrix = semistab::mtx::read(rerun.join("lyapunov_P_n10.mtx")).unwrap();
    assert_eq!(p, direct.p);
}

#[test]
fn damped_wave_observability_and_verdict() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model":{"kind":"damped_wave","n":6,"damping":{"kind":"constant","value":1.0}},
            "analyses":["observability","thm42"],"params":{"tau":2.0,"betas":[1.0],"decay_window":[1,20]}}"#,
    );
    let out = dir.path().join("out");
    let o = run("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&out);
    let obs = &r["runs"][0]["analyses"][0]["result"];
    assert_eq!(obs["betas"][0]["certificate"]["feasible"], true);
    assert!(obs["betas"][0]["pipeline"]["first_failure"].is_null());
    let verdict = &r["runs"][0]["analyses"][1]["result"][0];
    assert_eq!(verdict["verdict"], "pass");
    let mut rdr = csv::Reader::from_path(out.join("observability_b1_n12.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["link", "pass", "value", "bound"]);
    assert_eq!(rdr.records().count(), 4);
    assert!(out.join("observability_gramian_n12.mtx").exists());
}
