//! End-to-end runs of the `rtchain` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtchain"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary(path: &Path) -> Value {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    doc["summary"].clone()
}

/// Data rows of a CSV file as (header, rows).
fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn spectrum_classifies_unbroken_models() {
    let tmp = TempDir::new().unwrap();
    for gamma in ["1.0", "0.0"] {
        let g = format!("model.gamma={gamma}");
        let out = run(
            tmp.path(),
            &["spectrum", "--override", "model.n_sites=8", "--override", &g],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        let s = summary(&tmp.path().join("spectrum_summary.json"));
        assert_eq!(s["classification"], "UNBROKEN");
        assert_eq!(s["n_eigenvalues"], 256);
    }
    let (header, rows) = csv(&tmp.path().join("spectrum.csv"));
    assert_eq!(header, ["index", "re", "im"]);
    assert_eq!(rows.len(), 256);
}

#[test]
fn spectrum_reports_broken_phase_below_the_ep() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["spectrum", "--override", "model.n_sites=8", "--override", "h0=0.5"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let s = summary(&tmp.path().join("spectrum_summary.json"));
    assert_eq!(s["classification"], "BROKEN");
    assert!((s["analytic_ep"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn malformed_config_exits_2_and_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["spectrum", "--override", "model.n_sites=-4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n_sites"), "{}", stderr(&out));

    let out = run(
        tmp.path(),
        &[
            "quench",
            "--override",
            "model.kind=IXYZ_SR",
            "--override",
            "solver=momentum",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("solver"), "{}", stderr(&out));

    let out = run(tmp.path(), &["sweep", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn broken_initial_state_exits_4_with_the_ep() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["quench", "--override", "h0=1.2", "--override", "model.n_sites=100"],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("h_ep = 1.414"), "{}", stderr(&out));

    let out = run(
        tmp.path(),
        &[
            "quench",
            "--override",
            "model.kind=IXYZ_SR",
            "--override",
            "model.n_sites=6",
            "--override",
            "h0=0.5",
        ],
    );
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn trivial_quench_has_constant_columns() {
    let tmp = TempDir::new().unwrap();
    for args in [
        ["model.n_sites=100", "h1=2.0", "time.t_max=30"],
        ["model.kind=IXYZ_SR", "h1=3.0", "model.n_sites=6"],
    ] {
        let mut argv = vec!["quench"];
        for a in &args {
            argv.extend(["--override", a]);
        }
        let out = run(tmp.path(), &argv);
        assert!(out.status.success(), "{}", stderr(&out));
        let file = tmp.path().join(format!(
            "quench_h1_{}.csv",
            if args[1] == "h1=2.0" { "2.0000" } else { "3.0000" }
        ));
        let (header, rows) = csv(&file);
        assert_eq!(header, ["t", "L", "ln_L", "lambda"]);
        for row in rows {
            assert!(
                (row[1] - 1.0).abs() < 1e-10 && row[2].abs() < 1e-10 && row[3].abs() < 1e-10,
                "{row:?}"
            );
        }
    }
}

#[test]
fn quench_writes_one_file_per_field_and_json_when_asked() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &[
            "quench",
            "--format",
            "json",
            "--override",
            "model.n_sites=200",
            "--override",
            "h1=[0.5, 1.0, 1.8]",
            "--override",
            "time.t_max=40",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for tag in ["0.5000", "1.0000", "1.8000"] {
        let doc: Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join(format!("quench_h1_{tag}.json"))).unwrap())
                .unwrap();
        assert_eq!(doc["columns"]["t"].as_array().unwrap().len(), 801);
        assert_eq!(doc["config"]["model"]["n_sites"], 200);
        assert_eq!(doc["columns"]["L"][0], 1.0);
    }
    let averages = summary(&tmp.path().join("quench_summary.json"));
    assert_eq!(averages.as_array().unwrap().len(), 3);
}

#[test]
fn csv_header_records_resolved_config_and_units() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &[
            "quench",
            "--override",
            "model.kind=IATXY",
            "--override",
            "model.n_sites=20",
            "--override",
            "h1=1.0",
            "--override",
            "time.t_max=100",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(tmp.path().join("quench_h1_1.0000.csv")).unwrap();
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    let joined = header.join("\n");
    for needle in [
        "units of 1/J",
        "h0 = 3.0",
        "kind = \"IATXY\"",
        "h_a = 0.5",
        "tau1 = 100.0",
        "[exact_diag.eigen]",
    ] {
        assert!(joined.contains(needle), "missing {needle} in\n{joined}");
    }
}

#[test]
fn empty_sweep_grid_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["sweep", "--override", "sweep.start=2.0", "--override", "sweep.stop=1.0"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

const SMALL_IXY_SWEEP: [&str; 12] = [
    "--override",
    "model.n_sites=300",
    "--override",
    "time.t_max=60",
    "--override",
    "window.tau0=10",
    "--override",
    "window.tau1=20",
    "--override",
    "window.tau=60",
    "--override",
    "sweep.step=0.1",
];

#[test]
fn sweep_is_deterministic_and_summarised() {
    let a = TempDir::new().unwrap();
    let names = ["sweep.csv", "sweep_summary.json"];
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let mut argv = vec!["sweep", "--threads", threads];
        argv.extend(SMALL_IXY_SWEEP);
        let out = run(a.path(), &argv);
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push(names.map(|n| fs::read(a.path().join(n)).unwrap()));
    }
    for (k, name) in names.iter().enumerate() {
        assert!(outputs[0][k] == outputs[1][k], "{name} differs between runs");
    }
    let (header, rows) = csv(&a.path().join("sweep.csv"));
    assert_eq!(
        header,
        ["h1", "eta_T", "eta_S", "deta_T_dh1", "deta_S_dh1", "lambda_saturation"]
    );
    assert_eq!(rows.len(), 24);
    assert!(rows[0][3].is_nan() && rows[23][4].is_nan() && rows[5][4].is_finite());
    let s = summary(&a.path().join("sweep_summary.json"));
    assert_eq!(s["method"], "kink");
    assert_eq!(s["n_failed"], 0);
    assert!((s["detected_ep"].as_f64().unwrap() - 2f64.sqrt()).abs() <= 0.1 + 1e-9);
    assert!(!a.path().join("sweep_failures.json").exists());
}

#[test]
fn exact_diag_sweep_uses_the_transient_average() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &[
            "sweep",
            "--override",
            "model.kind=IXYZ_SR",
            "--override",
            "model.n_sites=6",
            "--override",
            "sweep.step=0.25",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv(&tmp.path().join("sweep.csv"));
    assert_eq!(header, ["h1", "eta_T", "deta_T_dh1", "lambda_saturation"]);
    assert_eq!(rows.len(), 9);
    let s = summary(&tmp.path().join("sweep_summary.json"));
    assert_eq!(s["detect_on"], "transient");
    assert!(s["analytic_ep"].as_f64().unwrap() > 1.1);
}

#[test]
fn config_file_and_overrides_compose() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(
        &config,
        "h1 = [1.0]\n[model]\nkind = \"IXY\"\nn_sites = 50\ngamma = 0.5\n[time]\nt_max = 20.0\n",
    )
    .unwrap();
    let out = run(
        tmp.path(),
        &[
            "quench",
            "--config",
            config.to_str().unwrap(),
            "--override",
            "model.gamma=1.5",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(tmp.path().join("quench_h1_1.0000.csv")).unwrap();
    assert!(
        text.contains("#   gamma = 1.5") && text.contains("#   n_sites = 50"),
        "{text}"
    );
}
