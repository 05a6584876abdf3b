use std::fs;
use std::path::Path;
use std::process::Command;

use anticipation::expcli::ExperimentConfig;
use serde_json::Value;

const EQUILIBRIUM: &str = r#"
version = 1

[model]
kind = "at"
tau = 0.5

[potential]
kind = "repulsive_attractive"
k = 1.0
r0 = 1.0

[initial]
kind = "table"
x = [[0.5, 0.0], [-0.5, 0.0]]
v = [[0.0, 0.0], [0.0, 0.0]]

[integrator]
h = 0.01
t_end = 1.0
sample_stride = 10
"#;

const SWARM: &str = r#"
version = 1

[model]
kind = "phiu"
tau = 0.5

[potential]
kind = "power_law_attractive"
a = 1.0
beta = 0.2

[kernel]
kind = "scalar_fat_tail"
phi_minus = 1.0
gamma = 0.3

[initial]
kind = "random"
n = 8
d = 2
seed = 3
radius = 5.0
speed = 1.0

[integrator]
h = 0.01
t_end = 5.0
sample_stride = 5

[diagnostics]
modified_energy = { eps0 = 0.01, alpha = 0.5 }
fit_window = [0.5, 5.0]
"#;

fn run(dir: &Path, config: Option<&str>, args: &[&str]) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anticipation"));
    cmd.args(args).arg("--out").arg(dir.join("out")).arg("--quiet");
    if let Some(text) = config {
        let path = dir.join("config.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join("out").join(file)).unwrap()
}

fn summary(dir: &Path, file: &str) -> Value {
    serde_json::from_str(&read(dir, file)).unwrap()
}

#[test]
fn equilibrium_gives_constant_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), Some(EQUILIBRIUM), &["simulate"]);
    assert_eq!(code, 0);
    let csv = read(dir.path(), "diagnostics.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,E,cal_E,dE,d_cal_E,enstrophy,X,X_tau,Vmax,E_hat");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(&r[1..], &rows[0][1..]);
        assert_eq!(r[7], "5.0000000000000000e-1");
    }
    let s = summary(dir.path(), "summary.json");
    assert_eq!(s["exit_code"], 0);
    assert_eq!(s["checks"]["mean_velocity_drift"]["pass"], true);
}

#[test]
fn guard_trip_exits_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = EQUILIBRIUM
        .replace("v = [[0.0, 0.0], [0.0, 0.0]]", "v = [[50.0, 0.0], [-50.0, 0.0]]")
        .replace("sample_stride = 10", "sample_stride = 1\nblowup_guard = 10.0");
    let (code, _) = run(dir.path(), Some(&text), &["simulate"]);
    assert_eq!(code, 2);
    let rows = read(dir.path(), "diagnostics.csv").lines().count() - 1;
    assert!((1..101).contains(&rows), "{rows} rows");
    assert!(!summary(dir.path(), "summary.json")["blowup"].is_null());
}

#[test]
fn repeated_runs_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path(), Some(SWARM), &["simulate"]).0, 0);
    assert_eq!(run(b.path(), Some(SWARM), &["simulate"]).0, 0);
    for f in ["diagnostics.csv", "summary.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f));
    }
    let s = summary(a.path(), "summary.json");
    assert_eq!(s["seed"], 3);
    assert!(s["envelopes"]["series"].is_array());
    // every row carries the modified energy
    assert!(read(a.path(), "diagnostics.csv").lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn seed_flag_overrides_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), Some(SWARM), &["simulate"]);
    run(b.path(), Some(SWARM), &["simulate", "--seed", "99"]);
    assert_ne!(read(a.path(), "diagnostics.csv"), read(b.path(), "diagnostics.csv"));
    assert_eq!(summary(b.path(), "summary.json")["seed"], 99);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), None, &["simulate", "--config", "/nonexistent.toml"]).0, 1);
    assert_eq!(run(dir.path(), Some(&EQUILIBRIUM.replace("version = 1", "version = 9")), &["simulate"]).0, 1);
    assert_eq!(run(dir.path(), Some(&EQUILIBRIUM.replace("kind = \"at\"", "kind = \"cs\"")), &["simulate"]).0, 1);
    assert_eq!(run(dir.path(), Some(&SWARM.replace("seed = 3\n", "")), &["simulate"]).0, 1);
    assert_eq!(run(dir.path(), Some(&SWARM.replace("a = 1.0", "a = -1.0")), &["simulate"]).0, 1);
    assert_eq!(run(dir.path(), None, &["bogus"]).0, 1);
}

#[test]
fn means_check_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), None, &["means-check", "--instances", "200", "--seed", "5"]);
    assert_eq!(code, 0);
    let s = summary(dir.path(), "means_check.json");
    assert_eq!(s["violations"], 0);
    assert_eq!(s["pass"], true);
    assert!(s["worst_ratio"].as_f64().unwrap() <= 1.0);
}

#[test]
fn classify_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = "version = 1\n[potential]\nkind = \"quadratic_well\"\na = 2.0\n[classify]\nr_max = 10.0\n";
    let (code, stdout) = run(dir.path(), Some(text), &["classify-potential"]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let s = summary(dir.path(), "summary.json");
    assert_eq!(s["report"]["convex"]["pass"], true);
    assert_eq!(s["report"]["beta"], 0.0);
}

#[test]
fn polar_equilibrium_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
version = 1
[potential]
kind = "repulsive_attractive"
k = 1.0
r0 = 1.0
[polar]
tau = 1.0
initial = { r = 1.0, theta = 0.0, vr = 0.0, vtheta = 0.0 }
fit_window = [1.0, 10.0]
[integrator]
h = 0.01
t_end = 10.0
sample_stride = 10
"#;
    assert_eq!(run(dir.path(), Some(text), &["polar"]).0, 0);
    let csv = read(dir.path(), "diagnostics.csv");
    assert_eq!(csv.lines().next().unwrap(), "t,kr,vr,vtheta");
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|f| f.parse::<f64>().unwrap() == 0.0), "{line}");
    }
    assert!(summary(dir.path(), "summary.json")["vtheta_power"]["error"].is_string());
}

#[test]
fn sweep_of_one_cell_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SWARM}\n[sweep]\ncommand = \"simulate\"\n[[sweep.axes]]\nkey = \"model.tau\"\nvalues = [0.5]\n");
    assert_eq!(run(dir.path(), Some(&text), &["sweep"]).0, 0);
    let single = tempfile::tempdir().unwrap();
    run(single.path(), Some(SWARM), &["simulate"]);
    for f in ["diagnostics.csv", "summary.json"] {
        assert_eq!(read(dir.path(), &format!("cell_0000/{f}")), read(single.path(), f));
    }
    assert_eq!(read(dir.path(), "sweep.csv").lines().count(), 2);
}

#[test]
fn beta_sweep_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[sweep]\ncommand = \"simulate\"\n[[sweep.axes]]\nkey = \"potential.beta\"\nvalues = [0.1, 0.2, 0.3]\n",
        SWARM.replace("t_end = 5.0", "t_end = 2.0")
    );
    assert_eq!(run(dir.path(), Some(&text), &["sweep"]).0, 0);
    let csv = read(dir.path(), "sweep.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("cell,potential.beta,exit_code,fit_slope"));
    assert_eq!(lines.len(), 4);
    let predicted: Vec<f64> =
        lines[1..].iter().map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert!(predicted.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn threshold_sweep_blows_up_only_above_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
version = 1
[potential]
kind = "quadratic_well"
a = 1.0
[hydro]
tau = 2.0
particles = 16
m0 = 1.0
profile = { x = [-1.0, 0.0, 1.0], u = [0.0, 0.0, 0.0], rho = [1.0, 1.0, 1.0] }
[integrator]
h = 0.001
t_end = 10.0
sample_stride = 100
[sweep]
command = "hydro1d"
[[sweep.axes]]
key = "hydro.profile.u"
values = [[0.9, 0.0, -0.9], [1.5, 0.0, -1.5]]
"#;
    assert_eq!(run(dir.path(), Some(text), &["sweep"]).0, 0);
    let csv = read(dir.path(), "sweep.csv");
    let flags: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(7).unwrap()).collect();
    assert_eq!(flags, ["false", "true"]);
    let sub = summary(dir.path(), "cell_0000/summary.json");
    assert_eq!(sub["subcritical"], true);
    assert!(sub["min_slope"].as_f64().unwrap() >= -1.0);
    // d + 1 = -1/2 obeys e' = -e^2, so the slope diverges at t = 2
    let t = summary(dir.path(), "cell_0001/summary.json")["t_blowup"].as_f64().unwrap();
    assert!((t - 2.0).abs() < 1e-2, "{t}");
}

#[test]
fn hydro_blowup_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
version = 1
[potential]
kind = "quadratic_well"
a = 1.0
[hydro]
tau = 0.0
particles = 8
m0 = 1.0
profile = { x = [0.0, 1.0], u = [1.0, -1.0], rho = [1.0, 1.0] }
[integrator]
h = 0.001
t_end = 5.0
"#;
    assert_eq!(run(dir.path(), Some(text), &["hydro1d"]).0, 2);
    assert!(read(dir.path(), "diagnostics.csv").starts_with("t,min_d,max_abs_d,mass,momentum\n"));
}

#[test]
fn config_round_trip() {
    let text = r#"
version = 1
[model]
kind = "phiu"
tau = 0.25
[potential]
kind = "tabulated"
knots = [0.0, 1.0, 2.0, 4.0]
du = [0.0, 0.5, 0.8, 1.0]
interpolation = "linear"
[kernel]
kind = "hessian_of_potential"
eval_point = "anticipated"
potential = { kind = "quadratic_well", a = 1.5 }
[initial]
kind = "table"
x = [[0.0], [1.0]]
v = [[0.1], [-0.1]]
[integrator]
method = "euler"
t_end = 3.0
comoving = true
[polar]
tau = 1.0
initial = { r = 1.2, theta = 0.1, vr = 0.0, vtheta = 0.05 }
[hydro]
tau = 2.0
particles = 4
profile = { x = [0.0, 1.0], u = [0.0, 0.1], rho = [1.0, 2.0] }
[classify]
r_max = 5.0
[sweep]
command = "polar"
[[sweep.axes]]
key = "polar.tau"
values = [1.0, 2.0]
"#;
    let cfg = ExperimentConfig::parse(text).unwrap();
    let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(again.to_toml().unwrap(), cfg.to_toml().unwrap());
}
