use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pelastic::flow::Outcome;
use pelastic_cli::{parse_config, Summary};
use tempfile::TempDir;

const ELLIPSE: &str = r#"
[scenario]
name = "r2_ellipse"
n = 32
a = 1.2
b = 0.8

[flow]
t_max = 0.05
sample_every = 10

[output]
snapshot_every = 5
"#;

fn pelastic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pelastic"))
        .current_dir(dir)
        .env_remove("PELASTIC_OUTPUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn snapshots(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = fs::read_dir(dir.join("snapshots"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read_to_string(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn minimal_run_writes_trajectory_snapshots_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "ellipse.toml", ELLIPSE);
    let out = pelastic(tmp.path(), &["run", "ellipse.toml"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("output/ellipse");

    let csv = fs::read_to_string(run.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "step,time,energy,residual,length,max_k,min_k,dt");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() > 10);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0] && w[1][1] > w[0][1]);
        assert!(w[1][2] <= w[0][2] + 1e-10);
    }

    let s = summary(&run);
    assert_eq!(s.outcome, Outcome::MaxTimeReached);
    assert_eq!(s.config, parse_config(&cfg).unwrap());
    assert_eq!(s.final_energy, rows.last().unwrap()[2]);

    let names: Vec<String> = snapshots(&run).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.first().unwrap(), "step_000000000.json");
    assert_eq!(names.last().unwrap(), &format!("step_{:09}.json", s.steps));
    assert!(names.contains(&"step_000000050.json".to_string()));
}

#[test]
fn identical_runs_produce_identical_files() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "a.toml", ELLIPSE);
    write(tmp.path(), "b.toml", ELLIPSE);
    let out = pelastic(tmp.path(), &["run", "--quiet", "--jobs", "2", "a.toml", "b.toml"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    let (a, b) = (tmp.path().join("output/a"), tmp.path().join("output/b"));
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());
    assert_eq!(snapshots(&a), snapshots(&b));
    let (mut sa, mut sb) = (summary(&a), summary(&b));
    sa.wall_time_s = 0.0;
    sb.wall_time_s = 0.0;
    sa.config.run_name.clear();
    sb.config.run_name.clear();
    assert_eq!(sa, sb);
}

#[test]
fn custom_scenario_resumes_from_a_snapshot() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "ellipse.toml", ELLIPSE);
    assert_eq!(pelastic(tmp.path(), &["run", "--quiet", "ellipse.toml"]).status.code(), Some(0));
    let first = summary(&tmp.path().join("output/ellipse"));
    let last = format!("output/ellipse/snapshots/step_{:09}.json", first.steps);
    write(
        tmp.path(),
        "resume.toml",
        &format!("[scenario]\nname = \"custom\"\nsnapshot = \"{last}\"\n\n[flow]\nt_max = 0.01\n"),
    );
    let out = pelastic(tmp.path(), &["run", "--quiet", "resume.toml"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = tmp.path().join("output/resume");
    let csv = fs::read_to_string(run.join("trajectory.csv")).unwrap();
    let e0: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((e0 - first.final_energy).abs() <= 1e-12 * first.final_energy);
    assert!(summary(&run).final_energy <= e0);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "bad.toml", "[scenario]\nname = \"r2_circle\"\nr = -1\n");
    write(tmp.path(), "typo.toml", "[scenario]\nname = \"r2_circle\"\nr = 1\nradius = 2\n");
    write(tmp.path(), "flat.toml", "[scenario]\nname = \"sphere_equator\"\nn = 32\n\n[params]\np = 3.0\n\n[flow]\nt_max = 0.01\n");
    write(tmp.path(), "ok.toml", ELLIPSE);

    let out = pelastic(tmp.path(), &["run", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));
    assert_eq!(pelastic(tmp.path(), &["run", "typo.toml"]).status.code(), Some(1));
    assert_eq!(pelastic(tmp.path(), &["run", "missing.toml"]).status.code(), Some(1));

    let out = pelastic(tmp.path(), &["run", "--jobs", "2", "ok.toml", "flat.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flat.toml"));
    assert!(tmp.path().join("output/ok/summary.json").exists());

    // Two scenarios writing to the same directory.
    fs::create_dir(tmp.path().join("sub")).unwrap();
    write(tmp.path(), "sub/ok.toml", ELLIPSE);
    assert_eq!(pelastic(tmp.path(), &["run", "ok.toml", "sub/ok.toml"]).status.code(), Some(1));
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "e.toml", &format!("{ELLIPSE}dir = \"from_file\"\n"));
    assert_eq!(pelastic(tmp.path(), &["run", "--quiet", "e.toml"]).status.code(), Some(0));
    assert!(tmp.path().join("from_file/e/summary.json").exists());

    let status = Command::new(env!("CARGO_BIN_EXE_pelastic"))
        .current_dir(tmp.path())
        .env("PELASTIC_OUTPUT_DIR", "from_env")
        .args(["run", "--quiet", "e.toml"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("from_env/e/summary.json").exists());

    let status = Command::new(env!("CARGO_BIN_EXE_pelastic"))
        .current_dir(tmp.path())
        .env("PELASTIC_OUTPUT_DIR", "from_env")
        .args(["run", "--quiet", "--output", "from_flag", "e.toml"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("from_flag/e/summary.json").exists());
}

#[test]
fn revolution_flow_escapes() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "rev.toml",
        r#"
[scenario]
name = "revolution_latitude"
n = 32
t0 = 1.5

[flow]
t_max = 100.0
stepper = "chebyshev"
stages = 32
escape_bound = 2.0
sample_every = 20
"#,
    );
    let out = pelastic(tmp.path(), &["run", "--quiet", "rev.toml"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&tmp.path().join("output/rev"));
    assert_eq!(s.outcome, Outcome::Escaped);
    assert!(s.theta_hat.is_none() && s.fit_note.is_some());
}

#[test]
fn bundled_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        parse_config(&path).unwrap_or_else(|e| panic!("{e}"));
        count += 1;
    }
    assert_eq!(count, 5);
}
