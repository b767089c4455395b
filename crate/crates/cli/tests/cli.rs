use std::path::{Path, PathBuf};
use std::process::{Command, Output};

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_convlab"))
            .args(args)
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "convlab {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn synth(&self, name: &str, args: &[&str]) {
        let mut full = vec!["synth", "--out", name];
        full.extend_from_slice(args);
        self.ok(&full);
    }
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn states_counts_and_table() {
    let sb = Sandbox::new();
    assert_eq!(sb.ok(&["states", "--H", "5"]), "1365\n");
    let table = rows(&sb.ok(&["states", "--H", "1", "--enumerate"]));
    assert_eq!(table.len(), 5);
    assert_eq!(table[0], vec!["0", ""]);
    assert_eq!(table[4], vec!["4", "BB"]);
}

#[test]
fn usage_errors_exit_with_one() {
    let sb = Sandbox::new();
    assert_eq!(sb.run(&["states", "--H", "-1"]).status.code(), Some(1));
    assert_eq!(sb.run(&["simulate", "--N", "10"]).status.code(), Some(1));
    assert_eq!(sb.run(&["states", "--H", "2", "--bogus"]).status.code(), Some(1));
    assert_eq!(sb.run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn invalid_inputs_exit_with_two() {
    let sb = Sandbox::new();
    std::fs::write(sb.path("bad.json"), r#"{"x": 1}"#).unwrap();
    assert_eq!(sb.run(&["stability", "--policy", "bad.json"]).status.code(), Some(2));
    assert_eq!(sb.run(&["stability", "--policy", "missing.json"]).status.code(), Some(2));
    sb.synth("c.json", &["--kind", "constant", "--q", "1", "--H", "1"]);
    let out = sb.run(&["simulate", "--policy", "c.json", "--N", "1", "--runs", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integrator_failure_exits_with_three() {
    let sb = Sandbox::new();
    sb.synth("r.json", &["--kind", "random", "--H", "2"]);
    let out = sb.run(&["meanfield", "--policy", "r.json", "--dt", "5", "--tmax", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_constant_policy_hits_the_lower_bound() {
    let sb = Sandbox::new();
    sb.synth("c.json", &["--kind", "constant", "--q", "1.0"]);
    let args = ["simulate", "--policy", "c.json", "--N", "24", "--runs", "10", "--seed", "4"];
    let first = sb.ok(&args);
    let table = rows(&first);
    assert_eq!(table.len(), 10);
    for (k, row) in table.iter().enumerate() {
        assert_eq!(row[0], k.to_string());
        assert_eq!(&row[2..], ["A", "3", "3"]);
    }
    assert_eq!(sb.ok(&args), first);
}

#[test]
fn simulate_side_outputs() {
    let sb = Sandbox::new();
    sb.synth("m.json", &["--kind", "majority", "--q", "0.6", "--H", "3"]);
    sb.ok(&[
        "simulate", "--policy", "m.json", "--N", "20", "--runs", "50", "--out", "b.csv",
        "--trajectories", "t.csv", "--pdf", "p.csv",
    ]);
    let batch = rows(&read(&sb.path("b.csv")));
    let traj = rows(&read(&sb.path("t.csv")));
    let pdf = rows(&read(&sb.path("p.csv")));
    let executed: usize = batch.iter().map(|r| r[4].parse::<usize>().unwrap()).sum();
    assert_eq!(traj.len(), executed);
    let pdf_total: usize = pdf
        .iter()
        .map(|r| r[1].parse::<usize>().unwrap() + r[2].parse::<usize>().unwrap())
        .sum();
    let consensus = batch.iter().filter(|r| r[2] != "none").count();
    assert_eq!(pdf_total, consensus);
    assert!(pdf.iter().all(|r| r[0].parse::<usize>().unwrap() >= 3));
}

#[test]
fn sweep_reports_individual_bias_row() {
    let sb = Sandbox::new();
    sb.synth("b.json", &["--kind", "biased-empty", "--q", "0.8", "--H", "2"]);
    let table = rows(&sb.ok(&[
        "sweep", "--policy", "b.json", "--sizes", "2,4,6", "--runs", "20", "--max-rounds", "5",
    ]));
    assert_eq!(table.len(), 4);
    assert_eq!(table[0][0], "1");
    assert_eq!(table[0][1], "0.800000");
    assert_eq!(
        table.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["1", "2", "4", "6"]
    );
}

#[test]
fn sweep_of_symmetric_policy_is_balanced() {
    let sb = Sandbox::new();
    sb.synth("m.json", &["--kind", "majority", "--q", "0.5", "--H", "3"]);
    let table = rows(&sb.ok(&[
        "sweep", "--policy", "m.json", "--sizes", "2,24,100", "--runs", "400", "--seed", "2",
    ]));
    for row in &table[1..] {
        let f: f64 = row[1].parse().unwrap();
        let se: f64 = row[2].parse().unwrap();
        assert!((f - 0.5).abs() <= 3.0 * se, "{row:?}");
    }
}

#[test]
fn sweep_without_consensus_leaves_fraction_blank() {
    let sb = Sandbox::new();
    sb.synth("u.json", &["--kind", "uniform", "--H", "2"]);
    let table = rows(&sb.ok(&[
        "sweep", "--policy", "u.json", "--sizes", "24", "--runs", "5", "--max-rounds", "20",
    ]));
    assert_eq!(table[1], vec!["24", "", "", "0", "5"]);
}

#[test]
fn stability_rows() {
    let sb = Sandbox::new();
    sb.synth("c.json", &["--kind", "constant", "--q", "1.0", "--H", "2"]);
    sb.synth("u.json", &["--kind", "uniform", "--H", "2"]);
    let c = rows(&sb.ok(&["stability", "--policy", "c.json"]));
    assert_eq!(c[0][5], "-1.00000");
    assert_eq!(c[0][3], "0.00000");
    let u = rows(&sb.ok(&["stability", "--policy", "u.json"]));
    assert_eq!(u[0][5], u[0][7]);
    assert_eq!(u[0][3], u[0][4]);
}

#[test]
fn meanfield_trajectory_is_well_formed() {
    let sb = Sandbox::new();
    sb.synth("r.json", &["--kind", "random", "--H", "2", "--seed", "3"]);
    let table = rows(&sb.ok(&["meanfield", "--policy", "r.json", "--tmax", "30"]));
    assert!(table.len() > 100);
    let mut last_t = -1.0;
    for row in &table {
        let t: f64 = row[0].parse().unwrap();
        let sum: f64 = row[4].parse().unwrap();
        assert!(t > last_t);
        assert!((sum - 1.0).abs() <= 1e-9);
        last_t = t;
    }
}

#[test]
fn baseline_extremes() {
    let sb = Sandbox::new();
    let table = rows(&sb.ok(&["baseline", "--p", "1.0", "--N", "24", "--runs", "100"]));
    assert_eq!(table.len(), 1);
    assert_eq!(table[0][..4], ["1.000000", "24", "100", "1.000000"]);
    assert_eq!(table[0][4], "0.000000");
}

#[test]
fn validate_matching_counts_pass() {
    let sb = Sandbox::new();
    sb.synth("c.json", &["--kind", "constant", "--q", "0.5", "--H", "1"]);
    std::fs::write(
        sb.path("counts.csv"),
        "state_index,observed_k,n\n0,10,20\n3,50,100\n",
    )
    .unwrap();
    let table = rows(&sb.ok(&["validate", "--policy", "c.json", "--counts", "counts.csv"]));
    assert_eq!(table.len(), 2);
    for row in &table {
        assert_eq!(row[4], "1.000000");
        assert_eq!(row[5], "true");
        assert_eq!(row[6], "");
    }
}

#[test]
fn validate_reports_bad_rows() {
    let sb = Sandbox::new();
    sb.synth("c.json", &["--kind", "constant", "--q", "0.9", "--H", "1"]);
    std::fs::write(
        sb.path("counts.csv"),
        "state_index,observed_k,n\n1,9,10\n2,0,0\n99,1,2\nx,1,2\n",
    )
    .unwrap();
    let args = ["validate", "--policy", "c.json", "--counts", "counts.csv"];
    let table = rows(&sb.ok(&args));
    assert_eq!(table.len(), 4);
    assert_eq!(table[0][5], "true");
    for row in &table[1..] {
        assert_eq!(row[5], "false");
        assert!(!row[6].is_empty());
    }
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(sb.run(&strict).status.code(), Some(2));
}

#[test]
fn structured_text_mirrors_csv() {
    let sb = Sandbox::new();
    let json = sb.ok(&["states", "--H", "1", "--enumerate", "--format", "structured-text"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 5);
    assert_eq!(v[2]["state"], "AB");
    assert_eq!(v[2]["state_index"], 2);
}

#[test]
fn synth_writes_loadable_policies() {
    let sb = Sandbox::new();
    for kind in ["uniform", "constant", "biased-empty", "word-swap-symmetric", "random", "majority"] {
        let name = format!("{kind}.json");
        sb.synth(&name, &["--kind", kind, "--H", "2", "--q", "0.3"]);
        let policy = convlab_core::PolicyTable::load(sb.path(&name)).unwrap();
        assert_eq!(policy.state_count(), 21);
    }
    let csv_text = sb.ok(&["synth", "--kind", "uniform", "--H", "1", "--format", "csv"]);
    assert!(csv_text.starts_with("state_index,state_string,prob_a\n"));
    assert_eq!(csv_text.lines().count(), 6);
}
