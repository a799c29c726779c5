use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hds::formats::{load_symbol_string, read_probe_log, GroundTruthFile};

fn hds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hds")).args(args).output().expect("spawn hds")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_instance(dir: &Path, seed: &str) -> Output {
    hds(&["gen", "--mu", "4", "--n", "16384", "--blocks", "16", "--seed", seed, "--out-dir", p(dir)])
}

fn outputs_column(csv: &str) -> Vec<String> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect()
}

#[test]
fn gen_writes_instance_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&gen_instance(&a, "7")), 0);
    assert_eq!(code(&gen_instance(&b, "7")), 0);
    for name in ["fixed.hds", "r.hds", "updates.hds", "dictionary.json", "ground_truth.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(load_symbol_string(&a.join("fixed.hds")).unwrap().len(), 16384);
    assert_eq!(load_symbol_string(&a.join("r.hds")).unwrap().len(), 64);
    let truth: GroundTruthFile = serde_json::from_slice(&fs::read(a.join("ground_truth.json")).unwrap()).unwrap();
    assert_eq!(truth.t2 - truth.t1, truth.t1 - truth.t0 + 1);
    assert_eq!(truth.blocks.len(), 8);
    let dict: serde_json::Value = serde_json::from_slice(&fs::read(a.join("dictionary.json")).unwrap()).unwrap();
    assert_eq!(dict["format_version"], 1);
    assert_eq!(dict["blocks"].as_array().unwrap().len(), 16);
}

#[test]
fn gen_rejects_bad_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&hds(&["gen", "--mu", "1", "--n", "64", "--out-dir", p(tmp.path())])), 2);
    assert_eq!(code(&hds(&["gen", "--mu", "4", "--n", "100", "--out-dir", p(tmp.path())])), 2);
    assert_eq!(code(&hds(&["gen", "--mu", "5", "--n", "4096", "--strict", "--out-dir", p(tmp.path())])), 2);
    assert_eq!(code(&hds(&["gen", "--mu"])), 2);
}

#[test]
fn run_backends_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&hds(&["gen", "--mu", "3", "--n", "1024", "--seed", "2", "--out-dir", p(dir)])), 0);
    let (f, u) = (dir.join("fixed.hds"), dir.join("updates.hds"));
    let mut columns = Vec::new();
    for backend in ["naive", "blackbox"] {
        let csv = dir.join(format!("{backend}.csv"));
        let out =
            hds(&["run", "--fixed", p(&f), "--updates", p(&u), "--backend", backend, "--out", p(&csv), "--oracle"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.contains("t,output,probes_this_arrival"));
        columns.push(outputs_column(&text));
    }
    assert_eq!(columns[0].len(), 1024);
    assert_eq!(columns[0], columns[1]);
}

#[test]
fn run_missing_file_is_usage_error() {
    let out = hds(&["run", "--fixed", "/nonexistent/f.hds", "--updates", "/nonexistent/u.hds"]);
    assert_eq!(code(&out), 2);
    let out = hds(&["run", "--fixed", "a", "--updates", "b", "--backend", "quantum"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn probe_reports_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("f.hds"), format!("HDS1\ndelta=2\nlen=200\n{}\n", "0 1 2 3 ".repeat(50))).unwrap();
    fs::write(dir.join("u.hds"), format!("HDS1\ndelta=2\nlen=300\n{}\n", "1 1 0 2 3 0 ".repeat(50))).unwrap();
    for backend in ["naive", "blackbox"] {
        let out_dir = dir.join(backend);
        let out = hds(&[
            "probe",
            "--fixed",
            p(&dir.join("f.hds")),
            "--updates",
            p(&dir.join("u.hds")),
            "--backend",
            backend,
            "--out-dir",
            p(&out_dir),
            "--replay-trials",
            "25",
            "--seed",
            "3",
        ]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(code(&out), 0, "{stdout}");
        assert!(stdout.contains("replay: 25/25 passed"), "{stdout}");
        let log = read_probe_log(&mut fs::File::open(out_dir.join("probes.hpl")).unwrap()).unwrap();
        assert_eq!(log.n, 300);
        let nodes = fs::read_to_string(out_dir.join("nodes.csv")).unwrap();
        assert_eq!(nodes.lines().count(), 2 + 511);
        assert!(out_dir.join("arrivals.csv").exists() && out_dir.join("replays.csv").exists());
    }
    fs::write(dir.join("empty.hds"), "HDS1\ndelta=2\nlen=0\n").unwrap();
    let out =
        hds(&["probe", "--fixed", p(&dir.join("f.hds")), "--updates", p(&dir.join("empty.hds")), "--out-dir", p(dir)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn mm_worked_example_and_collisions() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("a.json"), "[[0,0,1],[1,0,1]]").unwrap();
    fs::write(dir.join("b.json"), "[[0,1],[1,0],[0,0]]").unwrap();
    let out = hds(&["mm", "--a", p(&dir.join("a.json")), "--b", p(&dir.join("b.json"))]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["product"], serde_json::json!([[0, 0], [0, 1]]));
    assert_eq!(report["oracle_match"], true);

    fs::write(dir.join("tall.json"), "[[1],[1],[1]]").unwrap();
    fs::write(dir.join("wide.json"), "[[1,1]]").unwrap();
    assert_eq!(code(&hds(&["mm", "--a", p(&dir.join("tall.json")), "--b", p(&dir.join("wide.json"))])), 2);
    assert_eq!(code(&hds(&["mm", "--a", p(&dir.join("a.json")), "--b", p(&dir.join("a.json"))])), 2);
}

#[test]
fn verify_selected_criteria_and_strict_mode() {
    let out = hds(&["verify", "--criteria", "8,10"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.contains("PASS")).count(), 2);

    let out = hds(&["verify", "--criteria", "10", "--strict", "--mu", "5"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("VIOLATION"));
    assert_eq!(code(&hds(&["verify", "--criteria", "10", "--strict", "--mu", "4"])), 0);
    assert_eq!(code(&hds(&["verify", "--criteria", "42"])), 2);
}

#[test]
fn bench_emits_rows() {
    let out = hds(&["bench", "--sizes", "256,1024", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("naive,") || l.starts_with("blackbox,")).count(), 4);
    let again = hds(&["bench", "--sizes", "256,1024", "--seed", "1"]);
    assert_eq!(out.stdout, again.stdout);
}
