use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shsade::objectives::reference_space;
use shsade::trace::SearchTrace;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shsade"));
    c.env_remove(shsade::experiment::OUTPUT_ROOT_ENV);
    c
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    p
}

fn bench_config(algorithm: &str, out: &Path, seeds: &[u64]) -> serde_json::Value {
    serde_json::json!({
        "task": "benchmark",
        "algorithm": algorithm,
        "objective": {"name": "sphere", "dimension": 4},
        "termination": {"max_evaluations": 2000},
        "shsade": {"population_size": 20, "max_generations": 100},
        "vanilla_de": {"population_size": 20},
        "seeds": seeds,
        "output": out,
    })
}

fn nas_config(algorithm: &str, out: &Path) -> serde_json::Value {
    serde_json::json!({
        "task": "nas",
        "algorithm": algorithm,
        "space": "space.json",
        "surrogate_seed": 2024,
        "biobjective": {"cost_budget": 256.0},
        "budget": 200,
        "seeds": [1, 2, 3],
        "output": out,
    })
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_writes_one_trace_per_seed_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.json",
        bench_config("shsade", &out, &[4, 5, 6]),
    );
    ok(&bin()
        .arg("run")
        .arg(&cfg)
        .args(["--threads", "2"])
        .output()
        .unwrap());
    assert_eq!(
        files_in(&out),
        vec![
            "summary.json",
            "trace_seed4.csv",
            "trace_seed5.csv",
            "trace_seed6.csv"
        ]
    );
    for seed in [4, 5, 6] {
        let text = fs::read_to_string(out.join(format!("trace_seed{seed}.csv"))).unwrap();
        let (meta, trace) = SearchTrace::from_csv(&text).unwrap();
        assert_eq!(meta.seed, seed);
        assert_eq!(meta.algorithm, "shsade");
        assert!(trace.last().unwrap().evaluations <= 2000);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let finals: Vec<f64> = summary["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["final_best"].as_f64().unwrap())
        .collect();
    assert_eq!(finals.len(), 3);
    assert_eq!(
        summary["median_final_best"].as_f64().unwrap(),
        shsade::experiment::median(&finals)
    );
    assert!(summary["iqr_final_best"].as_f64().unwrap() >= 0.0);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("space.json"), reference_space().to_json()).unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.json", nas_config("shsade", &out));
    ok(&bin().arg("run").arg(&cfg).output().unwrap());
    let first: Vec<Vec<u8>> = files_in(&out)
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    ok(&bin()
        .arg("run")
        .arg(&cfg)
        .args(["--threads", "1"])
        .output()
        .unwrap());
    let second: Vec<Vec<u8>> = files_in(&out)
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    assert_eq!(first, second);
}

#[test]
fn malformed_config_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ \"task\": ").unwrap();
    let r = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());

    let mut body = bench_config("shsade", &out, &[1, 1]);
    let dup = write_config(dir.path(), "dup.json", body.clone());
    assert_eq!(
        bin().arg("run").arg(&dup).output().unwrap().status.code(),
        Some(1)
    );
    body["seeds"] = serde_json::json!([1]);
    body["unknown_field"] = serde_json::json!(3);
    let unknown = write_config(dir.path(), "unknown.json", body);
    assert_eq!(
        bin()
            .arg("run")
            .arg(&unknown)
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
    assert!(!out.exists());
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "not a directory").unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        bench_config("shsade", &blocker.join("out"), &[1]),
    );
    let r = bin().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn output_root_env_anchors_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        bench_config("vanilla_de", Path::new("rel"), &[1, 2]),
    );
    let root = dir.path().join("root");
    ok(&bin()
        .arg("run")
        .arg(&cfg)
        .env(shsade::experiment::OUTPUT_ROOT_ENV, &root)
        .output()
        .unwrap());
    assert_eq!(
        files_in(&root.join("rel")),
        vec!["summary.json", "trace_seed1.csv", "trace_seed2.csv"]
    );
}

#[test]
fn compare_self_is_a_tie_and_better_algorithm_wins() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut strong = bench_config("shsade", &a, &[1, 2, 3]);
    strong["termination"] = serde_json::json!({"max_evaluations": 4000});
    let mut weak = bench_config("shsade", &b, &[1, 2, 3]);
    weak["termination"] = serde_json::json!({"max_evaluations": 400});
    for (name, c) in [("a.json", strong), ("b.json", weak)] {
        let p = write_config(dir.path(), name, c);
        ok(&bin().arg("run").arg(&p).output().unwrap());
    }
    // summary.json is not a trace; compare must ignore it
    let out = ok(&bin().arg("compare").arg(&a).arg(&a).output().unwrap());
    assert!(out.trim_end().ends_with("verdict: tie"), "{out}");

    let out = ok(&bin().arg("compare").arg(&a).arg(&b).output().unwrap());
    assert!(
        out.trim_end()
            .ends_with(&format!("verdict: {}", a.display())),
        "{out}"
    );
    assert!(out.contains("evaluations,median_best_a,median_best_b"));

    let csv = dir.path().join("cmp.csv");
    let out = ok(&bin()
        .arg("compare")
        .arg(&b)
        .arg(&a)
        .arg("--output")
        .arg(&csv)
        .output()
        .unwrap());
    assert!(out
        .trim_end()
        .ends_with(&format!("verdict: {}", a.display())));
    assert!(fs::read_to_string(&csv).unwrap().lines().count() > 3);
}

#[test]
fn compare_nas_against_regularized_ea_uses_25_evaluation_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("space.json"), reference_space().to_json()).unwrap();
    let a = dir.path().join("shsade");
    let b = dir.path().join("rea");
    for (name, alg, out) in [("a.json", "shsade", &a), ("b.json", "regularized_ea", &b)] {
        let p = write_config(dir.path(), name, nas_config(alg, out));
        ok(&bin().arg("run").arg(&p).output().unwrap());
    }
    let out = ok(&bin().arg("compare").arg(&a).arg(&b).output().unwrap());
    let rows: Vec<u64> = out
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.first(), Some(&25));
    assert!(rows
        .iter()
        .all(|e| e % 25 == 0 || *e == *rows.last().unwrap()));
    assert!(out.contains("# a: shsade"));
    assert!(out.contains("# b: regularized_ea"));
}

#[test]
fn compare_schema_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("space.json"), reference_space().to_json()).unwrap();
    let a = dir.path().join("bench");
    let b = dir.path().join("nas");
    let p = write_config(dir.path(), "a.json", bench_config("shsade", &a, &[1]));
    ok(&bin().arg("run").arg(&p).output().unwrap());
    let p = write_config(dir.path(), "b.json", nas_config("shsade", &b));
    ok(&bin().arg("run").arg(&p).output().unwrap());
    assert_eq!(
        bin()
            .arg("compare")
            .arg(&a)
            .arg(&b)
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );

    let broken = dir.path().join("broken");
    fs::create_dir(&broken).unwrap();
    fs::write(broken.join("t.csv"), "generation,evaluations\n1,2\n").unwrap();
    assert_eq!(
        bin()
            .arg("compare")
            .arg(&a)
            .arg(&broken)
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn oracle_ranks_every_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    fs::write(&space, reference_space().to_json()).unwrap();
    let out = ok(&bin()
        .arg("oracle")
        .arg(&space)
        .args(["--seed", "2024", "--cost-budget", "256"])
        .output()
        .unwrap());
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 1025);
    assert!(lines[0].starts_with("rank,score,accuracy,cost,block0.width"));
    let scores: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));

    let top = ok(&bin()
        .arg("oracle")
        .arg(&space)
        .args(["--seed", "2024", "--cost-budget", "256", "--top", "5"])
        .output()
        .unwrap());
    assert_eq!(top.lines().count(), 6);
    assert_eq!(top.lines().nth(1), out.lines().nth(1));

    let r = bin()
        .arg("oracle")
        .arg(dir.path().join("missing.json"))
        .args(["--seed", "1", "--cost-budget", "1"])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn template_emits_a_loadable_space() {
    let out = ok(&bin().args(["template", "--blocks", "2"]).output().unwrap());
    let space = shsade::codec::DiscreteSpace::from_json(&out).unwrap();
    assert_eq!(space.dim(), 8);
}
