use std::path::Path;
use std::process::{Command, Output};

fn mrdpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrdpg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Ring on `n` nodes plus chords `(i, i + step)`, as an edge-list file.
fn ring_with_chords(n: usize, step: usize, chords: usize) -> String {
    let mut out = format!("n={n}\n");
    for i in 0..n {
        out += &format!("{i} {}\n", (i + 1) % n);
    }
    for i in 0..chords {
        out += &format!("{i} {}\n", (i + step) % n);
    }
    out
}

#[test]
fn fit_identical_files_gives_equal_weights() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let text = ring_with_chords(12, 5, 6);
    write(&a, &text);
    write(&b, &text);
    let out = dir.path().join("fit.json");
    let run = mrdpg(&[
        "fit",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--d",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("objective") && stderr.contains("converged"));
    let fit = json(&out);
    assert_eq!(fit["format"], "mrdpg-fit");
    assert_eq!(fit["options"]["d"], 2);
    let l = fit["lambdas"].as_array().unwrap();
    for (x, y) in l[0].as_array().unwrap().iter().zip(l[1].as_array().unwrap()) {
        assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-6);
    }
}

#[test]
fn fit_full_rank_reproduces_positive_part() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    write(&a, "n=4\n0 1\n1 2\n2 3\n3 0\n0 2\n");
    let out = dir.path().join("fit.json");
    let run = mrdpg(&["fit", a.to_str().unwrap(), "--d", "4", "--out", out.to_str().unwrap()]);
    assert!(run.status.success());
    let trace = json(&out)["objective_trace"].as_array().unwrap().clone();
    assert!(trace.last().unwrap().as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn malformed_input_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("bad.txt");
    write(&a, "n=3\n0 1\n1 x\n");
    let run = mrdpg(&["fit", a.to_str().unwrap(), "--d", "1"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 3"));

    let self_loop = dir.path().join("loop.txt");
    write(&self_loop, "n=3\n1 1\n");
    assert_eq!(
        mrdpg(&["fit", self_loop.to_str().unwrap(), "--d", "1"]).status.code(),
        Some(2)
    );

    let missing = mrdpg(&["fit", "/nonexistent/file", "--d", "1"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn node_count_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    write(&a, "n=4\n0 1\n");
    write(&b, "n=5\n0 1\n");
    let run = mrdpg(&["fit", a.to_str().unwrap(), b.to_str().unwrap(), "--d", "1"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mrdpg(&["fit"]).status.code(), Some(1));
    assert_eq!(mrdpg(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    write(&a, "n=4\n0 1\n");
    assert_eq!(mrdpg(&["fit", a.to_str().unwrap(), "--d", "9"]).status.code(), Some(1));
    assert_eq!(
        mrdpg(&["fit", a.to_str().unwrap(), "--d", "1", "--init", "nope"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(mrdpg(&["simulate", "--setting", "nope"]).status.code(), Some(1));
    assert_eq!(mrdpg(&["--help"]).status.code(), Some(0));
}

#[test]
fn identical_graphs_test_gives_p_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    write(&a, &ring_with_chords(10, 3, 4));
    let out = dir.path().join("test.json");
    let run = mrdpg(&[
        "test",
        a.to_str().unwrap(),
        a.to_str().unwrap(),
        "--d",
        "2",
        "--permutations",
        "50",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let result = json(&out);
    assert_eq!(result["p_value"].as_f64(), Some(1.0));
    assert_eq!(result["seed"], 3);
    assert_eq!(result["permutations"], 50);
    assert_eq!(result["null_statistics"].as_array().unwrap().len(), 50);
}

#[test]
fn match_edge_counts_equalizes_and_echoes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    // 15-node ring plus 15 chords = 30 edges; ring plus 5 chords = 20 edges
    write(&a, &ring_with_chords(15, 4, 15));
    write(&b, &ring_with_chords(15, 6, 5));
    let out = dir.path().join("test.json");
    let run = mrdpg(&[
        "test",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--d",
        "2",
        "--permutations",
        "30",
        "--seed",
        "11",
        "--match-edge-counts",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let result = json(&out);
    let inputs = result["inputs"].as_array().unwrap();
    assert_eq!(inputs[0]["original_edges"], 30);
    assert_eq!(inputs[1]["original_edges"], 20);
    assert_eq!(inputs[0]["edges"], 20);
    assert_eq!(inputs[1]["edges"], 20);
    assert_eq!(result["downsample_seed"], 11);
    assert!(result["statistic"].as_f64().unwrap() >= -1e-6);
}

#[test]
fn swapped_communities_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    // two 10-node cliques; graph a is dense in the first, graph b in the second
    let block = |dense_first: bool| {
        let mut text = String::from("n=20\n");
        for i in 0..20 {
            for j in i + 1..20 {
                let same = (i < 10) == (j < 10);
                let first = i < 10 && j < 10;
                let keep = same && (first == dense_first || (i + j) % 3 == 0);
                if keep {
                    text += &format!("{i} {j}\n");
                }
            }
        }
        text
    };
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    write(&a, &block(true));
    write(&b, &block(false));
    let out = dir.path().join("test.json");
    let run = mrdpg(&[
        "test",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--d",
        "2",
        "--permutations",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    assert!(json(&out)["p_value"].as_f64().unwrap() <= 0.05);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = mrdpg(&[
            "--threads",
            threads,
            "simulate",
            "--setting",
            "setting1",
            "--k",
            "2",
            "--replicates",
            "2",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let table = std::fs::read(&out).unwrap();
        let summary = std::fs::read(dir.path().join(format!("{name}.summary.json"))).unwrap();
        (table, summary)
    };
    let first = run("one.csv", "1");
    let second = run("two.csv", "2");
    assert_eq!(first, second);
    let table = String::from_utf8(first.0).unwrap();
    assert!(table.starts_with("# mrdpg simulate"));
    assert!(table.contains("\"seed\":7"));
}

#[test]
fn setting2_schema_carries_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2.json");
    let run = mrdpg(&[
        "simulate",
        "--setting",
        "setting2",
        "--orderings",
        "1",
        "--k",
        "4",
        "--replicates",
        "2",
        "--format",
        "structured",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&out);
    assert_eq!(report["kind"], "estimation");
    let cells = report["cells"].as_array().unwrap();
    assert!(cells.iter().all(|c| c["ordering"] == 1));
    assert_eq!(report["spec"]["orderings"], serde_json::json!([1]));
}

#[test]
fn power_null_case_is_near_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("power.csv");
    let run = mrdpg(&[
        "simulate",
        "--setting",
        "power",
        "--r",
        "0",
        "--replicates",
        "100",
        "--permutations",
        "100",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = json(&dir.path().join("power.csv.summary.json"));
    let rate = summary["cells"][0]["rejection_rate"].as_f64().unwrap();
    // three binomial standard errors at 100 replicates
    assert!(
        (rate - 0.05).abs() <= 3.0 * (0.05f64 * 0.95 / 100.0).sqrt(),
        "rate {rate}"
    );
}

#[test]
fn metrics_between_fit_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    write(&a, &ring_with_chords(12, 5, 6));
    let fit = dir.path().join("fit.json");
    assert!(
        mrdpg(&["fit", a.to_str().unwrap(), "--d", "2", "--out", fit.to_str().unwrap()])
            .status
            .success()
    );
    let out = dir.path().join("metrics.json");
    let run = mrdpg(&[
        "metrics",
        "--truth",
        fit.to_str().unwrap(),
        "--estimate",
        fit.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let m = json(&out);
    assert!(m["subspace_distance"].as_f64().unwrap() < 1e-7);
    assert!(m["adjacency_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn csv_fit_output_has_config_header() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    write(&a, "# a comment\n1,2\n2,3\n3,1\n3,4\n");
    let run = mrdpg(&[
        "fit",
        a.to_str().unwrap(),
        "--one-based",
        "--d",
        "1",
        "--format",
        "csv",
        "--seed",
        "4",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# mrdpg fit") && header.contains("\"seed\":4"));
    assert_eq!(lines.next(), Some("graph,lambda_1"));
    assert!(lines.next().unwrap().starts_with("0,"));
}
