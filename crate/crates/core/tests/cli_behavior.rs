//! Behavior of the installed binary: exit codes, file handling, and input
//! validation, exercised through real process spawns.

mod common;

use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (Option<i32>, String) {
    run_in(args, None)
}

fn run_in(args: &[&str], env: Option<(&str, &str)>) -> (Option<i32>, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sr-sampler"));
    cmd.args(args);
    if let Some((key, value)) = env {
        cmd.env(key, value);
    }
    let output = cmd.output().expect("binary spawn");
    (
        output.status.code(),
        String::from_utf8(output.stdout).expect("utf8 output"),
    )
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn usage_and_help() {
    let (code, text) = run(&["--help"]);
    assert_eq!(code, Some(0));
    for sub in [
        "sample-dpp",
        "sample-tree",
        "estimate-marginals",
        "verify",
        "mix-curve",
        "concentration",
        "bench",
    ] {
        assert!(text.contains(sub), "help misses {sub}");
    }

    assert_eq!(run(&[]).0, Some(64));
    assert_eq!(run(&["frobnicate"]).0, Some(64));
    assert_eq!(run(&["sample-dpp", "--bogus"]).0, Some(64));
    assert_eq!(run(&["verify", "--tol", "not-a-number"]).0, Some(64));
    assert_eq!(run(&["sample-dpp", "--rounds", "-3"]).0, Some(64));
}

#[test]
fn matrix_market_kernel_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mm = write(
        dir.path(),
        "kernel.mtx",
        "%%MatrixMarket matrix coordinate real symmetric\n\
         % 3x3 diagonal-dominant kernel\n\
         3 3 4\n\
         1 1 2.0\n\
         2 2 1.0\n\
         3 3 0.5\n\
         2 1 0.25\n",
    );
    let (code, text) = run(&[
        "sample-dpp", "--kernel", &mm, "--k", "2", "--samples", "40", "--seed", "3",
    ]);
    assert_eq!(code, Some(0), "{text}");
    assert_eq!(text.lines().count(), 40);
    for line in text.lines() {
        let ids: Vec<usize> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(ids.len(), 2);
        assert!(ids[0] < ids[1] && ids[1] < 3);
    }
}

#[test]
fn malformed_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let ragged = write(dir.path(), "ragged.csv", "1.0,0.0\n0.0\n");
    let asymmetric = write(dir.path(), "asym.csv", "1.0,0.5\n0.4,1.0\n");
    let indefinite = write(dir.path(), "indef.csv", "0.0,1.0\n1.0,0.0\n");
    let loop_graph = write(dir.path(), "loop.txt", "3 3\n0 0\n0 1\n1 2\n");
    let negative = write(dir.path(), "neg.txt", "3 2\n0 1 -1\n1 2\n");
    let split = write(dir.path(), "split.txt", "4 2\n0 1\n2 3\n");

    for (args, hint) in [
        (vec!["sample-dpp", "--kernel", ragged.as_str(), "--k", "1"], "line"),
        (vec!["sample-dpp", "--kernel", asymmetric.as_str(), "--k", "1"], "symmetric"),
        (vec!["sample-dpp", "--kernel", indefinite.as_str(), "--k", "1"], "positive semidefinite"),
        (vec!["sample-tree", "--graph", loop_graph.as_str()], "line"),
        (vec!["sample-tree", "--graph", negative.as_str()], "weight"),
        (vec!["sample-tree", "--graph", split.as_str()], "connected"),
        (vec!["sample-dpp", "--kernel", "/missing.csv", "--k", "1"], "error"),
    ] {
        let (code, text) = run(&args);
        assert_eq!(code, Some(1), "{args:?} -> {text}");
        assert!(text.starts_with("error:"), "{args:?} -> {text}");
        assert!(
            text.to_lowercase().contains(hint),
            "{args:?}: expected {hint:?} in {text:?}"
        );
    }

    let identity = write(dir.path(), "id.csv", "1.0,0.0\n0.0,1.0\n");
    // k beyond the ground size is a model error, not a crash.
    let (code, text) = run(&["sample-dpp", "--kernel", &identity, "--k", "3"]);
    assert_eq!(code, Some(1));
    assert!(text.contains("k=3"), "{text}");

    // A rank-deficient kernel reports the rank shortfall up front.
    let rank2 = write(dir.path(), "rank2.csv", "1.0,0.0,0.0\n0.0,1.0,0.0\n0.0,0.0,0.0\n");
    let (code, text) = run(&["sample-dpp", "--kernel", &rank2, "--k", "3"]);
    assert_eq!(code, Some(1));
    assert!(text.contains("rank 2"), "{text}");

    let (code, _) = run_in(
        &["sample-dpp", "--kernel", &identity, "--k", "1"],
        Some(("SR_SAMPLER_THREADS", "many")),
    );
    assert_eq!(code, Some(1));
}

#[test]
fn verify_exit_codes_and_out_files() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = write(dir.path(), "id.csv", "1.0,0.0,0.0\n0.0,1.0,0.0\n0.0,0.0,1.0\n");

    let report_path = dir.path().join("report.txt");
    let (code, stdout) = run(&[
        "verify", "--kernel", &kernel, "--k", "1", "--samples", "30000",
        "--out", report_path.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0), "{stdout}");
    assert!(stdout.is_empty());
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("samples=30000"), "{report}");
    assert!(report.contains("status=pass"), "{report}");

    // An unattainable tolerance must flip the exit code to 2.
    let (code, text) = run(&[
        "verify", "--kernel", &kernel, "--k", "1", "--samples", "2000", "--tol", "0",
    ]);
    assert_eq!(code, Some(2), "{text}");
    assert!(text.contains("status=fail"));

    // Too few samples for a TV estimate is an input error, not a fail.
    let (code, _) = run(&[
        "verify", "--kernel", &kernel, "--k", "1", "--samples", "10",
    ]);
    assert_eq!(code, Some(1));
}

#[test]
fn marginal_files_flow_through_sampling() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = write(
        dir.path(),
        "kernel.csv",
        &sr_sampler::io::write_kernel_csv(&common::seeded_kernel(9, 41)),
    );

    let q_path = dir.path().join("q.txt");
    let (code, _) = run(&[
        "estimate-marginals", "--kernel", &kernel, "--k", "2", "--seed", "2",
        "--out", q_path.to_str().unwrap(),
    ]);
    assert_eq!(code, Some(0));
    let q_text = std::fs::read_to_string(&q_path).unwrap();
    assert_eq!(q_text.lines().count(), 9);

    let (code, text) = run(&[
        "sample-dpp", "--kernel", &kernel, "--k", "2", "--samples", "25",
        "--marginals", q_path.to_str().unwrap(), "--seed", "4",
    ]);
    assert_eq!(code, Some(0), "{text}");
    assert_eq!(text.lines().count(), 25);

    let short = write(dir.path(), "short.txt", "0.5\n0.5\n");
    let (code, text) = run(&[
        "sample-dpp", "--kernel", &kernel, "--k", "2", "--samples", "5",
        "--marginals", short.as_str(),
    ]);
    assert_eq!(code, Some(1));
    assert!(text.contains("9 elements"), "{text}");
}

#[test]
fn tree_multigraph_sampling_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    // Parallel 0-3 edges plus a triangle chord; 0-indexed ids 0..=6.
    let graph = write(
        dir.path(),
        "multi.txt",
        "4 7\n0 1 1.5\n1 2 0.75\n2 3 1.25\n0 3 2\n0 3 1\n1 3 0.5\n0 2 1.75\n",
    );
    let (code, text) = run(&[
        "sample-tree", "--graph", &graph, "--samples", "60", "--seed", "12",
    ]);
    assert_eq!(code, Some(0), "{text}");
    assert_eq!(text.lines().count(), 60);
    for line in text.lines() {
        let ids: Vec<usize> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(ids.len(), 3, "spanning trees of 4 vertices have 3 edges");
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        // Never both parallel 0-3 edges (ids 3 and 4) in one tree.
        assert!(!(ids.contains(&3) && ids.contains(&4)), "{line}");
    }
}
