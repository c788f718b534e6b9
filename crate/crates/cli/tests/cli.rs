use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dtsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtsp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn batch_outputs_are_byte_identical_across_invocations() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("one"), tmp.path().join("two")];
    for d in &dirs {
        let out = dtsp(&[
            "batch",
            "--random-n",
            "12",
            "--iters",
            "15",
            "--runs",
            "4",
            "--seed-base",
            "7",
            "--solver",
            "aco",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let mut names: Vec<_> = fs::read_dir(&dirs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "runs.csv",
            "summary.csv",
            "trace_10.csv",
            "trace_7.csv",
            "trace_8.csv",
            "trace_9.csv"
        ]
    );
    for n in &names {
        assert_eq!(
            fs::read(dirs[0].join(n)).unwrap(),
            fs::read(dirs[1].join(n)).unwrap(),
            "{n}"
        );
    }
    let summary = read(&dirs[0], "summary.csv");
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "solver,runs,average,best,worst");
    assert!(lines[1].starts_with("aco,4,"));
    assert_eq!(read(&dirs[0], "trace_7.csv").lines().count(), 16);
}

#[test]
fn config_file_and_flags_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.conf");
    fs::write(
        &cfg,
        "[experiment]\nrandom_n = 9\nruns = 2\nsolver = hybrid\n\n[aco]\niters = 10\nbeta = 3\n\n[hybrid]\nt = 0.2\n",
    )
    .unwrap();
    let out_dir = tmp.path().join("o");
    let out = dtsp(&[
        "batch",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(read(&out_dir, "summary.csv").contains("hybrid,3,"));
    assert_eq!(read(&out_dir, "trace_2.csv").lines().count(), 11);
}

#[test]
fn configuration_mistakes_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "colour = blue\n").unwrap();
    for args in [
        vec!["batch", "--config", bad.to_str().unwrap()],
        vec!["batch", "--alpha", "lots"],
        vec!["solve", "--rho", "1.5"],
        vec!["solve", "--solver", "genetic"],
        vec!["batch", "--runs", "0"],
        vec!["sweep-t", "--t-values", "0.1,x"],
        vec!["batch", "--no-such-flag"],
    ] {
        let out = dtsp(&args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn runtime_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let events = tmp.path().join("ev.txt");
    // removing a city that does not exist only fails once the run reaches it
    fs::write(&events, "2 remove 999\n").unwrap();
    let out = dtsp(&[
        "solve",
        "--random-n",
        "8",
        "--iters",
        "5",
        "--events",
        events.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = dtsp(&[
        "solve",
        "--instance",
        tmp.path().join("missing.tsp").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_prints_a_full_tour() {
    let out = dtsp(&[
        "solve",
        "--random-n",
        "10",
        "--iters",
        "10",
        "--seed",
        "4",
        "--solver",
        "aco",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let tour = text.lines().find_map(|l| l.strip_prefix("tour ")).unwrap();
    let mut ids: Vec<u32> = tour.split(' ').map(|v| v.parse().unwrap()).collect();
    ids.sort();
    assert_eq!(ids, (0..10).collect::<Vec<_>>());
    assert!(text.contains("seed 4"));
}

#[test]
fn compare_writes_both_sides_and_the_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("cmp");
    let out = dtsp(&[
        "compare",
        "--random-n",
        "12",
        "--iters",
        "15",
        "--runs",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("per-seed: A wins"));
    let csv = read(&out_dir, "comparison.csv");
    assert_eq!(csv.lines().next(), Some("seed,a_length,b_length,winner"));
    assert_eq!(csv.lines().count(), 4);
    assert!(out_dir.join("a/summary.csv").exists());
    assert!(out_dir.join("b/trace_2.csv").exists());
    let summary = read(&out_dir, "summary.csv");
    assert!(summary.contains("\naco,3,") && summary.contains("\nhybrid,3,"));
}

#[test]
fn compare_layers_side_specific_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.conf");
    let b = tmp.path().join("b.conf");
    fs::write(&a, "t = 0.1\n").unwrap();
    fs::write(&b, "t = 0.8\n").unwrap();
    let out = dtsp(&[
        "compare",
        "--random-n",
        "10",
        "--iters",
        "8",
        "--runs",
        "2",
        "--solver-a",
        "hybrid",
        "--config-a",
        a.to_str().unwrap(),
        "--config-b",
        b.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    // a side config that changes the instance is rejected
    fs::write(&b, "random_n = 11\n").unwrap();
    let out = dtsp(&[
        "compare",
        "--iters",
        "5",
        "--runs",
        "2",
        "--config-b",
        b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("sw");
    let out = dtsp(&[
        "sweep-t",
        "--random-n",
        "10",
        "--iters",
        "8",
        "--runs",
        "2",
        "--t-values",
        "0.1,0.4,0.8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = read(&out_dir, "sweep_t.csv");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "t,runs,average,best,worst,mean_iterations_to_best");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0.1,2,") && rows[3].starts_with("0.8,2,"));
    for t in ["0.1", "0.4", "0.8"] {
        assert!(out_dir.join(format!("t_{t}/summary.csv")).exists());
    }
}
