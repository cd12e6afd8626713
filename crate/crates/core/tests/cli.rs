use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ompn::cli::report::RunReport;
use ompn::instance::load_instance;

fn ompn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ompn"))
        .args(args)
        .env_remove("OMPN_SEED")
        .output()
        .expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ompn-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn generate_writes_reproducible_valid_files() {
    let dir = scratch("gen");
    let (a, b) = (dir.join("a.ompn.json"), dir.join("b.ompn.json"));
    for out in [&a, &b] {
        let o = ompn(&[
            "generate",
            "--n",
            "10",
            "--dim",
            "2",
            "--scenario",
            "1",
            "--p",
            "2",
            "--lambda",
            "median",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let inst = load_instance(&a).unwrap();
    assert_eq!((inst.n(), inst.p()), (10, 2));

    assert_eq!(ompn(&["generate", "--n", "10", "--scenario", "9"]).status.code(), Some(2));
    assert_eq!(ompn(&["generate", "--bogus"]).status.code(), Some(2));
    let explicit = ompn(&["generate", "--n", "3", "--lambda", "1,0.5,0.5"]);
    assert_eq!(explicit.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&explicit.stdout).contains("\"lambda\": ["));
}

#[test]
fn seed_comes_from_the_environment_unless_flagged() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_ompn"));
        c.args(["generate", "--n", "6"]).env_remove("OMPN_SEED");
        if let Some(e) = env {
            c.env("OMPN_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("5"), None), run(None, Some("5")));
    assert_ne!(run(Some("5"), None), run(None, None));
    assert_eq!(run(Some("5"), Some("9")), run(None, Some("9")));
}

#[test]
fn solve_reproduces_reference_values_and_reports_pass_evaluation() {
    let dir = scratch("solve");
    let report = dir.join("ex.run.json");
    let o = ompn(&[
        "solve",
        "--in",
        &data("example_3_5.ompn.json"),
        "--solver",
        "exact",
        "--out",
        s(&report),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let r = RunReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!((r.objective - 68.4751).abs() / 68.4751 < 1e-2);
    assert!(text(&o).contains("objective 68.5282"));

    let o = ompn(&["evaluate", "--in", &data("example_3_5.ompn.json"), "--solution", s(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(!text(&o).contains("FAIL"));

    let us = dir.join("us.run.json");
    let o = ompn(&["solve", "--in", "us49_s1_p2_center", "--solver", "exact", "--out", s(&us)]);
    assert_eq!(o.status.code(), Some(0));
    let r = RunReport::from_json(&std::fs::read_to_string(&us).unwrap()).unwrap();
    assert!((r.objective - 18.0278).abs() / 18.0278 < 1e-2);
    assert_eq!(
        ompn(&["evaluate", "--in", "us49_s1_p2_center", "--solution", s(&us)])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn evaluate_names_the_broken_invariant() {
    let dir = scratch("eval");
    let report = dir.join("r.run.json");
    let inst = data("example_3_5.ompn.json");
    assert_eq!(
        ompn(&["solve", "--in", &inst, "--solver", "h2", "--out", s(&report)])
            .status
            .code(),
        Some(0)
    );
    let mut r = RunReport::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let honest = r.objective;

    r.objective += 1.0;
    let tampered = dir.join("tampered.run.json");
    std::fs::write(&tampered, r.to_json()).unwrap();
    let o = ompn(&["evaluate", "--in", &inst, "--solution", s(&tampered)]);
    assert_eq!(o.status.code(), Some(2));
    let out = text(&o);
    assert!(out.contains("FAIL objective"), "{out}");
    assert!(out.contains(&format!("recomputed {honest:.10}")), "{out}");

    r.objective = honest;
    r.placements[0][0] += 50.0;
    let moved = dir.join("moved.run.json");
    std::fs::write(&moved, r.to_json()).unwrap();
    let o = ompn(&["evaluate", "--in", &inst, "--solution", s(&moved)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("FAIL placement_in_ball["));
}

#[test]
fn h1_without_sweeps_is_the_start_solution() {
    let dir = scratch("h1");
    let (h0, h1) = (dir.join("h0.json"), dir.join("h1.json"));
    assert_eq!(
        ompn(&["solve", "--in", "us49_s2_p3_centdian", "--solver", "h0", "--out", s(&h0)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        ompn(&[
            "solve",
            "--in",
            "us49_s2_p3_centdian",
            "--solver",
            "h1",
            "--it-max",
            "0",
            "--out",
            s(&h1)
        ])
        .status
        .code(),
        Some(0)
    );
    let a = RunReport::from_json(&std::fs::read_to_string(&h0).unwrap()).unwrap();
    let b = RunReport::from_json(&std::fs::read_to_string(&h1).unwrap()).unwrap();
    assert_eq!(
        (a.objective, &a.open, &a.placements, &a.assignment),
        (b.objective, &b.open, &b.placements, &b.assignment)
    );
}

#[test]
fn exit_codes_by_failure_kind() {
    let o = ompn(&[
        "solve",
        "--in",
        "us49_s1_p5_median",
        "--solver",
        "exact",
        "--subset-cap",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(text(&o).contains("h1/h2"));
    assert_eq!(ompn(&["solve", "--in", "/nonexistent/x.ompn.json"]).status.code(), Some(4));
    assert_eq!(
        ompn(&["solve", "--in", "example_3_5", "--solver", "h9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ompn(&["evaluate", "--in", "example_3_5", "--solution", "/nonexistent.run.json"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(ompn(&["info"]).status.code(), Some(0));
    assert!(text(&ompn(&["info", "--in", "us49_s1_p2_kcentrum"])).contains("open sets: 1176"));
}

#[test]
fn export_records_bounds_and_rejects_round_block_norms() {
    let dir = scratch("export");
    let model = dir.join("bep.conic.txt");
    let o = ompn(&["export", "--in", "example_3_5", "--formulation", "BEP", "--out", s(&model)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let body = std::fs::read_to_string(&model).unwrap();
    assert_eq!(body.lines().filter(|l| l.trim_start().starts_with("order_")).count(), 25);

    let strong = dir.join("strong.conic.txt");
    let o = ompn(&[
        "export",
        "--in",
        "example_3_5",
        "--formulation",
        "3I",
        "--strengthen",
        "--ub-from",
        "h0",
        "--out",
        s(&strong),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let body = std::fs::read_to_string(&strong).unwrap();
    assert!(
        body.lines().any(|l| l.starts_with("upper_bound ") && !l.ends_with(" inf")),
        "META lacks the bound"
    );

    let o = ompn(&["export", "--in", "example_3_5", "--formulation", "MILP_block"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("requires polyhedral norms"));

    let o = ompn(&["export", "--in", "example_3_5", "--formulation", "OT", "--format", "lp_text"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quick_bench_is_stable() {
    let dir = scratch("bench");
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    assert_eq!(
        ompn(&["bench", "--suite", "us49-quick", "--out", s(&a)]).status.code(),
        Some(0)
    );
    assert_eq!(
        ompn(&["--threads", "2", "bench", "--suite", "us49-quick", "--out", s(&b)])
            .status
            .code(),
        Some(0)
    );
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv, std::fs::read_to_string(&b).unwrap());
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let exact: f64 = f[col("exact")].parse().unwrap();
        let reference: f64 = f[col("reference")].parse().unwrap();
        let gap: f64 = f[col("gap_exact")].parse().unwrap();
        assert!((gap - (exact - reference) / reference).abs() < 1e-5, "{row}");
        assert!(gap.abs() < 1e-3, "{row}");
    }
}
