use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn qgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgs"))
        .args(args)
        .output()
        .expect("run qgs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn convert_golden() {
    let o = qgs(&[
        "convert", "--alpha", "0", "--beta", "2", "--gamma", "0", "--to", "b",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a=0.5 d=0.5 c=-0.5\n");
    let o = qgs(&[
        "convert", "--a", "0.5", "--d", "0.5", "--c", "-0.5", "--to", "a",
    ]);
    assert_eq!(stdout(&o), "alpha=0 beta=2 gamma=0\n");
}

#[test]
fn convert_without_b_form_fails_numerically() {
    let o = qgs(&[
        "convert", "--alpha", "1", "--beta", "0", "--gamma", "0", "--to", "b",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validation_exit_codes() {
    let o = qgs(&["validate", "--tree", &data("three_edge.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("valid\n"));
    let o = qgs(&["validate", "--tree", &data("invalid.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("violation"));
    let o = qgs(&[
        "reduce",
        "--tree",
        &data("sparse_delta.json"),
        "--max-generation",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reduce_output_parses_back() {
    let o = qgs(&["reduce", "--tree", &data("three_edge.json")]);
    assert!(o.status.success());
    let probs: Vec<qgs::reduction::HalflineProblem> = serde_json::from_slice(&o.stdout).unwrap();
    // L_0 plus one problem per eigenphase of U_1 and U_2
    assert_eq!(probs.len(), 4);
    assert_eq!(
        probs.iter().map(|p| p.multiplicity).collect::<Vec<_>>(),
        vec![1, 1, 1, 3]
    );
}

#[test]
fn output_is_deterministic() {
    let tree = data("three_edge.json");
    let sparse = data("sparse_delta.json");
    let (h1, h2) = (data("h1.json"), data("h2.json"));
    let runs: [Vec<&str>; 6] = [
        vec!["reduce", "--tree", &tree],
        vec!["mfun", "--tree", &tree, "--kappa-range", "1:5:9"],
        vec!["eig", "--tree", &tree, "--cutoff", "4", "--window", "0:30"],
        vec![
            "scan",
            "--tree",
            &sparse,
            "--problem",
            "0",
            "--energy-range",
            "0.5:5:10",
        ],
        vec!["distance", "--h1", &h1, "--h2", &h2],
        vec!["check-theorem", "--tree", &sparse],
    ];
    for args in &runs {
        let a = qgs(args);
        let b = qgs(args);
        assert!(
            a.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let sparse = data("sparse_delta.json");
    let args = ["scan", "--tree", &sparse, "--energy-range", "0.5:8:40"];
    let one = Command::new(env!("CARGO_BIN_EXE_qgs"))
        .args(args)
        .env("QGS_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_qgs"))
        .args(args)
        .env("QGS_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn theorem_verdict_for_sparse_delta_tree() {
    let o = qgs(&["check-theorem", "--tree", &data("sparse_delta.json")]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"]["verdict"], "EmptyAcPredicted");
}

#[test]
fn output_file_option() {
    let dir = std::env::temp_dir().join(format!("qgs-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.txt");
    let o = qgs(&[
        "convert",
        "--alpha",
        "0",
        "--beta",
        "2",
        "--gamma",
        "0",
        "--to",
        "b",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "a=0.5 d=0.5 c=-0.5\n"
    );
    std::fs::remove_dir_all(&dir).unwrap();
}
