use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sampled-eigen"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap().trim_end().to_string()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn header_and_rows(out: &Output) -> (String, usize) {
    let text = stdout(out);
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    (header, lines.count())
}

fn synth_matrix(dir: &Path) -> PathBuf {
    let path = dir.join("m.mtx");
    let out = run(&["synth", "--n", "30", "--spectrum", "1,0.5", "--output", path.to_str().unwrap()]);
    assert_eq!(header_and_rows(&out), (golden("synth.csv"), 1));
    path
}

#[test]
fn every_subcommand_has_the_golden_header() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth_matrix(dir.path());
    let m = m.to_str().unwrap();
    let cases: [(&str, Vec<&str>, usize); 7] = [
        ("bounds.csv", vec!["bounds", "--input", m, "--p", "0.3"], 1),
        ("estimate.csv", vec!["estimate", "--input", m, "--p", "0.5", "--samples", "4", "--truth"], 1),
        ("sweep.csv", vec!["sweep", "--input", m, "--p-grid", "0.5,1", "--samples", "4"], 2),
        (
            "sweep_counts.csv",
            vec!["sweep", "--input", m, "--counts", "1,2,4", "--p", "0.5"],
            3,
        ),
        (
            "pagerank_sweep.csv",
            vec!["pagerank-sweep", "--nodes", "30", "--p-grid", "0.5,1", "--samples", "3"],
            2,
        ),
        ("blowup.csv", vec!["blowup", "--n-grid", "128,256", "--draws", "2"], 4),
        ("speedup.csv", vec!["speedup", "--n", "60", "--p-grid", "1,0.5"], 2),
    ];
    for (name, args, rows) in cases {
        assert_eq!(header_and_rows(&run(&args)), (golden(name), rows), "{name}");
    }
}

#[test]
fn seeded_runs_repeat_exactly() {
    let args = ["--seed", "9", "sweep", "--n", "40", "--p-grid", "0.3,0.6", "--samples", "5"];
    assert_eq!(stdout(&run(&args)), stdout(&run(&args)));
    let other = ["--seed", "10", "sweep", "--n", "40", "--p-grid", "0.3,0.6", "--samples", "5"];
    assert_ne!(stdout(&run(&args)), stdout(&run(&other)));
}

#[test]
fn json_output_matches_csv_fields() {
    let out = run(&["--out-format", "json", "bounds", "--n", "30", "--p", "0.2"]);
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mut keys: Vec<&str> = rows[0].as_object().unwrap().keys().map(String::as_str).collect();
    let header = golden("bounds.csv");
    let mut expected: Vec<&str> = header.split(',').collect();
    keys.sort_unstable();
    expected.sort_unstable();
    assert_eq!(keys, expected);
}

#[test]
fn blowup_writes_per_draw_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    let out = run(&["blowup", "--n-grid", "128", "--draws", "3", "--csv", path.to_str().unwrap()]);
    let printed = stdout(&out);
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written.lines().next().unwrap(), golden("blowup.csv"));
    assert_eq!(written.lines().count(), 4);
    assert_eq!(printed, written);
}

#[test]
fn pagerank_reads_an_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let gen = run(&["gen-graph", "--nodes", "40", "--output", path.to_str().unwrap()]);
    assert!(gen.status.success());
    let out = run(&["pagerank-sweep", "--graph", path.to_str().unwrap(), "--p-grid", "1", "--samples", "2"]);
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "1.0");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Usage errors.
    assert_eq!(run(&["bounds", "--n", "30"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));

    // Malformed inputs.
    let bad_mtx = dir.path().join("bad.mtx");
    std::fs::write(&bad_mtx, "%%MatrixMarket matrix array real symmetric\n2 2\n1.0\nx\n1.0\n").unwrap();
    let out = run(&["estimate", "--input", bad_mtx.to_str().unwrap(), "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let bad_graph = dir.path().join("bad.txt");
    std::fs::write(&bad_graph, "0 1\n1 two\n").unwrap();
    let out = run(&["pagerank-sweep", "--graph", bad_graph.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Missing file.
    let missing = dir.path().join("missing.mtx");
    assert_eq!(run(&["estimate", "--input", missing.to_str().unwrap(), "--p", "0.5"]).status.code(), Some(1));

    // Infeasible requests.
    assert_eq!(run(&["bounds", "--n", "30", "--p", "1.5"]).status.code(), Some(4));
    assert_eq!(run(&["sweep", "--n", "20", "--supports", "1,1", "--spectrum", "1,0.5"]).status.code(), Some(4));
    assert_eq!(run(&["speedup", "--n", "20", "--reps", "2"]).status.code(), Some(4));
}
