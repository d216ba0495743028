//! CLI behavior: exit codes, error objects, formats, strict mode.

use std::path::Path;
use std::process::{Command, Output};

use twoproj::cmatrix::CMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twoproj"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_quarter_pair(dir: &Path) -> (String, String) {
    let r3 = 3.0f64.sqrt();
    let p = CMatrix::diag_real(&[1.0, 0.0]);
    let q = CMatrix::from_real(2, 2, &[0.25, r3 / 4.0, r3 / 4.0, 0.75]).unwrap();
    let p_path = dir.join("m.p.json");
    let q_path = dir.join("m.q.json");
    p.write_json(&p_path).unwrap();
    q.write_json(&q_path).unwrap();
    (
        p_path.to_str().unwrap().to_string(),
        q_path.to_str().unwrap().to_string(),
    )
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["analyze", "--p", "/nonexistent/a.json", "--q", "/nonexistent/b.json"]);
    assert_eq!(out.status.code(), Some(2));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["error"]["kind"], "io");
}

#[test]
fn malformed_json_exits_3_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"rows\": 2, \"cols\": 2, \"re\": [[1.0, 0.0],\n [0.0").unwrap();
    let out = run(&["analyze", "--p", bad.to_str().unwrap(), "--q", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["error"]["kind"], "parse");
    let message = body["error"]["message"].as_str().unwrap();
    assert!(message.contains("line"), "no position in: {message}");
}

#[test]
fn non_projection_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let almost = dir.path().join("almost.json");
    CMatrix::diag_real(&[1.0, 0.4]).write_json(&almost).unwrap();
    let out = run(&["analyze", "--p", almost.to_str().unwrap(), "--q", almost.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["error"]["kind"], "not-a-projection");
    assert!(body["error"]["message"].as_str().unwrap().contains("residual"));
}

#[test]
fn word_parse_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = write_quarter_pair(dir.path());
    let out = run(&["dixmier", "--word", "P*Q + %", "--p", &p, "--q", &q]);
    assert_eq!(out.status.code(), Some(3));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let message = body["error"]["message"].as_str().unwrap();
    assert!(message.contains("byte 6"), "position missing in: {message}");
}

#[test]
fn analyze_payload_has_expected_values() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = write_quarter_pair(dir.path());
    let out = run(&["analyze", "--p", &p, "--q", &q]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let body: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(body["payload"]["halmos"]["dg"], 1);
    assert_eq!(body["payload"]["halmos"]["s"][0], 0.25);
    assert_eq!(body["payload"]["certificate"]["gap_to_one"], 0.75);
}

#[test]
fn lattice_report_identical_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p_path = dir.path().join("p.json");
    CMatrix::diag_real(&[1.0, 1.0, 0.0]).write_json(&p_path).unwrap();
    let p = p_path.to_str().unwrap();
    let out = run(&["lattice", "--p", p, "--q", p]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["payload"]["meet_rank"], body["payload"]["join_rank"]);
    assert_eq!(body["payload"]["s_spectrum"].as_array().unwrap().len(), 0);
}

#[test]
fn pair_prefix_resolves_files() {
    let dir = tempfile::tempdir().unwrap();
    write_quarter_pair(dir.path());
    let prefix = dir.path().join("m");
    let out = run(&["dixmier", "--word", "P*Q*P", "--pair", prefix.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(body["payload"]["rel_error"].as_f64().unwrap() <= 1e-12);
    assert!((body["payload"]["matrix_norm"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn family_csv_gap_column_matches_closed_form() {
    let out = run(&["family", "--family", "paper-l2", "--dims", "4,8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "dim,comm_norm,schatten_1,schatten_2,gap_to_one,rank_join,rank_ess_span,delta");
    for (line, n) in rows[1..].iter().zip([4.0f64, 8.0]) {
        let cells: Vec<&str> = line.split(',').collect();
        let gap: f64 = cells[4].parse().unwrap();
        assert!((gap - 1.0 / (n * n + 1.0)).abs() < 1e-12);
        let comm: f64 = cells[1].parse().unwrap();
        assert!((comm - 0.5).abs() < 1e-12);
    }
}

#[test]
fn family_json_format() {
    let out = run(&["--format", "json", "family", "--family", "orthogonal", "--dims", "4,8"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = body["payload"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["delta"], 0);
}

#[test]
fn unknown_family_fails_cleanly() {
    let out = run(&["family", "--family", "nope", "--dims", "4,8"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_rejected_for_json_only_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = write_quarter_pair(dir.path());
    let out = run(&["--format", "csv", "analyze", "--p", &p, "--q", &q]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn winding_expression_and_samples_file() {
    let out = run(&["winding", "--phi", "z^3", "--grid", "1024"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["payload"]["winding"], 3);

    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("phi.json");
    let values: Vec<[f64; 2]> = (0..256)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / 256.0;
            [(2.0 * t).cos(), (2.0 * t).sin()]
        })
        .collect();
    std::fs::write(&samples, serde_json::to_string(&values).unwrap()).unwrap();
    let arg = format!("@{}", samples.to_str().unwrap());
    let out = run(&["winding", "--phi", &arg]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["payload"]["winding"], 2);
}

#[test]
fn winding_vanishing_symbol_fails() {
    let out = run(&["winding", "--phi", "z - 1"]);
    assert_eq!(out.status.code(), Some(1));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["error"]["kind"], "symbol-vanishes");
}

#[test]
fn support_left_half_flags_left_grid() {
    let out = run(&["support", "--model", "diagonal", "--proj", "left-half", "--grid", "32", "--dims", "32,64"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let flagged = body["payload"]["flagged"].as_array().unwrap();
    assert!(!flagged.is_empty());
    let grid = body["payload"]["grid"].as_array().unwrap();
    for idx in flagged {
        let x = grid[idx.as_u64().unwrap() as usize].as_f64().unwrap();
        assert!(x < 0.5 + 2.5 / 32.0, "stray support point at {x}");
    }
}

#[test]
fn strict_escalates_normality_warning() {
    // At low degree caps the quotient-family commutator defect still grows
    // between the two sampled dims; --strict turns the warning into an error.
    let relaxed = run(&["support", "--model", "bergman", "--proj", "ideal-quotient:-1,1", "--dims", "15,30"]);
    assert!(relaxed.status.success());
    let body: serde_json::Value = serde_json::from_slice(&relaxed.stdout).unwrap();
    assert!(body["payload"]["warning"].is_string());

    let strict = run(&["--strict", "support", "--model", "bergman", "--proj", "ideal-quotient:-1,1", "--dims", "15,30"]);
    assert_eq!(strict.status.code(), Some(1));
    let body: serde_json::Value = serde_json::from_slice(&strict.stdout).unwrap();
    assert_eq!(body["error"]["kind"], "not-essentially-normal");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = run(&["--out", target.to_str().unwrap(), "winding", "--phi", "z"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(body["payload"]["winding"], 1);
}
