use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;
use walras_miso::coordination::expected_iterations;
use walras_miso::report::parse_csv_rows;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walras-miso"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# walras-miso "), "missing header in {}", path.display());
    assert!(!text.contains('\r'));
    parse_csv_rows(&text)
}

#[test]
fn region_row_counts_and_verification() {
    let dir = tempdir().unwrap();
    ok(&["region", "--snr-db", "0", "--samples", "200", "--verify"], dir.path());
    let (cols, grid) = table(&dir.path().join("region_grid.csv"));
    assert_eq!(cols, ["lambda1", "lambda2", "phi1", "phi2"]);
    assert_eq!(grid.len(), 40_000);
    let (cols, curve) = table(&dir.path().join("region_curve.csv"));
    assert_eq!(cols, ["x22", "x11", "x21", "x12", "phi1", "phi2", "residual"]);
    assert_eq!(curve.len(), 1000);
}

#[test]
fn curve_points_are_undominated_by_grid() {
    let dir = tempdir().unwrap();
    ok(&["region", "--snr-db", "5", "--seed", "9", "--samples", "60"], dir.path());
    let (_, grid) = table(&dir.path().join("region_grid.csv"));
    let (_, curve) = table(&dir.path().join("region_curve.csv"));
    let grid: Vec<(f64, f64)> = grid.iter().map(|r| (num(&r[2]), num(&r[3]))).collect();
    for r in &curve {
        let (c1, c2) = (num(&r[4]), num(&r[5]));
        let beaten = grid
            .iter()
            .any(|&(g1, g2)| g1 > c1 * (1.0 + 1e-9) && g2 > c2 * (1.0 + 1e-9));
        assert!(!beaten, "curve point ({c1}, {c2}) dominated");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    for cmd in ["region", "walras", "tatonnement", "compare"] {
        let args = [cmd, "--seed", "42", "--count", "4", "--samples", "50"];
        ok(&args, a.path());
        ok(&args, b.path());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn fixture_round_trip_through_gen() {
    let dir = tempdir().unwrap();
    ok(&["gen", "--seed", "3", "--count", "2", "--snr-db", "-10"], dir.path());
    let fixture = dir.path().join("channels.json");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&fixture).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], "gen");
    assert_eq!(doc["channels"].as_array().unwrap().len(), 2);

    // reading the fixture reproduces the generated run exactly
    let from_file = tempdir().unwrap();
    let generated = tempdir().unwrap();
    let fixture_arg = fixture.to_str().unwrap();
    ok(&["walras", "--input", fixture_arg, "--channel", "1"], from_file.path());
    ok(&["walras", "--seed", "3", "--count", "2", "--snr-db", "-10", "--channel", "1"], generated.path());
    let report = |d: &Path| -> Value { serde_json::from_str(&fs::read_to_string(d.join("walras.json")).unwrap()).unwrap() };
    let (mut x, mut y) = (report(from_file.path()), report(generated.path()));
    x.as_object_mut().unwrap().remove("meta");
    y.as_object_mut().unwrap().remove("meta");
    assert_eq!(x, y);
}

#[test]
fn walras_report_and_budget_line() {
    let dir = tempdir().unwrap();
    ok(&["walras", "--seed", "11", "--samples", "40"], dir.path());
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("walras.json")).unwrap()).unwrap();
    let beta = report["beta_star"].as_f64().unwrap();
    assert!(report["beta_lo"].as_f64().unwrap() < beta && beta < report["beta_hi"].as_f64().unwrap());
    assert!(report["excess_demand"]["good1"].as_f64().unwrap().abs() <= 1e-9);
    assert!(report["excess_demand"]["good2"].as_f64().unwrap().abs() <= 1e-9);
    for key in ["allocation", "sinr", "nash", "polynomial"] {
        assert!(report[key].is_object(), "missing {key}");
    }

    let (cols, rows) = table(&dir.path().join("walras_traces.csv"));
    assert_eq!(cols, ["trace", "consumer", "phi", "own", "other", "lambda1", "lambda2"]);
    for trace in ["nash_level", "walras_level", "budget"] {
        assert!(rows.iter().any(|r| r[0] == trace), "no {trace} rows");
    }
    // consumer 1's budget line ends at its endowment (lambda_1^mrt, 0)
    let budget1: Vec<_> = rows.iter().filter(|r| r[0] == "budget" && r[1] == "1").collect();
    let last = budget1.last().unwrap();
    assert_eq!(num(&last[4]), 0.0);
    let first_walras1 = rows.iter().find(|r| r[0] == "nash_level" && r[1] == "1").unwrap();
    let l2_mrt = num(&first_walras1[6]) + num(&first_walras1[4]);
    assert!((num(&last[6]) - l2_mrt).abs() <= 1e-12);
    // the slope between consecutive budget points is -beta
    let (a, b) = (&budget1[0], &budget1[1]);
    let slope = (num(&b[4]) - num(&a[4])) / (num(&b[3]) - num(&a[3]));
    assert!((slope + beta).abs() <= 1e-9 * beta);
}

#[test]
fn tatonnement_trace_and_log() {
    let dir = tempdir().unwrap();
    let eps = 1e-6;
    ok(&["tatonnement", "--seed", "5", "--epsilon", "1e-6", "--verify"], dir.path());
    let (cols, rows) = table(&dir.path().join("tatonnement_trace.csv"));
    assert_eq!(cols, ["iteration", "beta", "beta_lo", "beta_hi", "z1", "beta_star"]);
    let first = &rows[0];
    let last = rows.last().unwrap();
    assert!(num(&last[3]) - num(&last[2]) <= eps);
    assert!((num(&last[1]) - num(&last[5])).abs() <= eps);
    let n = expected_iterations(num(&first[2]), num(&first[3]), eps);
    assert_eq!(rows.len(), n + 1);

    let log = fs::read_to_string(dir.path().join("tatonnement_messages.jsonl")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert!(lines[0].contains("\"meta\""));
    assert_eq!(lines.len() - 1, 3 * n + 2);
    let messages = walras_miso::coordination::from_jsonl(&log).unwrap();
    assert_eq!(messages.len(), 3 * n + 2);
}

#[test]
fn compare_summary_over_channels() {
    let dir = tempdir().unwrap();
    ok(&["compare", "--count", "20", "--seed", "8", "--samples", "300"], dir.path());
    let (cols, rows) = table(&dir.path().join("compare.csv"));
    assert_eq!(cols[0], "channel");
    assert_eq!(&cols[1..], ["label", "lambda1", "lambda2", "phi1", "phi2", "rate1", "rate2", "in_core"]);
    assert_eq!(rows.len(), 20 * 6);
    for r in rows.iter().filter(|r| r[1] == "walras" || r[1] == "nash") {
        assert_eq!(r[8], "true", "{} not in core on channel {}", r[1], r[0]);
    }
    let (_, summary) = table(&dir.path().join("compare_summary.csv"));
    let walras = summary.iter().find(|r| r[0] == "walras").unwrap();
    assert_eq!(num(&walras[1]), 1.0);
    assert_eq!(walras[3], "20");
}

#[test]
fn json_format_carries_meta() {
    let dir = tempdir().unwrap();
    ok(&["bargain", "--format", "json", "--samples", "100"], dir.path());
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bargain_points.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["command"], "bargain");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);
    assert_eq!(doc["rows"][0]["label"], "nash");
}

#[test]
fn exit_codes() {
    let dir = tempdir().unwrap();
    let code = |args: &[&str]| run(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["region", "--samples", "1"]), 2);
    assert_eq!(code(&["walras", "--epsilon", "-1"]), 2);
    assert_eq!(code(&["walras", "--channel", "3"]), 2);
    assert_eq!(code(&["launch"]), 2);
    assert_eq!(code(&["walras", "--input", "/definitely/not/here.json"]), 5);

    // two identical links: the interference channels are parallel to the direct ones
    let degenerate = dir.path().join("degenerate.json");
    fs::write(
        &degenerate,
        r#"{"n_antennas":2,"sigma2":1.0,"h11":[[1,0],[0,0]],"h12":[[1,0],[0,0]],"h21":[[0,0],[1,0]],"h22":[[0,0],[1,0]]}"#,
    )
    .unwrap();
    let o = run(&["walras", "--input", degenerate.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());

    let blocked = dir.path().join("file");
    fs::write(&blocked, "x").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_walras-miso"))
        .args(["gen", "--out"])
        .arg(blocked.join("sub"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_walras-miso"))
        .args(["compare", "--count", "3", "--samples", "50", "--out"])
        .arg(dir.path())
        .env("WALRAS_MISO_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_walras-miso"))
        .args(["gen", "--out"])
        .arg(dir.path())
        .env("WALRAS_MISO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
