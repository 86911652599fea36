use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hoopruns::gof::LengthFrequencyTable;

fn hoopruns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoopruns"))
        .args(args)
        .output()
        .expect("run hoopruns")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn expectation_line(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("expectation\t"))
        .expect("expectation row")
        .parse()
        .unwrap()
}

#[test]
fn dist_reports_table_values() {
    for (total, reference) in [(100, 5.38), (50, 4.66)] {
        let out = hoopruns(&["dist", "--total", &total.to_string(), "--p-same", "0.38"]);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        assert!(text.starts_with("# convention:"));
        let e = expectation_line(&text);
        assert!((e - reference).abs() < 0.05, "{total}: {e}");
    }
}

#[test]
fn dist_json_matches_tsv() {
    let tsv = stdout(&hoopruns(&[
        "dist", "--total", "75", "--p-same", "0.38", "--m", "6",
    ]));
    let json = stdout(&hoopruns(&[
        "dist", "--total", "75", "--p-same", "0.38", "--format", "json",
    ]));
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let e = doc["expectation"].as_f64().unwrap();
    assert!((expectation_line(&tsv) - e).abs() < 0.005);
    let pmf = doc["pmf"].as_array().unwrap();
    let total: f64 = pmf.iter().map(|r| r["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(tsv.contains("at_least_6\t"));
}

#[test]
fn exit_codes() {
    assert_eq!(hoopruns(&[]).status.code(), Some(1));
    assert_eq!(hoopruns(&["dist", "--total", "10"]).status.code(), Some(1));
    assert_eq!(hoopruns(&["--help"]).status.code(), Some(0));
    assert_eq!(
        hoopruns(&["dist", "--total", "10", "--p-same", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        hoopruns(&["analyze", "/nonexistent/games.csv"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "game_id,date,home_team,away_team,period,clock_seconds_remaining,team,event_type,points\n\
         g,d,H,V,1,700,X,FG2,2\n",
    )
    .unwrap();
    let out = hoopruns(&["analyze", path_str(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
    assert_eq!(hoopruns(&["validate"]).status.code(), Some(0));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = hoopruns(&[
            "simulate",
            "--games",
            "40",
            "--seed",
            "9",
            "--output",
            path_str(p),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    hoopruns(&[
        "simulate",
        "--games",
        "40",
        "--seed",
        "10",
        "--output",
        path_str(&c),
    ]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let season = dir.path().join("season.json");
    let out = hoopruns(&[
        "simulate",
        "--games",
        "300",
        "--seed",
        "4",
        "--output",
        path_str(&season),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let tsv_table = dir.path().join("table.tsv");
    let json_table = dir.path().join("table.json");
    let out = hoopruns(&[
        "analyze",
        path_str(&season),
        "--table-out",
        path_str(&tsv_table),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("300 analyzed"));
    assert!(text.contains("# chi_square bins-1: statistic"));
    let out = hoopruns(&[
        "analyze",
        path_str(&season),
        "--format",
        "json",
        "--table-out",
        path_str(&json_table),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let from_tsv =
        LengthFrequencyTable::from_tsv(fs::read(&tsv_table).unwrap().as_slice()).unwrap();
    let from_json: LengthFrequencyTable =
        serde_json::from_slice(&fs::read(&json_table).unwrap()).unwrap();
    assert_eq!(from_tsv.rows.len(), from_json.rows.len());
    for (t, j) in from_tsv.rows.iter().zip(&from_json.rows) {
        assert_eq!(t.bin, j.bin);
        assert_eq!(t.observed, j.observed);
        assert!((t.expected - j.expected).abs() <= 0.005, "{t:?} vs {j:?}");
    }
    assert_eq!(from_json.total_observed(), 300);

    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let p = doc["report"]["p_same"].as_f64().unwrap();
    assert!((p - 0.38).abs() < 0.02, "{p}");
}

#[test]
fn analyze_single_game_of_one_team() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    fs::write(
        &path,
        "game_id,date,home_team,away_team,period,clock_seconds_remaining,team,event_type,points\n\
         g,d,H,V,1,700,H,FG2,2\n\
         g,d,H,V,1,650,H,FG3,3\n\
         g,d,H,V,2,100,H,FG2,2\n",
    )
    .unwrap();
    let table = dir.path().join("t.tsv");
    let out = hoopruns(&["analyze", path_str(&path), "--table-out", path_str(&table)]);
    assert_eq!(out.status.code(), Some(0));
    let t = LengthFrequencyTable::from_tsv(fs::read(&table).unwrap().as_slice()).unwrap();
    let observed: Vec<_> = t
        .rows
        .iter()
        .filter(|r| r.observed > 0)
        .map(|r| (r.bin.lo, r.observed))
        .collect();
    assert_eq!(observed, [(3, 1)]);
    assert!(stdout(&out).contains("not available"));
}

#[test]
fn analyze_sample_fixture_options() {
    let games = fixture("sample_games.csv");
    let stats = fixture("sample_stats.csv");
    let out = hoopruns(&[
        "analyze",
        &games,
        "--per",
        "half",
        "--matched-only",
        "--stats",
        &stats,
        "--exclude-ot",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("2 loaded, 1 analyzed"));
    // --matched-only needs team stats
    assert_eq!(
        hoopruns(&["analyze", &games, "--matched-only"])
            .status
            .code(),
        Some(1)
    );
}
