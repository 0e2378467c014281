mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use counterbalance::cli::Report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_counterbalance"))
}

fn snapshot_flags(year: i32) -> Vec<String> {
    let dir = common::data_dir().join("snapshot");
    vec![
        "--trade".into(),
        dir.join(format!("{year}/trade.csv")).display().to_string(),
        "--gdp".into(),
        dir.join(format!("{year}/gdp.csv")).display().to_string(),
        "--aggregate".into(),
        dir.join("aggregate.toml").display().to_string(),
    ]
}

fn run(args: &[&str], extra: &[String]) -> Output {
    bin().args(args).args(extra).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf8")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf8")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn toy(dir: &Path) -> (PathBuf, PathBuf) {
    // 0.2 of AAA's GDP goes to BBB, 0.4 of BBB's to AAA
    let trade = write(
        dir,
        "trade.csv",
        "reporter_iso3,partner_iso3,export_value\nAAA,BBB,20\nBBB,AAA,40\n",
    );
    let gdp = write(dir, "gdp.csv", "iso3,gdp\nAAA,100\nBBB,100\n");
    (trade, gdp)
}

#[test]
fn two_country_toy_json() {
    let dir = tempfile::tempdir().unwrap();
    let (trade, gdp) = toy(dir.path());
    let out = run(
        &["authority", "--format", "json"],
        &[
            "--trade".into(),
            trade.display().to_string(),
            "--gdp".into(),
            gdp.display().to_string(),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Report = serde_json::from_str(&stdout(&out)).unwrap();
    let Report::Authority(a) = report else {
        panic!("authority report expected")
    };
    assert!((a.countries[0].pi - 2.0 / 3.0).abs() < 1e-12);
    assert!((a.countries[1].pi - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn json_round_trips_byte_identical() {
    for args in [
        vec!["authority", "--ratios"],
        vec!["tradewar", "--actor", "USA", "--target", "CHN"],
        vec!["globalization", "--country", "JPN", "--lambda", "midpoint"],
    ] {
        let mut all = args.clone();
        all.extend(["--format", "json"]);
        let out = run(&all, &snapshot_flags(2018));
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
        let text = stdout(&out);
        let report: Report = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
        assert_eq!(again, text, "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    for format in ["table", "csv", "json"] {
        let args = [
            "tradewar", "--actor", "USA", "--target", "CHN", "--format", format,
        ];
        let a = run(&args, &snapshot_flags(2018));
        let b = run(&args, &snapshot_flags(2018));
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
}

#[test]
fn tradewar_table_reports_per_mille() {
    let out = run(
        &[
            "tradewar",
            "--actor",
            "USA",
            "--target",
            "CHN",
            "--decimals",
            "2",
        ],
        &snapshot_flags(2018),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("USA elasticity: -99.80 per mille  stance: conflict"),
        "{text}"
    );
    assert!(text.contains("midpoint lambda"));
}

#[test]
fn csv_has_raw_values() {
    let out = run(&["authority", "--format", "csv"], &snapshot_flags(2018));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("country,pi,gdp"));
    let sum: f64 = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn order_flag_moves_rows_first() {
    let out = run(
        &["authority", "--format", "csv", "--order", "USA,CHN"],
        &snapshot_flags(2018),
    );
    let text = stdout(&out);
    let codes: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(&codes[..3], &["USA", "CHN", "CAN"]);
}

#[test]
fn config_file_supplies_options() {
    let dir = tempfile::tempdir().unwrap();
    let snap = common::data_dir().join("snapshot");
    let config = write(
        dir.path(),
        "run.toml",
        &format!(
            "trade = {:?}\ngdp = {:?}\naggregate = {:?}\nformat = \"csv\"\nyear = 2018\n",
            snap.join("2018/trade.csv"),
            snap.join("2018/gdp.csv"),
            snap.join("aggregate.toml"),
        ),
    );
    let via_config = run(&["authority", "--config", config.to_str().unwrap()], &[]);
    assert_eq!(via_config.status.code(), Some(0), "{}", stderr(&via_config));
    let via_flags = run(&["authority", "--format", "csv"], &snapshot_flags(2018));
    assert_eq!(via_config.stdout, via_flags.stdout);

    // flags win over the file
    let json = run(
        &[
            "authority",
            "--config",
            config.to_str().unwrap(),
            "--format",
            "json",
        ],
        &[],
    );
    assert!(stdout(&json).starts_with('{'));

    let bad = write(dir.path(), "bad.toml", "colour = \"blue\"\n");
    let out = run(&["authority", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_gdp_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (trade, _) = toy(dir.path());
    let absent = dir.path().join("nowhere.csv");
    let out = run(
        &["authority"],
        &[
            "--trade".into(),
            trade.display().to_string(),
            "--gdp".into(),
            absent.display().to_string(),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nowhere.csv"), "{}", stderr(&out));
}

#[test]
fn disconnected_network_exits_3_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let trade = write(
        dir.path(),
        "trade.csv",
        "reporter_iso3,partner_iso3,export_value\nAAA,BBB,20\nBBB,AAA,40\nCCC,AAA,10\n",
    );
    let gdp = write(
        dir.path(),
        "gdp.csv",
        "iso3,gdp\nAAA,100\nBBB,100\nCCC,50\n",
    );
    let files = [
        "--trade".to_string(),
        trade.display().to_string(),
        "--gdp".into(),
        gdp.display().to_string(),
    ];
    let out = run(&["authority"], &files);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("--force"));

    // CCC is transient: the forced solve gives it zero authority
    let forced = run(&["authority", "--force", "--format", "csv"], &files);
    assert_eq!(forced.status.code(), Some(0), "{}", stderr(&forced));
}

#[test]
fn unknown_code_exits_4() {
    let out = run(
        &["tradewar", "--actor", "USA", "--target", "XXX"],
        &snapshot_flags(2018),
    );
    assert_eq!(out.status.code(), Some(4));
    let out = run(
        &["globalization", "--country", "ZZZ"],
        &snapshot_flags(2018),
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verify_passes_and_corruption_exits_5() {
    let ok = run(
        &["verify", "--seeds", "3", "--sizes", "3,5"],
        &snapshot_flags(2018),
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("verification passed"));

    let bad = run(
        &[
            "verify",
            "--seeds",
            "2",
            "--sizes",
            "3",
            "--corrupt-analytic",
        ],
        &[],
    );
    assert_eq!(bad.status.code(), Some(5));
    assert!(stdout(&bad).contains("FAILED"));
}

#[test]
fn year_mismatch_is_an_ingestion_error() {
    let mut flags = snapshot_flags(2018);
    flags.extend(["--year".into(), "2000".into()]);
    // the snapshot files carry no year column, so only an explicit column can disagree
    let out = run(&["authority"], &flags);
    assert_eq!(out.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let trade = write(
        dir.path(),
        "trade.csv",
        "reporter_iso3,partner_iso3,export_value,year\nAAA,BBB,20,2018\nBBB,AAA,40,2018\n",
    );
    let gdp = write(dir.path(), "gdp.csv", "iso3,gdp\nAAA,100\nBBB,100\n");
    let out = run(
        &["authority", "--year", "2000"],
        &[
            "--trade".into(),
            trade.display().to_string(),
            "--gdp".into(),
            gdp.display().to_string(),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn authority_rule_is_the_status_quo() {
    let out = run(
        &[
            "tradewar",
            "--actor",
            "USA",
            "--target",
            "CHN",
            "--lambda",
            "authority",
            "--format",
            "json",
        ],
        &snapshot_flags(2018),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let Report::TradeWar(r) = serde_json::from_str(&stdout(&out)).unwrap() else {
        panic!("tradewar report expected")
    };
    assert!(r.classification.status_quo);
    assert_eq!(r.classification.stance.as_str(), "neutral");
    assert!(r
        .side_effects
        .rows
        .iter()
        .all(|s| s.derivative == 0.0 && s.elasticity == 0.0));
}

#[test]
fn globalization_stances_2018() {
    for (country, stance) in [("CHN", "globalize"), ("USA", "indeterminate")] {
        let out = run(
            &["globalization", "--country", country, "--format", "json"],
            &snapshot_flags(2018),
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let Report::Globalization(r) = serde_json::from_str(&stdout(&out)).unwrap() else {
            panic!("globalization report expected")
        };
        assert_eq!(r.stance.stance.as_str(), stance, "{country}");
        assert!(r.requested.is_none());
    }
}

#[test]
fn symmetric_pair_matches_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let trade = write(
        dir.path(),
        "trade.csv",
        "reporter_iso3,partner_iso3,export_value\nAAA,BBB,50\nBBB,AAA,50\n",
    );
    let gdp = write(dir.path(), "gdp.csv", "iso3,gdp\nAAA,100\nBBB,100\n");
    let files = [
        "--trade".to_string(),
        trade.display().to_string(),
        "--gdp".into(),
        gdp.display().to_string(),
    ];
    let out = run(&["verify", "--seeds", "0"], &files);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("loaded matrix: 16 checked, 0 skipped, 0 failed"));
}

#[test]
fn reducible_network_reports_skips_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let trade = write(
        dir.path(),
        "trade.csv",
        "reporter_iso3,partner_iso3,export_value\nAAA,BBB,20\nBBB,AAA,40\nCCC,AAA,10\n",
    );
    let gdp = write(
        dir.path(),
        "gdp.csv",
        "iso3,gdp\nAAA,100\nBBB,100\nCCC,50\n",
    );
    let out = run(
        &["verify", "--seeds", "0", "--force", "--format", "json"],
        &[
            "--trade".into(),
            trade.display().to_string(),
            "--gdp".into(),
            gdp.display().to_string(),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let Report::Verify(v) = serde_json::from_str(&stdout(&out)).unwrap() else {
        panic!("verify report expected")
    };
    assert!(v.passed);
    assert!(v
        .skipped
        .iter()
        .any(|s| s.label.contains("CCC") && s.reason.contains("singular")));
}

#[test]
fn decimals_only_affect_tables() {
    for format in ["csv", "json"] {
        let a = run(
            &["authority", "--format", format, "--decimals", "1"],
            &snapshot_flags(2018),
        );
        let b = run(
            &["authority", "--format", format, "--decimals", "12"],
            &snapshot_flags(2018),
        );
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
    let a = run(&["authority", "--decimals", "1"], &snapshot_flags(2018));
    let b = run(&["authority", "--decimals", "6"], &snapshot_flags(2018));
    assert_ne!(a.stdout, b.stdout);
    let out = run(&["authority", "--decimals", "13"], &snapshot_flags(2018));
    assert_eq!(out.status.code(), Some(2));
}
