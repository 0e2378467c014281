#![allow(dead_code)]

use std::path::PathBuf;

use counterbalance::cli::{load, CommonArgs, Loaded, RunConfig};

pub const NAMED: [&str; 9] = [
    "CAN", "CHN", "DEU", "FRA", "GBR", "ITA", "JPN", "RUS", "USA",
];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn snapshot_args(year: i32) -> CommonArgs {
    let dir = data_dir().join("snapshot");
    CommonArgs {
        trade: Some(dir.join(year.to_string()).join("trade.csv")),
        gdp: Some(dir.join(year.to_string()).join("gdp.csv")),
        aggregate: Some(dir.join("aggregate.toml")),
        year: Some(year),
        ..CommonArgs::default()
    }
}

pub fn snapshot(year: i32) -> Loaded {
    let cfg = RunConfig::resolve(&snapshot_args(year)).expect("snapshot config");
    load(&cfg, &mut std::io::sink()).unwrap_or_else(|e| panic!("snapshot {year}: {}", e.message))
}

pub fn published() -> serde_json::Value {
    let text = std::fs::read_to_string(data_dir().join("reference").join("published.json"))
        .expect("published.json");
    serde_json::from_str(&text).expect("published.json parses")
}
