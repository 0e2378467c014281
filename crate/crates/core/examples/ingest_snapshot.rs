// Builds the exposure matrix from the shipped 2018 CSV snapshot.
//
// `cargo run --example ingest_snapshot`

use std::error::Error;
use std::path::PathBuf;

use counterbalance::trade_matrix::{
    aggregate_regions, load_gdp_path, load_trade_flows_path, AggregationMap, FlowSchema,
};
use counterbalance::{build_matrix, check_connectivity, solve, CountryIndex};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/snapshot");
    let flows = load_trade_flows_path(&dir.join("2018/trade.csv"), &FlowSchema::default())?;
    let gdp = load_gdp_path(&dir.join("2018/gdp.csv"))?;
    println!(
        "{} flows, {} GDP rows, total exports {:.1}",
        flows.entries.len(),
        gdp.values.len(),
        flows.total()
    );

    // Hong Kong and Macau fold into China; flows among them become internal.
    let map = AggregationMap::from_path(&dir.join("aggregate.toml"))?;
    let merged = aggregate_regions(&flows, &gdp, &map)?;
    println!(
        "after aggregation: {} GDP rows, {:.1} of internal flows removed",
        merged.gdp.values.len(),
        merged.internal_removed
    );

    let index = CountryIndex::from_tables(&merged.flows, &merged.gdp);
    let p = build_matrix(&merged.flows, &merged.gdp, &index)?;
    let connectivity = check_connectivity(&p);
    println!("well connected: {}", connectivity.well_connected());

    let codes = p.index().codes();
    print!("\n     ");
    for c in codes {
        print!("{c:>7}");
    }
    println!();
    for (i, c) in codes.iter().enumerate() {
        print!("{c}  ");
        for j in 0..p.n() {
            print!("{:>7.4}", p.entry(i, j));
        }
        println!();
    }

    let pi = solve(&p)?;
    println!("\nauthority:");
    for (k, c) in codes.iter().enumerate() {
        println!("  {c}  {:.4}", pi.pi[k]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
