// A US trade war on imports from China, on the 2018 snapshot.
//
// `cargo run --example trade_war`

use std::error::Error;

use counterbalance::cli::{load, CommonArgs, RunConfig};
use counterbalance::policy::{
    midpoint_resolution, rank_targets, side_effects, TRADE_WAR_THRESHOLD,
};
use counterbalance::{ReactionRule, SensitivityEngine};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/snapshot");
    let args = CommonArgs {
        trade: Some(dir.join("2018/trade.csv")),
        gdp: Some(dir.join("2018/gdp.csv")),
        aggregate: Some(dir.join("aggregate.toml")),
        ..CommonArgs::default()
    };
    let cfg = RunConfig::resolve(&args).map_err(|e| e.message)?;
    let data = load(&cfg, &mut std::io::stderr()).map_err(|e| e.message)?;
    let engine = SensitivityEngine::new(&data.matrix, &data.pi);
    let index = data.matrix.index();
    let usa = index.position_of("USA").ok_or("USA missing")?;
    let chn = index.position_of("CHN").ok_or("CHN missing")?;

    // China answers each dollar of lost exports in proportion to GDP.
    let effects = side_effects(&engine, usa, chn, ReactionRule::GdpRatio)?;
    println!("USA cuts imports from CHN, lambda = gdp ratio");
    for row in &effects.rows {
        println!(
            "  {}  {:>9.2} per mille",
            row.country,
            1000.0 * row.elasticity
        );
    }

    // At the status-quo reaction nothing moves for the actor.
    let war = engine.tradewar(usa, chn, ReactionRule::AuthorityRatio)?;
    println!(
        "self derivative at lambda = pi ratio: {}",
        war.self_derivative()
    );

    let m = midpoint_resolution(&engine, usa, chn)?;
    println!(
        "midpoint lambda {:.4} between {:.4} and {:.4}; CHN cuts {:.4} dollars per dollar",
        m.midpoint, m.authority_ratio, m.gdp_ratio, m.dollar_for_dollar
    );

    println!("\nUSA targets, most negative first:");
    for t in rank_targets(&engine, usa, ReactionRule::GdpRatio, TRADE_WAR_THRESHOLD)? {
        println!(
            "  {}  {:>9.2}  {}",
            t.partner,
            1000.0 * t.elasticity,
            t.stance.as_str()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
