// Snapshot results next to the published 2018 values in
// `data/reference/published.json`.
//
// `cargo run --example reference_tables`

use std::error::Error;

use counterbalance::cli::{load, CommonArgs, RunConfig};
use counterbalance::{ReactionRule, SensitivityEngine};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let root = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let published: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(
        root.join("reference/published.json"),
    )?)?;
    let dir = root.join("snapshot");
    let args = CommonArgs {
        trade: Some(dir.join("2018/trade.csv")),
        gdp: Some(dir.join("2018/gdp.csv")),
        aggregate: Some(dir.join("aggregate.toml")),
        ..CommonArgs::default()
    };
    let cfg = RunConfig::resolve(&args).map_err(|e| e.message)?;
    let data = load(&cfg, &mut std::io::stderr()).map_err(|e| e.message)?;
    let index = data.matrix.index();
    let engine = SensitivityEngine::new(&data.matrix, &data.pi);

    println!("authority 2018      published  snapshot");
    let authority = published["authority_2018"]
        .as_object()
        .ok_or("authority_2018")?;
    for (code, value) in authority {
        let k = index.position_of(code).ok_or("unknown code")?;
        println!(
            "  {code}              {:>9.4}  {:>8.4}",
            value.as_f64().unwrap_or(f64::NAN),
            data.pi.pi[k]
        );
    }

    let side = &published["side_effects_2018"];
    let (actor, target) = (
        side["actor"].as_str().ok_or("actor")?,
        side["target"].as_str().ok_or("target")?,
    );
    let war = engine.tradewar(
        index.position_of(actor).ok_or("actor")?,
        index.position_of(target).ok_or("target")?,
        ReactionRule::GdpRatio,
    )?;
    let ours = war.log_elasticities.ok_or("zero authority")?;
    println!("\n{actor} vs {target} side effects, per mille");
    println!("  country   published  snapshot  same sign");
    for (code, value) in side["elasticity"].as_object().ok_or("elasticity")? {
        let theirs = 1000.0 * value.as_f64().unwrap_or(f64::NAN);
        let mine = 1000.0 * ours[index.position_of(code).ok_or("unknown code")?];
        println!(
            "  {code}      {theirs:>10.2}  {mine:>8.2}  {}",
            theirs.signum() == mine.signum()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
