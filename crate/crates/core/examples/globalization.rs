// Globalization stance of each economy in 2000 and 2018.
//
// `cargo run --example globalization`

use std::error::Error;

use counterbalance::cli::{load, CommonArgs, RunConfig};
use counterbalance::policy::{globalization_stance, GLOBALIZATION_THRESHOLD};
use counterbalance::SensitivityEngine;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/snapshot");
    for year in ["2000", "2018"] {
        let args = CommonArgs {
            trade: Some(dir.join(year).join("trade.csv")),
            gdp: Some(dir.join(year).join("gdp.csv")),
            aggregate: Some(dir.join("aggregate.toml")),
            ..CommonArgs::default()
        };
        let cfg = RunConfig::resolve(&args).map_err(|e| e.message)?;
        let data = load(&cfg, &mut std::io::stderr()).map_err(|e| e.message)?;
        let engine = SensitivityEngine::new(&data.matrix, &data.pi);

        println!("{year}: own elasticity per mille w.r.t. P_ii");
        println!("  country   pi ratio   gdp ratio  stance");
        for (i, code) in data.matrix.index().codes().iter().enumerate() {
            let s = globalization_stance(&engine, i, GLOBALIZATION_THRESHOLD)?;
            println!(
                "  {code}      {:>9.2}  {:>10.2}  {}",
                1000.0 * s.elasticity_at_authority_rule,
                1000.0 * s.elasticity_at_gdp_rule,
                s.stance.as_str()
            );
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
