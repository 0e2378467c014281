// Equilibrium authority of small hand-written networks.
//
// `cargo run --example authority_toy`

use std::error::Error;

use counterbalance::authority::fixed_point_residual;
use counterbalance::{authority_distribution, ratios, solve, SolveMethod, TradeMatrix};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // AAA exports 20% of its GDP to BBB, BBB exports 40% of its GDP to AAA.
    // Balance of flows: pi_a * 0.2 = pi_b * 0.4, so pi = (2/3, 1/3).
    let two = TradeMatrix::from_rows(
        &["AAA", "BBB"],
        &[vec![0.8, 0.2], vec![0.4, 0.6]],
        &[1.0, 1.0],
    )?;
    let pi = solve(&two)?;
    println!("two countries: pi = ({:.6}, {:.6})", pi.pi[0], pi.pi[1]);
    if (pi.pi[0] - 2.0 / 3.0).abs() > 1e-12 {
        return Err("two-country equilibrium is not (2/3, 1/3)".into());
    }

    let three = TradeMatrix::from_rows(
        &["AAA", "BBB", "CCC"],
        &[
            vec![0.7, 0.2, 0.1],
            vec![0.15, 0.6, 0.25],
            vec![0.05, 0.35, 0.6],
        ],
        &[3.0, 2.0, 1.0],
    )?;
    let direct = authority_distribution(
        &three,
        SolveMethod::Direct,
        SolveMethod::Direct.default_tol(),
    )?;
    let power =
        authority_distribution(&three, SolveMethod::POWER, SolveMethod::POWER.default_tol())?;
    println!("three countries:");
    for (k, code) in three.index().codes().iter().enumerate() {
        println!(
            "  {code}  direct {:.10}  power {:.10}",
            direct.pi[k], power.pi[k]
        );
    }
    println!(
        "  residual {:.2e}, power iterations {}",
        fixed_point_residual(&three, &direct.pi),
        power.iterations.unwrap_or(0)
    );

    let r = ratios(&direct.pi, three.gdp(), 0, 1)?;
    println!(
        "  BBB against AAA: authority ratio {:.4}, gdp ratio {:.4}",
        r.authority_ratio, r.gdp_ratio
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
