// Closed-form derivatives against double-double central differences.
//
// `cargo run --example verify_oracle`

use std::error::Error;

use counterbalance::oracle::{
    fd_derivative, random_trade_matrix, summarize, verify_random, Perturbation, VerifyOptions,
    SWEEP_RULES,
};
use counterbalance::{solve, ReactionRule, SensitivityEngine};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let p = random_trade_matrix(4, 7);
    let pi = solve(&p)?;
    let engine = SensitivityEngine::new(&p, &pi);

    let (i, j) = (0, 2);
    let rule = ReactionRule::GdpRatio;
    let analytic = engine.tradewar(i, j, rule)?;
    let lambda = rule.lambda(&pi.pi, p.gdp(), j, i);
    let numeric = fd_derivative(&p, &Perturbation::tradewar(p.n(), i, j, lambda), 1e-7)?;
    println!(
        "trade war {} -> {}, lambda {lambda:.4}",
        p.index().code(i),
        p.index().code(j)
    );
    println!("  country      analytic       finite diff");
    for k in 0..p.n() {
        println!(
            "  {}  {:>16.12}  {:>16.12}",
            p.index().code(k),
            analytic.d_pi[k],
            numeric[k]
        );
    }

    let reports = verify_random(&[3, 5, 10], 0..10, &SWEEP_RULES, &VerifyOptions::default());
    let s = summarize(&reports);
    println!(
        "\nsweep: {} checked, {} skipped, {} failed, worst relative error {:.2e}",
        s.checked, s.skipped, s.failed, s.worst_rel_err
    );
    if !s.passed() {
        return Err("oracle disagreement".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
