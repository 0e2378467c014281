//! Authority distribution of a trade network and its first-order sensitivity.
//!
//! Countries are linked by a row-stochastic exposure matrix `P`, where
//! `P[i][j]` is the share of country `i`'s GDP exported to `j`. The authority
//! distribution `pi` is the fixed point `pi = pi P`. This crate builds `P` from
//! bilateral flow and GDP files, solves for `pi`, differentiates `pi` with
//! respect to trade-war and globalization moves in closed form, turns the
//! derivatives into policy reports, and checks every closed-form derivative
//! against an independent finite-difference oracle.
//!
//! ```
//! use counterbalance::{solve, ReactionRule, SensitivityEngine, TradeMatrix};
//!
//! let p = TradeMatrix::from_rows(
//!     &["AAA", "BBB", "CCC"],
//!     &[vec![0.7, 0.2, 0.1], vec![0.15, 0.6, 0.25], vec![0.05, 0.35, 0.6]],
//!     &[3.0, 2.0, 1.0],
//! )?;
//! let pi = solve(&p)?;
//! let engine = SensitivityEngine::new(&p, &pi);
//! let war = engine.tradewar(0, 1, ReactionRule::GdpRatio)?;
//! assert!(war.d_pi.iter().sum::<f64>().abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod authority;
pub mod cli;
pub mod oracle;
pub mod policy;
pub mod sensitivity;
pub mod trade_matrix;

pub use authority::{
    authority_distribution, ratios, solve, AuthorityVector, RatioPair, SolveError, SolveMethod,
};
pub use sensitivity::{
    globalization_derivative, globalization_m, log_elasticity, reduced_blocks, tradewar_derivative,
    ReactionRule, SensitivityEngine, SensitivityError, SensitivityResult,
};
pub use trade_matrix::{build_matrix, check_connectivity, CountryCode, CountryIndex, TradeMatrix};
