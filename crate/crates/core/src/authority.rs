//! The counterbalance equilibrium `pi = pi P`: every country's authority equals
//! the authority flowing in from its trading partners,
//! `pi_i = sum_j pi_j P[j][i]`, with `pi` non-negative and summing to one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trade_matrix::TradeMatrix;

/// Residual bound for the direct solve.
pub const DIRECT_TOL: f64 = 1e-12;
/// Successive-change bound for power iteration.
pub const POWER_TOL: f64 = 1e-14;
pub const POWER_MAX_ITER: usize = 100_000;

/// Negative entries down to this size are rounding noise and get clamped.
const NEGATIVE_CLAMP: f64 = -1e-13;
/// Smallest accepted |pivot| relative to the largest in the LU factorization.
const PIVOT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("equilibrium system is singular ({reason}); is the trade network strongly connected?")]
    SingularSystem { reason: String },
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("ratio requested for a country against itself")]
    SameCountry,
    #[error("authority of country #{0} is zero")]
    ZeroAuthority(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    #[default]
    /// Dense LU on the transposed fixed-point system, last equation replaced
    /// by the normalization constraint.
    Direct,
    /// `x <- x P`, renormalized, until the successive change is below `tol`.
    PowerIteration { max_iter: usize },
}

impl SolveMethod {
    pub const POWER: SolveMethod = SolveMethod::PowerIteration {
        max_iter: POWER_MAX_ITER,
    };

    pub fn default_tol(&self) -> f64 {
        match self {
            SolveMethod::Direct => DIRECT_TOL,
            SolveMethod::PowerIteration { .. } => POWER_TOL,
        }
    }
}

/// Equilibrium authority distribution aligned with the matrix's country index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorityVector {
    pub pi: Vec<f64>,
    /// `max_k |(pi P)_k - pi_k|`.
    pub residual: f64,
    pub iterations: Option<usize>,
}

impl AuthorityVector {
    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.pi[k]
    }
}

/// `max_k |(pi P)_k - pi_k|`.
pub fn fixed_point_residual(p: &TradeMatrix, pi: &[f64]) -> f64 {
    let x = DVector::from_column_slice(pi);
    let y = p.p().tr_mul(&x);
    (y - x).amax()
}

pub fn authority_distribution(
    p: &TradeMatrix,
    method: SolveMethod,
    tol: f64,
) -> Result<AuthorityVector, SolveError> {
    match method {
        SolveMethod::Direct => solve_direct(p, tol),
        SolveMethod::PowerIteration { max_iter } => solve_power(p, tol, max_iter),
    }
}

/// Direct solve with default tolerance.
pub fn solve(p: &TradeMatrix) -> Result<AuthorityVector, SolveError> {
    authority_distribution(p, SolveMethod::Direct, DIRECT_TOL)
}

fn singular(reason: impl Into<String>) -> SolveError {
    SolveError::SingularSystem {
        reason: reason.into(),
    }
}

fn solve_direct(p: &TradeMatrix, tol: f64) -> Result<AuthorityVector, SolveError> {
    let n = p.n();
    let mut a: DMatrix<f64> = (DMatrix::identity(n, n) - p.p()).transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;

    let lu = a.clone().lu();
    let pivots = lu.u().diagonal().abs();
    let (lo, hi) = (pivots.min(), pivots.max());
    if !(lo > PIVOT_RATIO * hi) {
        return Err(singular(format!("pivot ratio {:.3e}", lo / hi)));
    }
    let mut x = lu.solve(&b).ok_or_else(|| singular("zero pivot"))?;
    // one step of iterative refinement
    let r = &b - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(singular("non-finite solution"));
    }
    if let Some(v) = x.iter().copied().find(|&v| v < NEGATIVE_CLAMP) {
        return Err(singular(format!("negative weight {v:.3e}")));
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    let sum = x.sum();
    x /= sum;

    let pi: Vec<f64> = x.iter().copied().collect();
    let residual = fixed_point_residual(p, &pi);
    if residual > tol {
        return Err(singular(format!("residual {residual:.3e} above {tol:.1e}")));
    }
    Ok(AuthorityVector {
        pi,
        residual,
        iterations: None,
    })
}

fn solve_power(p: &TradeMatrix, tol: f64, max_iter: usize) -> Result<AuthorityVector, SolveError> {
    let n = p.n();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for iter in 1..=max_iter {
        let mut y = p.p().tr_mul(&x);
        let s = y.sum();
        y /= s;
        let change = (&y - &x).amax();
        x = y;
        if change <= tol {
            let pi: Vec<f64> = x.iter().copied().collect();
            let residual = fixed_point_residual(p, &pi);
            return Ok(AuthorityVector {
                pi,
                residual,
                iterations: Some(iter),
            });
        }
    }
    Err(SolveError::NoConvergence {
        iterations: max_iter,
    })
}

/// `pi_j / pi_i` against `gdp_j / gdp_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPair {
    pub authority_ratio: f64,
    pub gdp_ratio: f64,
}

pub fn ratios(pi: &[f64], gdp: &[f64], i: usize, j: usize) -> Result<RatioPair, SolveError> {
    if i == j {
        return Err(SolveError::SameCountry);
    }
    for k in [i, j] {
        if !(pi[k] > 0.0) {
            return Err(SolveError::ZeroAuthority(k));
        }
    }
    Ok(RatioPair {
        authority_ratio: pi[j] / pi[i],
        gdp_ratio: gdp[j] / gdp[i],
    })
}
