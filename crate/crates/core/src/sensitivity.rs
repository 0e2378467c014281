//! First-order sensitivity of the authority distribution.
//!
//! Two perturbation families are covered:
//!
//! * **Trade war** of actor `i` on target `j`: `P[j][i]` moves by `d`, target
//!   row rebalances through `P[j][j]`, and `j` retaliates with
//!   `lambda_ji * d` on `P[i][j]` (rebalanced through `P[i][i]`).
//! * **Globalization / protectionism** of `i`: `P[i][i]` moves by `d` and the
//!   whole matrix follows `d * M`, with `M` from [`globalization_m`].
//!
//! Both reduce to the same linear system. Dropping country `i`, let
//! `Z_i` be `P` transposed with row and column `i` removed and `alpha_i` the
//! off-diagonal part of row `i`. For a right-hand side `r` (the perturbation
//! pushed through `pi`, without its `i`-th entry):
//!
//! ```text
//! y         = (I - Z_i)^{-1} r
//! d pi_i    = - 1'y / (1 + 1'(I - Z_i)^{-1} alpha_i)
//! d pi_{-i} = y + d pi_i * (I - Z_i)^{-1} alpha_i
//! ```
//!
//! For the trade war `r = (lambda_ji pi_i - pi_j) e_j`, so the sign of
//! `d pi_i / d P_ji` is opposite to `lambda_ji pi_i - pi_j` and it vanishes at
//! the status-quo reaction `lambda_ji = pi_j / pi_i`.
//!
//! `(I - Z_i)` is factorized once per dropped country and cached in a
//! [`SensitivityEngine`]; every derivative is a pair of triangular solves.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authority::AuthorityVector;
use crate::trade_matrix::TradeMatrix;

/// `1 - P_ii` and `1 - P_si` must exceed this for the globalization matrix.
pub const DENOMINATOR_TOL: f64 = 1e-9;
const PIVOT_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("actor and target are the same country (#{0})")]
    SameCountry(usize),
    #[error("at least two countries are needed, got {0}")]
    TooFewCountries(usize),
    #[error("country #{0} is out of range")]
    OutOfRange(usize),
    #[error("reduced system without country #{0} is singular")]
    SingularReducedSystem(usize),
    #[error("denominator 1 - P[{0}][i] is not above {DENOMINATOR_TOL:e}")]
    DegenerateDenominator(usize),
    #[error("perturbed entry is zero, log-elasticity undefined")]
    ZeroBaseEntry,
    #[error("authority of country #{0} is zero, log-elasticity undefined")]
    ZeroAuthority(usize),
    #[error("reaction coefficient must be finite and non-negative, got {0}")]
    InvalidLambda(f64),
}

/// How the counterpart's reaction coefficient is chosen.
///
/// Convention: `lambda_ab` converts a change `dP_ab` into the counterpart's
/// reaction `dP_ba = lambda_ab * dP_ab`. Ratio rules are taken as
/// `x_a / x_b`, so a trade war of `i` on `j` uses `lambda_ji = x_j / x_i` and
/// globalization of `i` uses `lambda_ij = x_i / x_j` for every partner `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum ReactionRule {
    /// Zero bilateral trade-deficit benchmark, `gdp_a / gdp_b`.
    GdpRatio,
    /// Status quo, `pi_a / pi_b`.
    AuthorityRatio,
    /// Mean of the two above.
    Midpoint,
    Explicit(f64),
}

impl ReactionRule {
    pub fn explicit(value: f64) -> Result<Self, SensitivityError> {
        if value.is_finite() && value >= 0.0 {
            Ok(ReactionRule::Explicit(value))
        } else {
            Err(SensitivityError::InvalidLambda(value))
        }
    }

    /// `lambda_ab`.
    pub fn lambda(&self, pi: &[f64], gdp: &[f64], a: usize, b: usize) -> f64 {
        match *self {
            ReactionRule::GdpRatio => gdp[a] / gdp[b],
            ReactionRule::AuthorityRatio => pi[a] / pi[b],
            ReactionRule::Midpoint => 0.5 * (gdp[a] / gdp[b] + pi[a] / pi[b]),
            ReactionRule::Explicit(v) => v,
        }
    }

    /// `lambda_ab * pi_b - pi_a`, formed so the status-quo rule gives an exact
    /// zero and the midpoint exactly half the GDP-rule value.
    pub fn reaction_gap(&self, pi: &[f64], gdp: &[f64], a: usize, b: usize) -> f64 {
        match *self {
            ReactionRule::GdpRatio => gdp[a] / gdp[b] * pi[b] - pi[a],
            ReactionRule::AuthorityRatio => 0.0,
            ReactionRule::Midpoint => 0.5 * (gdp[a] / gdp[b] * pi[b] - pi[a]),
            ReactionRule::Explicit(v) => v * pi[b] - pi[a],
        }
    }
}

impl fmt::Display for ReactionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionRule::GdpRatio => f.write_str("gdp"),
            ReactionRule::AuthorityRatio => f.write_str("authority"),
            ReactionRule::Midpoint => f.write_str("midpoint"),
            ReactionRule::Explicit(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for ReactionRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gdp" | "gdp-ratio" | "g" => Ok(ReactionRule::GdpRatio),
            "authority" | "authority-ratio" | "pi" => Ok(ReactionRule::AuthorityRatio),
            "midpoint" | "mid" => Ok(ReactionRule::Midpoint),
            other => other
                .parse::<f64>()
                .ok()
                .and_then(|v| ReactionRule::explicit(v).ok())
                .ok_or_else(|| {
                    format!("expected gdp, authority, midpoint or a non-negative number, got {s:?}")
                }),
        }
    }
}

/// `Z_i` and `alpha_i` for a dropped country `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBlocks {
    pub z: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub dropped: usize,
}

impl ReducedBlocks {
    /// Position of original country `k` (`k != dropped`) in reduced coordinates.
    pub fn reduced_pos(&self, k: usize) -> usize {
        debug_assert_ne!(k, self.dropped);
        if k < self.dropped {
            k
        } else {
            k - 1
        }
    }

    /// Original index of reduced coordinate `r`.
    pub fn original(&self, r: usize) -> usize {
        if r < self.dropped {
            r
        } else {
            r + 1
        }
    }
}

pub fn reduced_blocks(p: &TradeMatrix, i: usize) -> Result<ReducedBlocks, SensitivityError> {
    let n = p.n();
    if n < 2 {
        return Err(SensitivityError::TooFewCountries(n));
    }
    if i >= n {
        return Err(SensitivityError::OutOfRange(i));
    }
    let orig = |r: usize| if r < i { r } else { r + 1 };
    let z = DMatrix::from_fn(n - 1, n - 1, |r, c| p.entry(orig(c), orig(r)));
    let alpha = DVector::from_fn(n - 1, |r, _| p.entry(i, orig(r)));
    Ok(ReducedBlocks {
        z,
        alpha,
        dropped: i,
    })
}

/// Factorized `I - Z_i` with `(I - Z_i)^{-1} alpha_i` and the shared denominator.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub blocks: ReducedBlocks,
    lu: LU<f64, Dyn, Dyn>,
    /// `(I - Z_i)^{-1} alpha_i`
    pub solved_alpha: DVector<f64>,
    /// `1 + 1'(I - Z_i)^{-1} alpha_i`
    pub denominator: f64,
}

impl ReducedSystem {
    pub fn new(blocks: ReducedBlocks) -> Result<Self, SensitivityError> {
        let m = blocks.z.nrows();
        let i = blocks.dropped;
        let lu = (DMatrix::identity(m, m) - &blocks.z).lu();
        if m > 0 {
            let pivots = lu.u().diagonal().abs();
            if !(pivots.min() > PIVOT_RATIO * pivots.max()) {
                return Err(SensitivityError::SingularReducedSystem(i));
            }
        }
        let solved_alpha = lu
            .solve(&blocks.alpha)
            .ok_or(SensitivityError::SingularReducedSystem(i))?;
        let denominator = 1.0 + solved_alpha.sum();
        if !denominator.is_finite() {
            return Err(SensitivityError::SingularReducedSystem(i));
        }
        Ok(ReducedSystem {
            blocks,
            lu,
            solved_alpha,
            denominator,
        })
    }

    /// `(I - Z_i)^{-1} r`
    pub fn solve(&self, r: &DVector<f64>) -> Result<DVector<f64>, SensitivityError> {
        self.lu
            .solve(r)
            .ok_or(SensitivityError::SingularReducedSystem(self.blocks.dropped))
    }

    /// Full-length `d pi` for a reduced right-hand side `r`.
    fn assemble(&self, r: &DVector<f64>) -> Result<Vec<f64>, SensitivityError> {
        let y = self.solve(r)?;
        let d_self = -y.sum() / self.denominator;
        let rest = y + &self.solved_alpha * d_self;
        let i = self.blocks.dropped;
        let mut d = Vec::with_capacity(rest.len() + 1);
        d.extend_from_slice(&rest.as_slice()[..i]);
        d.push(d_self);
        d.extend_from_slice(&rest.as_slice()[i..]);
        // -0.0 + 0.0 == +0.0, so an exact zero never prints as "-0"
        d.iter_mut().for_each(|x| *x += 0.0);
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PerturbationKind {
    /// Derivative with respect to `P[target][actor]`.
    TradeWar { actor: usize, target: usize },
    /// Derivative with respect to `P[country][country]`.
    Globalization { country: usize },
}

impl PerturbationKind {
    /// The perturbed entry `theta` of `P`.
    pub fn base_entry(&self, p: &TradeMatrix) -> f64 {
        match *self {
            PerturbationKind::TradeWar { actor, target } => p.entry(target, actor),
            PerturbationKind::Globalization { country } => p.entry(country, country),
        }
    }

    /// The country whose own authority is the objective.
    pub fn actor(&self) -> usize {
        match *self {
            PerturbationKind::TradeWar { actor, .. } => actor,
            PerturbationKind::Globalization { country } => country,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaUsed {
    /// `lambda_ji` of a trade war.
    Single(f64),
    /// `lambda_ij` for every partner `j` (entry `i` is zero).
    PerPartner(Vec<f64>),
}

/// Derivative of every `pi_k` with respect to the perturbed entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub kind: PerturbationKind,
    pub rule: ReactionRule,
    pub d_pi: Vec<f64>,
    pub lambda_used: LambdaUsed,
    /// Value of the perturbed entry.
    pub base_entry: f64,
    /// Trade war at `lambda_ji = pi_j / pi_i`: every derivative is zero.
    pub status_quo: bool,
    /// `(theta / pi_k) d pi_k / d theta`; absent when `theta` or some `pi_k` is zero.
    pub log_elasticities: Option<Vec<f64>>,
}

impl SensitivityResult {
    /// Derivative of the actor's own authority.
    pub fn self_derivative(&self) -> f64 {
        self.d_pi[self.kind.actor()]
    }

    pub fn self_elasticity(&self) -> Option<f64> {
        self.log_elasticities.as_ref().map(|e| e[self.kind.actor()])
    }
}

fn elasticities(theta: f64, pi: &[f64], d_pi: &[f64]) -> Result<Vec<f64>, SensitivityError> {
    if theta == 0.0 {
        return Err(SensitivityError::ZeroBaseEntry);
    }
    if let Some(k) = pi.iter().position(|&v| !(v > 0.0)) {
        return Err(SensitivityError::ZeroAuthority(k));
    }
    Ok(d_pi.iter().zip(pi).map(|(d, p)| theta / p * d).collect())
}

/// `(theta / pi_k) * d pi_k / d theta` for every `k`.
pub fn log_elasticity(
    result: &SensitivityResult,
    p: &TradeMatrix,
    pi: &AuthorityVector,
) -> Result<Vec<f64>, SensitivityError> {
    elasticities(result.kind.base_entry(p), &pi.pi, &result.d_pi)
}

/// Sensitivity calculator over one `(P, pi)` pair.
///
/// Holds one lazily built [`ReducedSystem`] per country; the cache is
/// write-once and safe to share between threads.
#[derive(Debug)]
pub struct SensitivityEngine<'a> {
    p: &'a TradeMatrix,
    pi: &'a AuthorityVector,
    systems: Vec<OnceLock<Result<ReducedSystem, SensitivityError>>>,
}

impl<'a> SensitivityEngine<'a> {
    pub fn new(p: &'a TradeMatrix, pi: &'a AuthorityVector) -> Self {
        SensitivityEngine {
            p,
            pi,
            systems: (0..p.n()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn matrix(&self) -> &TradeMatrix {
        self.p
    }

    pub fn authority(&self) -> &AuthorityVector {
        self.pi
    }

    fn check(&self, k: usize) -> Result<(), SensitivityError> {
        let n = self.p.n();
        if n < 2 {
            return Err(SensitivityError::TooFewCountries(n));
        }
        if k >= n {
            return Err(SensitivityError::OutOfRange(k));
        }
        Ok(())
    }

    pub fn reduced(&self, i: usize) -> Result<&ReducedSystem, SensitivityError> {
        self.check(i)?;
        self.systems[i]
            .get_or_init(|| reduced_blocks(self.p, i).and_then(ReducedSystem::new))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn result(
        &self,
        kind: PerturbationKind,
        rule: ReactionRule,
        d_pi: Vec<f64>,
        lambda_used: LambdaUsed,
        status_quo: bool,
    ) -> SensitivityResult {
        let base_entry = kind.base_entry(self.p);
        SensitivityResult {
            kind,
            rule,
            log_elasticities: elasticities(base_entry, &self.pi.pi, &d_pi).ok(),
            d_pi,
            lambda_used,
            base_entry,
            status_quo,
        }
    }

    /// Derivative of `pi` with respect to `P[j][i]` when `i` changes its
    /// imports from `j` and `j` reacts on `P[i][j]` with `lambda_ji`.
    pub fn tradewar(
        &self,
        i: usize,
        j: usize,
        rule: ReactionRule,
    ) -> Result<SensitivityResult, SensitivityError> {
        self.check(i)?;
        self.check(j)?;
        if i == j {
            return Err(SensitivityError::SameCountry(i));
        }
        let (pi, gdp) = (&self.pi.pi, self.p.gdp());
        let sys = self.reduced(i)?;
        let gap = rule.reaction_gap(pi, gdp, j, i);
        let mut r = DVector::zeros(self.p.n() - 1);
        r[sys.blocks.reduced_pos(j)] = gap;
        let d_pi = sys.assemble(&r)?;
        let lambda = rule.lambda(pi, gdp, j, i);
        Ok(self.result(
            PerturbationKind::TradeWar {
                actor: i,
                target: j,
            },
            rule,
            d_pi,
            LambdaUsed::Single(lambda),
            gap == 0.0,
        ))
    }

    /// `lambda_ij` for every partner `j` of `i`; zero at `j = i`.
    pub fn globalization_lambdas(&self, i: usize, rule: ReactionRule) -> Vec<f64> {
        let (pi, gdp) = (&self.pi.pi, self.p.gdp());
        (0..self.p.n())
            .map(|s| {
                if s == i {
                    0.0
                } else {
                    rule.lambda(pi, gdp, i, s)
                }
            })
            .collect()
    }

    pub fn globalization_m(
        &self,
        i: usize,
        rule: ReactionRule,
    ) -> Result<DMatrix<f64>, SensitivityError> {
        self.check(i)?;
        globalization_m_with(self.p, i, &self.globalization_lambdas(i, rule))
    }

    /// Derivative of `pi` with respect to `P[i][i]` under `dP = dP_ii * M`.
    pub fn globalization(
        &self,
        i: usize,
        rule: ReactionRule,
    ) -> Result<SensitivityResult, SensitivityError> {
        self.check(i)?;
        let lambdas = self.globalization_lambdas(i, rule);
        let m = globalization_m_with(self.p, i, &lambdas)?;
        let sys = self.reduced(i)?;
        let pi = DVector::from_column_slice(&self.pi.pi);
        let pi_m = m.tr_mul(&pi);
        let r = DVector::from_fn(self.p.n() - 1, |row, _| pi_m[sys.blocks.original(row)]);
        let d_pi = sys.assemble(&r)?;
        Ok(self.result(
            PerturbationKind::Globalization { country: i },
            rule,
            d_pi,
            LambdaUsed::PerPartner(lambdas),
            false,
        ))
    }
}

/// Response matrix `M` of a change in `P[i][i]`, given `lambda_ij` per partner.
///
/// * row `i`: `M[i][i] = 1`, `M[i][t] = -P[i][t] / (1 - P[i][i])`;
/// * column `i`: `M[s][i] = -lambda_is P[i][s] / (1 - P[i][i])`;
/// * elsewhere: `M[s][t] = lambda_is P[i][s] P[s][t] / ((1 - P[i][i]) (1 - P[s][i]))`.
///
/// Every row sums to zero. The `1 - P` denominators are evaluated as sums of
/// the remaining row entries.
pub fn globalization_m_with(
    p: &TradeMatrix,
    i: usize,
    lambdas: &[f64],
) -> Result<DMatrix<f64>, SensitivityError> {
    let n = p.n();
    if n < 2 {
        return Err(SensitivityError::TooFewCountries(n));
    }
    if i >= n {
        return Err(SensitivityError::OutOfRange(i));
    }
    if let Some(&bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(SensitivityError::InvalidLambda(bad));
    }
    // sum_{t != col} P[row][t]
    let off_sum = |row: usize, col: usize| -> f64 {
        (0..n).filter(|&t| t != col).map(|t| p.entry(row, t)).sum()
    };

    let d_i = off_sum(i, i);
    if !(d_i > DENOMINATOR_TOL) {
        return Err(SensitivityError::DegenerateDenominator(i));
    }
    let mut m = DMatrix::zeros(n, n);
    for t in (0..n).filter(|&t| t != i) {
        m[(i, t)] = -p.entry(i, t) / d_i;
    }
    m[(i, i)] = 1.0;

    for s in (0..n).filter(|&s| s != i) {
        let reaction = lambdas[s] * p.entry(i, s) / d_i;
        if reaction == 0.0 {
            continue;
        }
        let d_s = off_sum(s, i);
        if !(d_s > DENOMINATOR_TOL) {
            return Err(SensitivityError::DegenerateDenominator(s));
        }
        for t in (0..n).filter(|&t| t != i) {
            m[(s, t)] = reaction * p.entry(s, t) / d_s;
        }
        m[(s, i)] = -reaction;
    }
    Ok(m)
}

pub fn tradewar_derivative(
    p: &TradeMatrix,
    pi: &AuthorityVector,
    i: usize,
    j: usize,
    rule: ReactionRule,
) -> Result<SensitivityResult, SensitivityError> {
    SensitivityEngine::new(p, pi).tradewar(i, j, rule)
}

pub fn globalization_m(
    p: &TradeMatrix,
    pi: &AuthorityVector,
    i: usize,
    rule: ReactionRule,
) -> Result<DMatrix<f64>, SensitivityError> {
    SensitivityEngine::new(p, pi).globalization_m(i, rule)
}

pub fn globalization_derivative(
    p: &TradeMatrix,
    pi: &AuthorityVector,
    i: usize,
    rule: ReactionRule,
) -> Result<SensitivityResult, SensitivityError> {
    SensitivityEngine::new(p, pi).globalization(i, rule)
}
