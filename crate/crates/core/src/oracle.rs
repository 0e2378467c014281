//! Finite-difference oracle for the analytic derivatives.
//!
//! Every derivative from [`crate::sensitivity`] is checked against the central
//! difference `(pi(P + hD) - pi(P - hD)) / 2h`, where `D` is the perturbation
//! direction. The two perturbed equilibria are solved in double-double
//! arithmetic by a separate Gaussian elimination, so the difference quotient
//! carries no cancellation noise at `h = 1e-7` and shares no code with the
//! reduced-system formulas under test.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use twofloat::TwoFloat;

use crate::authority::{solve, AuthorityVector};
use crate::sensitivity::{
    globalization_m_with, PerturbationKind, ReactionRule, SensitivityEngine, SensitivityError,
    SensitivityResult,
};
use crate::trade_matrix::{CountryIndex, TradeMatrix};

pub const DEFAULT_STEP: f64 = 1e-7;
pub const REL_TOL: f64 = 1e-6;
pub const ABS_TOL: f64 = 1e-12;
/// Below this magnitude the analytic value is compared in absolute terms.
pub const ABS_FLOOR: f64 = 1e-9;

/// `lambda` sweep `{0, gdp ratio, authority ratio, 2.5}`.
pub const SWEEP_RULES: [ReactionRule; 4] = [
    ReactionRule::Explicit(0.0),
    ReactionRule::GdpRatio,
    ReactionRule::AuthorityRatio,
    ReactionRule::Explicit(2.5),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("step {h:e} moves P[{row}][{col}] outside [0, 1]")]
    StepTooLarge { row: usize, col: usize, h: f64 },
    #[error("direction has {found} rows, matrix has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("perturbed equilibrium system is singular")]
    SingularPerturbed,
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
}

/// Direction `D` of a one-parameter perturbation `P + theta D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub direction: DMatrix<f64>,
}

impl Perturbation {
    /// `P_ji += 1`, `P_jj -= 1`, `P_ij += lambda`, `P_ii -= lambda`.
    pub fn tradewar(n: usize, i: usize, j: usize, lambda: f64) -> Self {
        let mut d = DMatrix::zeros(n, n);
        d[(j, i)] = 1.0;
        d[(j, j)] = -1.0;
        d[(i, j)] = lambda;
        d[(i, i)] = -lambda;
        Perturbation {
            kind: PerturbationKind::TradeWar {
                actor: i,
                target: j,
            },
            direction: d,
        }
    }

    /// `D = M` for globalization of `i` with per-partner `lambda_ij`.
    pub fn globalization(p: &TradeMatrix, i: usize, lambdas: &[f64]) -> Result<Self, OracleError> {
        Ok(Perturbation {
            kind: PerturbationKind::Globalization { country: i },
            direction: globalization_m_with(p, i, lambdas)?,
        })
    }

    /// Largest `h` for which both `P + hD` and `P - hD` stay in `[0, 1]`.
    pub fn max_step(&self, p: &TradeMatrix) -> f64 {
        let mut h = f64::INFINITY;
        for ((r, c), &d) in self.entries() {
            if d != 0.0 {
                let x = p.entry(r, c);
                h = h.min(x.min(1.0 - x) / d.abs());
            }
        }
        h
    }

    /// `P + hD` with entries checked against `[0, 1]`.
    pub fn apply(&self, p: &TradeMatrix, h: f64) -> Result<TradeMatrix, OracleError> {
        self.check_shape(p)?;
        let mut out = p.p().clone();
        for ((r, c), &d) in self.entries() {
            if d != 0.0 {
                let v = p.entry(r, c) + h * d;
                if !(0.0..=1.0).contains(&v) {
                    return Err(OracleError::StepTooLarge { row: r, col: c, h });
                }
                out[(r, c)] = v;
            }
        }
        Ok(p.with_matrix(out)
            .expect("row sums preserved by a zero-sum direction"))
    }

    fn entries(&self) -> impl Iterator<Item = ((usize, usize), &f64)> {
        let n = self.direction.nrows();
        self.direction
            .iter()
            .enumerate()
            .map(move |(k, d)| ((k % n, k / n), d))
    }

    fn check_shape(&self, p: &TradeMatrix) -> Result<(), OracleError> {
        if self.direction.nrows() != p.n() || self.direction.ncols() != p.n() {
            return Err(OracleError::Dimension {
                expected: p.n(),
                found: self.direction.nrows(),
            });
        }
        Ok(())
    }
}

pub fn perturb_tradewar(
    p: &TradeMatrix,
    i: usize,
    j: usize,
    lambda: f64,
    h: f64,
) -> Result<TradeMatrix, OracleError> {
    Perturbation::tradewar(p.n(), i, j, lambda).apply(p, h)
}

pub fn perturb_globalization(
    p: &TradeMatrix,
    pi: &AuthorityVector,
    i: usize,
    rule: ReactionRule,
    h: f64,
) -> Result<TradeMatrix, OracleError> {
    let lambdas = SensitivityEngine::new(p, pi).globalization_lambdas(i, rule);
    Perturbation::globalization(p, i, &lambdas)?.apply(p, h)
}

/// `a / b` to full double-double precision by long division;
/// `TwoFloat`'s own quotient drops to roughly `f64` accuracy.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// Equilibrium of `P + hD` in double-double precision, `P + hD` formed
/// without rounding to `f64`.
fn dd_equilibrium(
    p: &DMatrix<f64>,
    d: &DMatrix<f64>,
    h: f64,
) -> Result<Vec<TwoFloat>, OracleError> {
    let n = p.nrows();
    let zero = TwoFloat::from(0.0);
    let one = TwoFloat::from(1.0);
    let h = TwoFloat::from(h);
    // rows: (I - P_h)' with the last equation replaced by sum(x) = 1
    let mut a: Vec<Vec<TwoFloat>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    if r == n - 1 {
                        return one;
                    }
                    let entry = TwoFloat::from(p[(c, r)]) + h * d[(c, r)];
                    if r == c {
                        one - entry
                    } else {
                        -entry
                    }
                })
                .collect()
        })
        .collect();
    let mut b = vec![zero; n];
    b[n - 1] = one;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                a[x][col]
                    .abs()
                    .partial_cmp(&a[y][col].abs())
                    .expect("finite")
            })
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-14 {
            return Err(OracleError::SingularPerturbed);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = dd_div(a[row][col], a[col][col]);
            if f == zero {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[row][c] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![zero; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = dd_div(s, a[row][row]);
    }
    let total = x.iter().fold(zero, |acc, &v| acc + v);
    Ok(x.into_iter().map(|v| dd_div(v, total)).collect())
}

/// Central difference `(pi(P + hD) - pi(P - hD)) / 2h`.
pub fn fd_derivative(
    p: &TradeMatrix,
    perturbation: &Perturbation,
    h: f64,
) -> Result<Vec<f64>, OracleError> {
    perturbation.check_shape(p)?;
    let n = p.n();
    if perturbation.direction.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n]);
    }
    perturbation.apply(p, h)?;
    perturbation.apply(p, -h)?;
    let plus = dd_equilibrium(p.p(), &perturbation.direction, h)?;
    let minus = dd_equilibrium(p.p(), &perturbation.direction, -h)?;
    let two_h = TwoFloat::from(2.0) * h;
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(a, b)| f64::from(dd_div(*a - *b, two_h)))
        .collect())
}

/// Step used for a direction: `DEFAULT_STEP`-sized, reduced so that no touched
/// entry comes within `10h` of the `[0, 1]` boundary. `None` when a touched
/// entry sits on the boundary.
pub fn choose_step(p: &TradeMatrix, perturbation: &Perturbation, h: f64) -> Option<f64> {
    let room = perturbation.max_step(p);
    if room == 0.0 {
        None
    } else if room < 10.0 * h {
        Some(room / 10.0)
    } else {
        Some(h)
    }
}

/// Worst-case hybrid error: relative where `|a| > ABS_FLOOR`, absolute elsewhere.
pub fn compare(analytic: &[f64], numeric: &[f64]) -> (f64, f64) {
    let mut rel: f64 = 0.0;
    let mut abs: f64 = 0.0;
    for (&a, &f) in analytic.iter().zip(numeric) {
        let e = (a - f).abs();
        if a.abs() > ABS_FLOOR {
            rel = rel.max(e / a.abs());
        } else {
            abs = abs.max(e);
        }
    }
    (rel, abs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub label: String,
    pub kind: Option<PerturbationKind>,
    pub rule: Option<ReactionRule>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub h_used: f64,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub passed: bool,
    /// Reason the case was not checked; skipped cases count as passed.
    pub skipped: Option<String>,
}

impl OracleReport {
    fn skipped(
        label: String,
        kind: Option<PerturbationKind>,
        rule: Option<ReactionRule>,
        reason: String,
    ) -> Self {
        OracleReport {
            label,
            kind,
            rule,
            analytic: Vec::new(),
            numeric: Vec::new(),
            h_used: 0.0,
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            passed: true,
            skipped: Some(reason),
        }
    }

    fn failed(label: String, kind: PerturbationKind, rule: ReactionRule, reason: String) -> Self {
        OracleReport {
            passed: false,
            ..Self::skipped(label, Some(kind), Some(rule), reason)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub tradewar: bool,
    pub globalization: bool,
    /// Test hook: skews every analytic vector before comparison.
    #[doc(hidden)]
    pub corrupt_analytic: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            step: DEFAULT_STEP,
            rel_tol: REL_TOL,
            abs_tol: ABS_TOL,
            tradewar: true,
            globalization: true,
            corrupt_analytic: false,
        }
    }
}

/// Compares one analytic result with its finite difference.
pub fn check_case(
    p: &TradeMatrix,
    perturbation: &Perturbation,
    analytic: &SensitivityResult,
    label: String,
    opts: &VerifyOptions,
) -> OracleReport {
    let (kind, rule) = (perturbation.kind, analytic.rule);
    let Some(h) = choose_step(p, perturbation, opts.step) else {
        return OracleReport::skipped(
            label,
            Some(kind),
            Some(rule),
            "perturbed entry on the [0, 1] boundary".into(),
        );
    };
    let numeric = match fd_derivative(p, perturbation, h) {
        Ok(v) => v,
        Err(e) => return OracleReport::failed(label, kind, rule, e.to_string()),
    };
    let mut values = analytic.d_pi.clone();
    if opts.corrupt_analytic {
        values.iter_mut().for_each(|v| *v = *v * 1.01 + 1e-6);
    }
    let (max_rel_err, max_abs_err) = compare(&values, &numeric);
    OracleReport {
        label,
        kind: Some(kind),
        rule: Some(rule),
        passed: max_rel_err <= opts.rel_tol && max_abs_err <= opts.abs_tol,
        analytic: values,
        numeric,
        h_used: h,
        max_rel_err,
        max_abs_err,
        skipped: None,
    }
}

/// Checks every trade-war pair and every globalization move of `p` under
/// each rule. Failures are reported, never returned as errors.
pub fn verify_all(
    p: &TradeMatrix,
    rules: &[ReactionRule],
    opts: &VerifyOptions,
) -> Vec<OracleReport> {
    let pi = match solve(p) {
        Ok(pi) => pi,
        Err(e) => {
            return vec![OracleReport::skipped(
                "equilibrium".into(),
                None,
                None,
                e.to_string(),
            )]
        }
    };
    let engine = SensitivityEngine::new(p, &pi);
    let n = p.n();
    let codes = p.index().codes();

    let mut cases: Vec<(PerturbationKind, ReactionRule)> = Vec::new();
    for &rule in rules {
        if opts.tradewar {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    cases.push((
                        PerturbationKind::TradeWar {
                            actor: i,
                            target: j,
                        },
                        rule,
                    ));
                }
            }
        }
        if opts.globalization {
            cases.extend((0..n).map(|i| (PerturbationKind::Globalization { country: i }, rule)));
        }
    }

    cases
        .par_iter()
        .map(|&(kind, rule)| {
            let (label, analytic, perturbation) = match kind {
                PerturbationKind::TradeWar { actor, target } => {
                    let label =
                        format!("tradewar {}->{} lambda={rule}", codes[actor], codes[target]);
                    let analytic = engine.tradewar(actor, target, rule);
                    let lambda = rule.lambda(&pi.pi, p.gdp(), target, actor);
                    (
                        label,
                        analytic,
                        Ok(Perturbation::tradewar(n, actor, target, lambda)),
                    )
                }
                PerturbationKind::Globalization { country } => {
                    let label = format!("globalization {} lambda={rule}", codes[country]);
                    let analytic = engine.globalization(country, rule);
                    let lambdas = engine.globalization_lambdas(country, rule);
                    (
                        label,
                        analytic,
                        Perturbation::globalization(p, country, &lambdas),
                    )
                }
            };
            match (analytic, perturbation) {
                (Ok(a), Ok(pert)) => check_case(p, &pert, &a, label, opts),
                (Err(e), _) => OracleReport::skipped(label, Some(kind), Some(rule), e.to_string()),
                (_, Err(e)) => OracleReport::skipped(label, Some(kind), Some(rule), e.to_string()),
            }
        })
        .collect()
}

/// Runs [`verify_all`] on `random_trade_matrix(n, seed)` for every size and seed.
pub fn verify_random(
    sizes: &[usize],
    seeds: std::ops::Range<u64>,
    rules: &[ReactionRule],
    opts: &VerifyOptions,
) -> Vec<OracleReport> {
    let mut out = Vec::new();
    for &n in sizes {
        for seed in seeds.clone() {
            let p = random_trade_matrix(n, seed);
            out.extend(verify_all(&p, rules, opts).into_iter().map(|mut r| {
                r.label = format!("random n={n} seed={seed} {}", r.label);
                r
            }));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub checked: usize,
    pub skipped: usize,
    pub failed: usize,
    pub worst_rel_err: f64,
    pub worst_abs_err: f64,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

pub fn summarize(reports: &[OracleReport]) -> OracleSummary {
    let mut s = OracleSummary {
        checked: 0,
        skipped: 0,
        failed: 0,
        worst_rel_err: 0.0,
        worst_abs_err: 0.0,
    };
    for r in reports {
        if r.skipped.is_some() && r.passed {
            s.skipped += 1;
            continue;
        }
        s.checked += 1;
        if !r.passed {
            s.failed += 1;
        }
        s.worst_rel_err = s.worst_rel_err.max(r.max_rel_err);
        s.worst_abs_err = s.worst_abs_err.max(r.max_abs_err);
    }
    s
}

/// Three-letter synthetic codes `AAA`, `AAB`, ... for generated fixtures.
pub fn synthetic_codes(n: usize) -> Vec<String> {
    (0..n)
        .map(|k| {
            let l = |d: usize| (b'A' + (d % 26) as u8) as char;
            [l(k / 676), l(k / 26), l(k)].iter().collect()
        })
        .collect()
}

/// Dense random exposure matrix: diagonal in `[0.2, 0.9]`, every off-diagonal
/// entry strictly positive, GDP in `[1, 5]`. Strongly connected and aperiodic.
pub fn random_trade_matrix(n: usize, seed: u64) -> TradeMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let stay: f64 = if n == 1 {
            1.0
        } else {
            rng.random_range(0.2..0.9)
        };
        let weights: Vec<f64> = (0..n)
            .map(|j| {
                if j == i {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            p[(i, j)] = (1.0 - stay) * weights[j] / total;
            off += p[(i, j)];
        }
        p[(i, i)] = 1.0 - off;
    }
    let gdp: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
    let codes = synthetic_codes(n);
    let refs: Vec<&str> = codes.iter().map(String::as_str).collect();
    let index = CountryIndex::from_strs(&refs).expect("distinct codes");
    TradeMatrix::new(index, p, gdp).expect("valid by construction")
}

/// Explicit proportional response to `P_ii -> P_ii + theta`: `i` scales its
/// exports to keep the row stochastic, each partner `s` answers with
/// `lambda_is` times `i`'s change on `P_si` and rescales the rest of its row.
/// Its derivative at `theta = 0` is the globalization matrix `M`.
pub fn proportional_response(
    p: &TradeMatrix,
    i: usize,
    lambdas: &[f64],
    theta: f64,
) -> DMatrix<f64> {
    let n = p.n();
    let mut out = p.p().clone();
    let exports_i = 1.0 - p.entry(i, i);
    for t in (0..n).filter(|&t| t != i) {
        out[(i, t)] = p.entry(i, t) * (exports_i - theta) / exports_i;
    }
    out[(i, i)] = p.entry(i, i) + theta;
    for s in (0..n).filter(|&s| s != i) {
        let change = out[(i, s)] - p.entry(i, s);
        let reaction = lambdas[s] * change;
        let rest = 1.0 - p.entry(s, i);
        for t in (0..n).filter(|&t| t != i) {
            out[(s, t)] = p.entry(s, t) * (rest - reaction) / rest;
        }
        out[(s, i)] = p.entry(s, i) + reaction;
    }
    out
}
