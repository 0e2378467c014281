//! Decision outputs built on the sensitivities.
//!
//! A country `i` gains from cutting imports from `j` when the log-elasticity
//! of `pi_i` with respect to `P[j][i]` is significantly negative, and should
//! seek cooperation when it is significantly positive. The globalization rule
//! asks the same question of `P[i][i]` under both extreme reactions,
//! `lambda = pi ratio` and `lambda = GDP ratio`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::authority::{ratios, SolveError};
use crate::sensitivity::{ReactionRule, SensitivityEngine, SensitivityError, SensitivityResult};
use crate::trade_matrix::CountryCode;

/// Significance bar for trade-war elasticities.
pub const TRADE_WAR_THRESHOLD: f64 = 0.05;
/// Significance bar for globalization elasticities.
pub const GLOBALIZATION_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stance {
    Conflict,
    Cooperate,
    Neutral,
}

impl Stance {
    pub fn classify(elasticity: f64, threshold: f64) -> Self {
        if elasticity < -threshold {
            Stance::Conflict
        } else if elasticity > threshold {
            Stance::Cooperate
        } else {
            Stance::Neutral
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stance::Conflict => "conflict",
            Stance::Cooperate => "cooperate",
            Stance::Neutral => "neutral",
        }
    }
}

/// How `i` should treat partner `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartnerClassification {
    pub actor: CountryCode,
    pub partner: CountryCode,
    pub stance: Stance,
    /// Log-elasticity of `pi_actor` with respect to `P[partner][actor]`.
    pub elasticity: f64,
    pub derivative: f64,
    pub lambda: f64,
    /// `P[partner][actor]`; zero means the elasticity is undefined and reported as 0.
    pub base_entry: f64,
    pub threshold: f64,
    pub status_quo: bool,
}

fn classification(
    engine: &SensitivityEngine<'_>,
    r: &SensitivityResult,
    i: usize,
    j: usize,
    threshold: f64,
) -> PartnerClassification {
    let codes = engine.matrix().index().codes();
    let elasticity = r.self_elasticity().unwrap_or(0.0);
    PartnerClassification {
        actor: codes[i],
        partner: codes[j],
        stance: Stance::classify(elasticity, threshold),
        elasticity,
        derivative: r.self_derivative(),
        lambda: match r.lambda_used {
            crate::sensitivity::LambdaUsed::Single(l) => l,
            crate::sensitivity::LambdaUsed::PerPartner(ref v) => v[j],
        },
        base_entry: r.base_entry,
        threshold,
        status_quo: r.status_quo,
    }
}

pub fn classify_partner(
    engine: &SensitivityEngine<'_>,
    i: usize,
    j: usize,
    rule: ReactionRule,
    threshold: f64,
) -> Result<PartnerClassification, SensitivityError> {
    let r = engine.tradewar(i, j, rule)?;
    if r.base_entry == 0.0 {
        return Err(SensitivityError::ZeroBaseEntry);
    }
    if r.log_elasticities.is_none() {
        return Err(SensitivityError::ZeroAuthority(i));
    }
    Ok(classification(engine, &r, i, j, threshold))
}

/// Every partner of `i`, most negative elasticity (top conflict target)
/// first, ties by code. Partners `i` does not import from get elasticity 0.
pub fn rank_targets(
    engine: &SensitivityEngine<'_>,
    i: usize,
    rule: ReactionRule,
    threshold: f64,
) -> Result<Vec<PartnerClassification>, SensitivityError> {
    let n = engine.matrix().n();
    let mut out = (0..n)
        .filter(|&j| j != i)
        .map(|j| {
            engine
                .tradewar(i, j, rule)
                .map(|r| classification(engine, &r, i, j, threshold))
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| {
        a.elasticity
            .total_cmp(&b.elasticity)
            .then_with(|| a.partner.cmp(&b.partner))
    });
    Ok(out)
}

/// The settlement `lambda = (pi_j / pi_i + gdp_j / gdp_i) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointResolution {
    pub actor: Option<CountryCode>,
    pub partner: Option<CountryCode>,
    pub authority_ratio: f64,
    pub gdp_ratio: f64,
    pub midpoint: f64,
    /// Dollars of `j`'s import cut per dollar of `i`'s import cut:
    /// `midpoint * gdp_i / gdp_j`.
    pub dollar_for_dollar: f64,
}

impl MidpointResolution {
    /// From the two ratios `pi_j / pi_i` and `gdp_j / gdp_i`.
    pub fn from_ratios(authority_ratio: f64, gdp_ratio: f64) -> Self {
        let midpoint = (authority_ratio + gdp_ratio) / 2.0;
        MidpointResolution {
            actor: None,
            partner: None,
            authority_ratio,
            gdp_ratio,
            midpoint,
            dollar_for_dollar: midpoint / gdp_ratio,
        }
    }
}

pub fn midpoint_resolution(
    engine: &SensitivityEngine<'_>,
    i: usize,
    j: usize,
) -> Result<MidpointResolution, SolveError> {
    let r = ratios(&engine.authority().pi, engine.matrix().gdp(), i, j)?;
    let codes = engine.matrix().index().codes();
    Ok(MidpointResolution {
        actor: Some(codes[i]),
        partner: Some(codes[j]),
        ..MidpointResolution::from_ratios(r.authority_ratio, r.gdp_ratio)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Effect {
    Gain,
    Loss,
    None,
}

impl Effect {
    fn of(d: f64) -> Self {
        match d.partial_cmp(&0.0) {
            Some(Ordering::Greater) => Effect::Gain,
            Some(Ordering::Less) => Effect::Loss,
            _ => Effect::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideEffect {
    pub country: CountryCode,
    pub derivative: f64,
    pub elasticity: f64,
    /// Effect of an increase in the perturbed entry.
    pub effect: Effect,
}

/// Response of every country's authority to one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideEffectReport {
    pub actor: CountryCode,
    pub target: Option<CountryCode>,
    pub rule: ReactionRule,
    pub base_entry: f64,
    pub status_quo: bool,
    /// Sum of the raw derivatives; zero up to rounding.
    pub derivative_sum: f64,
    /// ISO-3 ascending.
    pub rows: Vec<SideEffect>,
}

impl SideEffectReport {
    pub fn from_result(engine: &SensitivityEngine<'_>, r: &SensitivityResult) -> Self {
        let codes = engine.matrix().index().codes();
        let zeros = vec![0.0; r.d_pi.len()];
        let elasticities = r.log_elasticities.as_ref().unwrap_or(&zeros);
        let (actor, target) = match r.kind {
            crate::sensitivity::PerturbationKind::TradeWar { actor, target } => {
                (actor, Some(codes[target]))
            }
            crate::sensitivity::PerturbationKind::Globalization { country } => (country, None),
        };
        SideEffectReport {
            actor: codes[actor],
            target,
            rule: r.rule,
            base_entry: r.base_entry,
            status_quo: r.status_quo,
            derivative_sum: r.d_pi.iter().sum(),
            rows: codes
                .iter()
                .zip(&r.d_pi)
                .zip(elasticities)
                .map(|((&country, &derivative), &elasticity)| SideEffect {
                    country,
                    derivative,
                    elasticity,
                    effect: Effect::of(derivative),
                })
                .collect(),
        }
    }

    pub fn row(&self, code: &str) -> Option<&SideEffect> {
        self.rows.iter().find(|r| r.country.as_str() == code)
    }
}

/// Elasticities of every country when `i` retaliates-adjusted cuts imports from `j`.
pub fn side_effects(
    engine: &SensitivityEngine<'_>,
    i: usize,
    j: usize,
    rule: ReactionRule,
) -> Result<SideEffectReport, SensitivityError> {
    let r = engine.tradewar(i, j, rule)?;
    Ok(SideEffectReport::from_result(engine, &r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Globalize,
    Protect,
    Indeterminate,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::Globalize => "globalize",
            Orientation::Protect => "protect",
            Orientation::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalizationStance {
    pub country: CountryCode,
    pub stance: Orientation,
    /// Own log-elasticity with respect to `P[i][i]` at `lambda = GDP ratio`.
    pub elasticity_at_gdp_rule: f64,
    /// Same at `lambda = pi ratio`.
    pub elasticity_at_authority_rule: f64,
    pub threshold: f64,
}

impl GlobalizationStance {
    pub fn classify(at_gdp: f64, at_authority: f64, threshold: f64) -> Orientation {
        if at_gdp < -threshold && at_authority < -threshold {
            Orientation::Globalize
        } else if at_gdp > threshold && at_authority > threshold {
            Orientation::Protect
        } else {
            Orientation::Indeterminate
        }
    }
}

fn own_elasticity(r: &SensitivityResult, i: usize) -> Result<f64, SensitivityError> {
    if r.base_entry == 0.0 {
        return Err(SensitivityError::ZeroBaseEntry);
    }
    r.self_elasticity()
        .ok_or(SensitivityError::ZeroAuthority(i))
}

pub fn globalization_stance(
    engine: &SensitivityEngine<'_>,
    i: usize,
    threshold: f64,
) -> Result<GlobalizationStance, SensitivityError> {
    let at_gdp = own_elasticity(&engine.globalization(i, ReactionRule::GdpRatio)?, i)?;
    let at_authority = own_elasticity(&engine.globalization(i, ReactionRule::AuthorityRatio)?, i)?;
    Ok(GlobalizationStance {
        country: engine.matrix().index().code(i),
        stance: GlobalizationStance::classify(at_gdp, at_authority, threshold),
        elasticity_at_gdp_rule: at_gdp,
        elasticity_at_authority_rule: at_authority,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::authority::solve;
    use crate::trade_matrix::TradeMatrix;

    fn fixture() -> TradeMatrix {
        TradeMatrix::from_rows(
            &["AAA", "BBB", "CCC", "DDD"],
            &[
                vec![0.7, 0.1, 0.15, 0.05],
                vec![0.2, 0.6, 0.1, 0.1],
                vec![0.1, 0.05, 0.8, 0.05],
                vec![0.05, 0.05, 0.0, 0.9],
            ],
            &[4.0, 2.0, 3.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn stance_thresholds() {
        assert_eq!(Stance::classify(-0.06, 0.05), Stance::Conflict);
        assert_eq!(Stance::classify(-0.05, 0.05), Stance::Neutral);
        assert_eq!(Stance::classify(0.0, 0.05), Stance::Neutral);
        assert_eq!(Stance::classify(0.051, 0.05), Stance::Cooperate);
    }

    #[test]
    fn status_quo_is_neutral() {
        let p = fixture();
        let pi = solve(&p).unwrap();
        let e = SensitivityEngine::new(&p, &pi);
        let c =
            classify_partner(&e, 0, 1, ReactionRule::AuthorityRatio, TRADE_WAR_THRESHOLD).unwrap();
        assert_eq!((c.elasticity, c.stance), (0.0, Stance::Neutral));
        assert!(c.status_quo);
    }

    #[test]
    fn zero_import_share_is_an_error_for_a_single_partner() {
        let p = fixture();
        let pi = solve(&p).unwrap();
        let e = SensitivityEngine::new(&p, &pi);
        // DDD exports nothing to CCC
        assert_eq!(
            classify_partner(&e, 2, 3, ReactionRule::GdpRatio, 0.05).unwrap_err(),
            SensitivityError::ZeroBaseEntry
        );
        let ranked = rank_targets(&e, 2, ReactionRule::GdpRatio, 0.05).unwrap();
        let ddd = ranked.iter().find(|c| c.partner.as_str() == "DDD").unwrap();
        assert_eq!((ddd.elasticity, ddd.stance), (0.0, Stance::Neutral));
    }

    #[test]
    fn authority_rule_ranking_is_code_order() {
        let p = fixture();
        let pi = solve(&p).unwrap();
        let e = SensitivityEngine::new(&p, &pi);
        let ranked = rank_targets(&e, 1, ReactionRule::AuthorityRatio, 0.05).unwrap();
        let order: Vec<&str> = ranked.iter().map(|c| c.partner.as_str()).collect();
        assert_eq!(order, ["AAA", "CCC", "DDD"]);
        assert!(ranked.iter().all(|c| c.stance == Stance::Neutral));
    }

    #[test]
    fn ranking_is_sorted() {
        let p = fixture();
        let pi = solve(&p).unwrap();
        let e = SensitivityEngine::new(&p, &pi);
        for i in 0..4 {
            let ranked = rank_targets(&e, i, ReactionRule::GdpRatio, 0.05).unwrap();
            assert_eq!(ranked.len(), 3);
            assert!(ranked
                .windows(2)
                .all(|w| w[0].elasticity <= w[1].elasticity));
        }
    }

    #[test]
    fn midpoint_arithmetic() {
        let m = MidpointResolution::from_ratios(0.2829, 0.6215);
        assert_eq!(format!("{:.4}", m.midpoint), "0.4522");
        assert_eq!(format!("{:.4}", m.dollar_for_dollar), "0.7276");
        let sym = MidpointResolution::from_ratios(1.0, 1.0);
        assert_eq!((sym.midpoint, sym.dollar_for_dollar), (1.0, 1.0));
    }

    #[test]
    fn side_effects_sum_to_zero_and_vanish_at_status_quo() {
        let p = fixture();
        let pi = solve(&p).unwrap();
        let e = SensitivityEngine::new(&p, &pi);
        let r = side_effects(&e, 0, 2, ReactionRule::GdpRatio).unwrap();
        assert!(r.derivative_sum.abs() < 1e-10);
        assert_eq!(r.rows.len(), 4);
        let quo = side_effects(&e, 0, 2, ReactionRule::AuthorityRatio).unwrap();
        assert!(quo
            .rows
            .iter()
            .all(|row| row.elasticity == 0.0 && row.effect == Effect::None));
    }

    #[test]
    fn orientation_rule() {
        assert_eq!(
            GlobalizationStance::classify(-0.2, -0.03, 0.01),
            Orientation::Globalize
        );
        assert_eq!(
            GlobalizationStance::classify(0.9, -0.28, 0.01),
            Orientation::Indeterminate
        );
        assert_eq!(
            GlobalizationStance::classify(0.9, 0.28, 0.01),
            Orientation::Protect
        );
        assert_eq!(
            GlobalizationStance::classify(-0.2, -0.03, 0.05),
            Orientation::Indeterminate
        );
    }

    #[test]
    fn stance_reports_both_elasticities() {
        let p = fixture();
        let pi = solve(&p).unwrap();
        let e = SensitivityEngine::new(&p, &pi);
        let s = globalization_stance(&e, 0, GLOBALIZATION_THRESHOLD).unwrap();
        assert_eq!(
            s.stance,
            GlobalizationStance::classify(
                s.elasticity_at_gdp_rule,
                s.elasticity_at_authority_rule,
                0.01
            )
        );
        assert_ne!(s.elasticity_at_gdp_rule, s.elasticity_at_authority_rule);
    }
}
