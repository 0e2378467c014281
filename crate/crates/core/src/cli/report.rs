use serde::{Deserialize, Serialize};

use super::Loaded;
use crate::authority::ratios;
use crate::oracle::{summarize, OracleReport, OracleSummary};
use crate::policy::{
    GlobalizationStance, MidpointResolution, PartnerClassification, SideEffectReport,
};
use crate::sensitivity::ReactionRule;
use crate::trade_matrix::{ConnectivityReport, CountryCode};

/// Moves rows named in `order` to the front in that order; the rest keep
/// their (ISO-3 ascending) order.
pub(crate) fn reorder<T>(rows: &mut [T], key: impl Fn(&T) -> CountryCode, order: &[CountryCode]) {
    let rank = |c: CountryCode| order.iter().position(|o| *o == c).unwrap_or(order.len());
    rows.sort_by(|a, b| {
        rank(key(a))
            .cmp(&rank(key(b)))
            .then_with(|| key(a).cmp(&key(b)))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorityRow {
    pub country: CountryCode,
    pub pi: f64,
    pub gdp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub actor: CountryCode,
    pub partner: CountryCode,
    /// `pi_partner / pi_actor`
    pub authority_ratio: f64,
    /// `gdp_partner / gdp_actor`
    pub gdp_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorityReport {
    pub year: Option<i32>,
    pub countries: Vec<AuthorityRow>,
    pub residual: f64,
    pub connectivity: ConnectivityReport,
    pub ratios: Option<Vec<RatioRow>>,
}

impl AuthorityReport {
    pub(crate) fn build(data: &Loaded, with_ratios: bool, order: &[CountryCode]) -> Self {
        let p = &data.matrix;
        let codes = p.index().codes();
        let n = p.n();
        let mut countries: Vec<AuthorityRow> = (0..n)
            .map(|k| AuthorityRow {
                country: codes[k],
                pi: data.pi.pi[k],
                gdp: p.gdp()[k],
            })
            .collect();
        reorder(&mut countries, |r| r.country, order);
        let ratios = with_ratios.then(|| {
            let mut rows = Vec::new();
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    if let Ok(r) = ratios(&data.pi.pi, p.gdp(), i, j) {
                        rows.push(RatioRow {
                            actor: codes[i],
                            partner: codes[j],
                            authority_ratio: r.authority_ratio,
                            gdp_ratio: r.gdp_ratio,
                        });
                    }
                }
            }
            let rank = |c: CountryCode| order.iter().position(|o| *o == c).unwrap_or(order.len());
            rows.sort_by_key(|r| (rank(r.actor), r.actor, rank(r.partner), r.partner));
            rows
        });
        AuthorityReport {
            year: data.year,
            countries,
            residual: data.pi.residual,
            connectivity: data.connectivity.clone(),
            ratios,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeWarReport {
    pub year: Option<i32>,
    pub actor: CountryCode,
    pub target: CountryCode,
    pub rule: ReactionRule,
    /// `lambda_ji` used for the target's reaction.
    pub lambda: f64,
    pub threshold: f64,
    pub classification: PartnerClassification,
    pub side_effects: SideEffectReport,
    pub midpoint: MidpointResolution,
    /// All partners of the actor, most negative elasticity first.
    pub targets: Vec<PartnerClassification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalizationReport {
    pub year: Option<i32>,
    pub country: CountryCode,
    pub threshold: f64,
    pub stance: GlobalizationStance,
    pub authority_rule: SideEffectReport,
    pub gdp_rule: SideEffectReport,
    /// Effects under an explicitly requested third rule.
    pub requested: Option<SideEffectReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub fixtures: OracleSummary,
    pub loaded: Option<OracleSummary>,
    pub failures: Vec<OracleReport>,
    pub skipped: Vec<SkippedCase>,
}

impl VerifyReport {
    pub(crate) fn build(fixtures: &[OracleReport], loaded: Option<&[OracleReport]>) -> Self {
        let all = fixtures.iter().chain(loaded.into_iter().flatten());
        let failures: Vec<OracleReport> = all.clone().filter(|r| !r.passed).cloned().collect();
        let skipped = all
            .filter(|r| r.passed)
            .filter_map(|r| {
                r.skipped.as_ref().map(|reason| SkippedCase {
                    label: r.label.clone(),
                    reason: reason.clone(),
                })
            })
            .collect();
        VerifyReport {
            passed: failures.is_empty(),
            fixtures: summarize(fixtures),
            loaded: loaded.map(summarize),
            failures,
            skipped,
        }
    }
}

/// Output of any subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Report {
    Authority(AuthorityReport),
    #[serde(rename = "tradewar")]
    TradeWar(TradeWarReport),
    Globalization(GlobalizationReport),
    Verify(VerifyReport),
}
