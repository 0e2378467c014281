use std::fmt::Write as _;

use clap::ValueEnum;

use super::report::{AuthorityReport, GlobalizationReport, Report, TradeWarReport, VerifyReport};
use crate::oracle::OracleSummary;
use crate::policy::SideEffectReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned text, elasticities per mille.
    Table,
    /// Raw values at full precision.
    Csv,
    /// Raw values at full precision.
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("csv output is not valid UTF-8")]
    Utf8,
}

pub fn render(report: &Report, format: Format, decimals: usize) -> Result<String, RenderError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => csv_text(report),
        Format::Table => Ok(table_text(report, decimals)),
    }
}

fn per_mille(x: f64, decimals: usize) -> String {
    format!("{:.*}", decimals, 1000.0 * x)
}

/// Left-aligned first column, right-aligned rest.
fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (k, cell) in cells.iter().enumerate() {
            if k == 0 {
                let _ = write!(s, "{:<w$}", cell, w = width[k]);
            } else {
                let _ = write!(s, "  {:>w$}", cell, w = width[k]);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(
        (0..cols)
            .map(|k| "-".repeat(width[k]))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect(),
    );
    for row in rows {
        out += &line(row.iter().map(String::as_str).collect());
    }
    out
}

fn year_suffix(year: Option<i32>) -> String {
    year.map(|y| format!(" ({y})")).unwrap_or_default()
}

fn table_text(report: &Report, d: usize) -> String {
    match report {
        Report::Authority(r) => authority_table(r, d),
        Report::TradeWar(r) => tradewar_table(r, d),
        Report::Globalization(r) => globalization_table(r, d),
        Report::Verify(r) => verify_table(r),
    }
}

fn authority_table(r: &AuthorityReport, d: usize) -> String {
    let rows: Vec<Vec<String>> = r
        .countries
        .iter()
        .map(|c| {
            vec![
                c.country.to_string(),
                format!("{:.*}", d, c.pi),
                format!("{:.*}", d, c.gdp),
            ]
        })
        .collect();
    let mut out = format!("Authority distribution{}\n\n", year_suffix(r.year));
    out += &aligned(&["country", "pi", "gdp"], &rows);
    let _ = writeln!(out, "\nresidual |pi P - pi|: {:.3e}", r.residual);
    if let Some(ratios) = &r.ratios {
        let rows: Vec<Vec<String>> = ratios
            .iter()
            .map(|x| {
                vec![
                    x.actor.to_string(),
                    x.partner.to_string(),
                    format!("{:.*}", d, x.authority_ratio),
                    format!("{:.*}", d, x.gdp_ratio),
                ]
            })
            .collect();
        out += "\nRatios against partner j\n\n";
        out += &aligned(&["i", "j", "pi_j/pi_i", "gdp_j/gdp_i"], &rows);
    }
    out
}

fn effect_rows(reports: &[&SideEffectReport], d: usize) -> Vec<Vec<String>> {
    let first = reports[0];
    (0..first.rows.len())
        .map(|k| {
            let mut row = vec![first.rows[k].country.to_string()];
            row.extend(reports.iter().map(|r| per_mille(r.rows[k].elasticity, d)));
            row
        })
        .collect()
}

fn tradewar_table(r: &TradeWarReport, d: usize) -> String {
    let c = &r.classification;
    let mut out = format!(
        "Trade war of {} on imports from {}{}\n",
        r.actor,
        r.target,
        year_suffix(r.year)
    );
    let _ = writeln!(
        out,
        "lambda rule: {}  lambda_ji = {:.*}",
        r.rule, d, r.lambda
    );
    let _ = writeln!(
        out,
        "{} elasticity: {} per mille  stance: {} (threshold {} per mille){}\n",
        r.actor,
        per_mille(c.elasticity, d),
        c.stance.as_str(),
        per_mille(r.threshold, d),
        if c.status_quo { "  [status quo]" } else { "" }
    );
    if c.base_entry == 0.0 {
        let _ = writeln!(
            out,
            "note: {} exports nothing to {}; elasticity reported as 0\n",
            r.target, r.actor
        );
    }

    out += "Side effects, 1000 x d log pi_k / d log P_ji\n\n";
    let rows: Vec<Vec<String>> = r
        .side_effects
        .rows
        .iter()
        .map(|s| {
            vec![
                s.country.to_string(),
                per_mille(s.elasticity, d),
                format!("{:?}", s.effect).to_lowercase(),
            ]
        })
        .collect();
    out += &aligned(&["country", "per mille", "effect"], &rows);

    let m = &r.midpoint;
    out += "\nMidpoint resolution\n\n";
    out += &aligned(
        &["quantity", "value"],
        &[
            vec!["pi_j/pi_i".into(), format!("{:.*}", d, m.authority_ratio)],
            vec!["gdp_j/gdp_i".into(), format!("{:.*}", d, m.gdp_ratio)],
            vec!["midpoint lambda".into(), format!("{:.*}", d, m.midpoint)],
            vec![
                "dollar for dollar".into(),
                format!("{:.*}", d, m.dollar_for_dollar),
            ],
        ],
    );

    let _ = write!(out, "\nTargets of {}, most negative first\n\n", r.actor);
    let rows: Vec<Vec<String>> = r
        .targets
        .iter()
        .map(|t| {
            vec![
                t.partner.to_string(),
                per_mille(t.elasticity, d),
                t.stance.as_str().to_string(),
            ]
        })
        .collect();
    out += &aligned(&["partner", "per mille", "stance"], &rows);
    out
}

fn globalization_table(r: &GlobalizationReport, d: usize) -> String {
    let s = &r.stance;
    let mut out = format!("Globalization of {}{}\n", r.country, year_suffix(r.year));
    let _ = writeln!(
        out,
        "own elasticity: {} per mille at lambda = pi ratio, {} per mille at lambda = gdp ratio",
        per_mille(s.elasticity_at_authority_rule, d),
        per_mille(s.elasticity_at_gdp_rule, d)
    );
    let _ = writeln!(
        out,
        "stance: {} (threshold {} per mille)\n",
        s.stance.as_str(),
        per_mille(r.threshold, d)
    );
    out += "1000 x d log pi_k / d log P_ii\n\n";
    let mut reports = vec![&r.authority_rule, &r.gdp_rule];
    let mut header = vec!["country", "pi ratio", "gdp ratio"];
    let requested_label;
    if let Some(q) = &r.requested {
        reports.push(q);
        requested_label = format!("lambda {}", q.rule);
        header.push(&requested_label);
    }
    out += &aligned(&header, &effect_rows(&reports, d));
    out
}

fn summary_line(name: &str, s: &OracleSummary) -> String {
    format!(
        "{name}: {} checked, {} skipped, {} failed; worst relative error {:.2e}, worst absolute error {:.2e}\n",
        s.checked, s.skipped, s.failed, s.worst_rel_err, s.worst_abs_err
    )
}

fn verify_table(r: &VerifyReport) -> String {
    let mut out = summary_line("random fixtures", &r.fixtures);
    if let Some(l) = &r.loaded {
        out += &summary_line("loaded matrix", l);
    }
    for s in &r.skipped {
        let _ = writeln!(out, "skipped {}: {}", s.label, s.reason);
    }
    for f in &r.failures {
        match &f.skipped {
            Some(reason) => {
                let _ = writeln!(out, "FAILED {}: {}", f.label, reason);
            }
            None => {
                let _ = writeln!(
                    out,
                    "FAILED {}: relative {:.2e}, absolute {:.2e}, h = {:.1e}",
                    f.label, f.max_rel_err, f.max_abs_err, f.h_used
                );
            }
        }
    }
    out += if r.passed {
        "verification passed\n"
    } else {
        "verification FAILED\n"
    };
    out
}

fn csv_text(report: &Report) -> Result<String, RenderError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let num = |x: f64| x.to_string();
    match report {
        Report::Authority(r) => match &r.ratios {
            None => {
                w.write_record(["country", "pi", "gdp"])?;
                for c in &r.countries {
                    w.write_record([c.country.to_string(), num(c.pi), num(c.gdp)])?;
                }
            }
            Some(ratios) => {
                w.write_record([
                    "actor",
                    "partner",
                    "pi_actor",
                    "authority_ratio",
                    "gdp_ratio",
                ])?;
                for x in ratios {
                    let pi = r
                        .countries
                        .iter()
                        .find(|c| c.country == x.actor)
                        .map_or(0.0, |c| c.pi);
                    w.write_record([
                        x.actor.to_string(),
                        x.partner.to_string(),
                        num(pi),
                        num(x.authority_ratio),
                        num(x.gdp_ratio),
                    ])?;
                }
            }
        },
        Report::TradeWar(r) => {
            w.write_record([
                "country",
                "derivative",
                "elasticity",
                "effect",
                "target_elasticity",
                "target_stance",
            ])?;
            for s in &r.side_effects.rows {
                let target = r.targets.iter().find(|t| t.partner == s.country);
                w.write_record([
                    s.country.to_string(),
                    num(s.derivative),
                    num(s.elasticity),
                    format!("{:?}", s.effect).to_lowercase(),
                    target.map(|t| num(t.elasticity)).unwrap_or_default(),
                    target
                        .map(|t| t.stance.as_str().to_string())
                        .unwrap_or_default(),
                ])?;
            }
        }
        Report::Globalization(r) => {
            let mut header = vec![
                "country".to_string(),
                "elasticity_authority_rule".into(),
                "elasticity_gdp_rule".into(),
                "derivative_authority_rule".into(),
                "derivative_gdp_rule".into(),
            ];
            if r.requested.is_some() {
                header.extend(["elasticity_requested".into(), "derivative_requested".into()]);
            }
            w.write_record(&header)?;
            for (k, a) in r.authority_rule.rows.iter().enumerate() {
                let g = &r.gdp_rule.rows[k];
                let mut row = vec![
                    a.country.to_string(),
                    num(a.elasticity),
                    num(g.elasticity),
                    num(a.derivative),
                    num(g.derivative),
                ];
                if let Some(q) = &r.requested {
                    row.extend([num(q.rows[k].elasticity), num(q.rows[k].derivative)]);
                }
                w.write_record(&row)?;
            }
        }
        Report::Verify(r) => {
            w.write_record([
                "label",
                "passed",
                "max_rel_err",
                "max_abs_err",
                "h_used",
                "note",
            ])?;
            for f in &r.failures {
                w.write_record([
                    f.label.clone(),
                    "false".into(),
                    num(f.max_rel_err),
                    num(f.max_abs_err),
                    num(f.h_used),
                    f.skipped.clone().unwrap_or_default(),
                ])?;
            }
            for s in &r.skipped {
                w.write_record([
                    s.label.clone(),
                    "true".into(),
                    "0".into(),
                    "0".into(),
                    "0".into(),
                    s.reason.clone(),
                ])?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    String::from_utf8(bytes).map_err(|_| RenderError::Utf8)
}
