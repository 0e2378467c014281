use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CountryCode;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {column:?} (header has {header:?})")]
    MissingColumn { column: String, header: Vec<String> },
    #[error("line {line}: invalid number {value:?} ({reason})")]
    InvalidNumber {
        line: u64,
        value: String,
        reason: &'static str,
    },
    #[error("line {line}: invalid country code {value:?}")]
    InvalidCode { line: u64, value: String },
    #[error("line {line}: negative flow {value} for {reporter} -> {partner}")]
    NegativeFlow {
        line: u64,
        reporter: CountryCode,
        partner: CountryCode,
        value: f64,
    },
    #[error("line {line}: self-flow {code} -> {code}")]
    SelfFlow { line: u64, code: CountryCode },
    #[error("line {line}: GDP of {code} must be positive, got {value}")]
    NonPositiveGdp {
        line: u64,
        code: CountryCode,
        value: f64,
    },
    #[error("line {line}: duplicate GDP entry for {code}")]
    DuplicateGdp { line: u64, code: CountryCode },
    #[error("line {line}: period {found} differs from {expected} seen earlier")]
    MixedPeriods {
        line: u64,
        expected: i32,
        found: i32,
    },
    #[error("invalid aggregation config: {0}")]
    AggregationConfig(String),
}

/// How mirror records (partner-declared imports) are used when present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MirrorPolicy {
    /// Reporter-declared exports only.
    #[default]
    Reporter,
    /// Mean of reporter exports and the mirror column where the latter is present.
    Average,
}

/// Column names of the trade CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSchema {
    pub reporter: String,
    pub partner: String,
    pub value: String,
    /// Optional partner-declared value for the same flow.
    pub mirror: Option<String>,
    /// Optional year column; all rows must agree.
    pub year: Option<String>,
    pub mirror_policy: MirrorPolicy,
}

impl Default for FlowSchema {
    fn default() -> Self {
        FlowSchema {
            reporter: "reporter_iso3".into(),
            partner: "partner_iso3".into(),
            value: "export_value".into(),
            mirror: None,
            year: Some("year".into()),
            mirror_policy: MirrorPolicy::Reporter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub reporter: CountryCode,
    pub partner: CountryCode,
    pub value: f64,
}

/// Normalized bilateral exports: one entry per ordered pair, sorted by
/// `(reporter, partner)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BilateralFlowTable {
    pub entries: Vec<FlowEntry>,
    pub period: Option<i32>,
}

impl BilateralFlowTable {
    /// Sums duplicate pairs and sorts; self-flows and negative values are the
    /// caller's responsibility.
    pub fn from_entries(entries: impl IntoIterator<Item = FlowEntry>, period: Option<i32>) -> Self {
        let mut merged: BTreeMap<(CountryCode, CountryCode), f64> = BTreeMap::new();
        for e in entries {
            *merged.entry((e.reporter, e.partner)).or_insert(0.0) += e.value;
        }
        BilateralFlowTable {
            entries: merged
                .into_iter()
                .map(|((reporter, partner), value)| FlowEntry {
                    reporter,
                    partner,
                    value,
                })
                .collect(),
            period,
        }
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.value).sum()
    }

    pub fn get(&self, reporter: &str, partner: &str) -> Option<f64> {
        let (r, p) = (
            reporter.parse::<CountryCode>().ok()?,
            partner.parse::<CountryCode>().ok()?,
        );
        self.entries
            .iter()
            .find(|e| e.reporter == r && e.partner == p)
            .map(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GdpTable {
    pub values: BTreeMap<CountryCode, f64>,
    pub period: Option<i32>,
}

impl GdpTable {
    pub fn get(&self, code: &str) -> Option<f64> {
        self.values.get(&code.parse().ok()?).copied()
    }
}

/// Decimal number with a period as decimal mark. Thousands separators,
/// underscores and non-finite spellings are rejected.
fn parse_amount(raw: &str, line: u64) -> Result<f64, IngestError> {
    let s = raw.trim();
    let fail = |reason| IngestError::InvalidNumber {
        line,
        value: raw.to_string(),
        reason,
    };
    if s.is_empty() {
        return Err(fail("empty"));
    }
    if s.contains([',', '_', ' ', '\'']) {
        return Err(fail("thousands separators are not accepted"));
    }
    let v: f64 = s.parse().map_err(|_| fail("not a decimal number"))?;
    if !v.is_finite() {
        return Err(fail("not finite"));
    }
    Ok(v)
}

fn parse_code(raw: &str, line: u64) -> Result<CountryCode, IngestError> {
    raw.parse().map_err(|_| IngestError::InvalidCode {
        line,
        value: raw.to_string(),
    })
}

fn parse_year(raw: &str, line: u64) -> Result<i32, IngestError> {
    raw.trim().parse().map_err(|_| IngestError::InvalidNumber {
        line,
        value: raw.to_string(),
        reason: "not an integer year",
    })
}

fn column(header: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::MissingColumn {
            column: name.to_string(),
            header: header.iter().map(str::to_string).collect(),
        })
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn check_period(period: &mut Option<i32>, year: i32, line: u64) -> Result<(), IngestError> {
    match *period {
        Some(expected) if expected != year => Err(IngestError::MixedPeriods {
            line,
            expected,
            found: year,
        }),
        _ => {
            *period = Some(year);
            Ok(())
        }
    }
}

/// Reads a bilateral export CSV. Duplicate `(reporter, partner)` rows are summed.
pub fn load_trade_flows<R: Read>(
    source: R,
    schema: &FlowSchema,
) -> Result<BilateralFlowTable, IngestError> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    let reporter_col = column(&header, &schema.reporter)?;
    let partner_col = column(&header, &schema.partner)?;
    let value_col = column(&header, &schema.value)?;
    let mirror_col = match &schema.mirror {
        Some(name) => Some(column(&header, name)?),
        None => None,
    };
    // The default schema names a year column but does not require it.
    let year_col = schema
        .year
        .as_deref()
        .and_then(|name| header.iter().position(|h| h == name));

    let mut period = None;
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let reporter = parse_code(&record[reporter_col], line)?;
        let partner = parse_code(&record[partner_col], line)?;
        if reporter == partner {
            return Err(IngestError::SelfFlow {
                line,
                code: reporter,
            });
        }
        let mut value = parse_amount(&record[value_col], line)?;
        if let (Some(col), MirrorPolicy::Average) = (mirror_col, schema.mirror_policy) {
            if !record[col].trim().is_empty() {
                let mirror = parse_amount(&record[col], line)?;
                if mirror < 0.0 {
                    return Err(IngestError::NegativeFlow {
                        line,
                        reporter,
                        partner,
                        value: mirror,
                    });
                }
                value = 0.5 * (value + mirror);
            }
        }
        if value < 0.0 {
            return Err(IngestError::NegativeFlow {
                line,
                reporter,
                partner,
                value,
            });
        }
        if let Some(col) = year_col {
            check_period(&mut period, parse_year(&record[col], line)?, line)?;
        }
        entries.push(FlowEntry {
            reporter,
            partner,
            value,
        });
    }
    Ok(BilateralFlowTable::from_entries(entries, period))
}

/// Reads a GDP CSV with columns `iso3,gdp` (and optionally `year`).
pub fn load_gdp<R: Read>(source: R) -> Result<GdpTable, IngestError> {
    let mut rdr = reader(source);
    let header = rdr.headers()?.clone();
    let code_col = column(&header, "iso3")?;
    let gdp_col = column(&header, "gdp")?;
    let year_col = header.iter().position(|h| h == "year");

    let mut table = GdpTable::default();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let code = parse_code(&record[code_col], line)?;
        let value = parse_amount(&record[gdp_col], line)?;
        if value <= 0.0 {
            return Err(IngestError::NonPositiveGdp { line, code, value });
        }
        if let Some(col) = year_col {
            check_period(&mut table.period, parse_year(&record[col], line)?, line)?;
        }
        if table.values.insert(code, value).is_some() {
            return Err(IngestError::DuplicateGdp { line, code });
        }
    }
    Ok(table)
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_trade_flows_path(
    path: &Path,
    schema: &FlowSchema,
) -> Result<BilateralFlowTable, IngestError> {
    load_trade_flows(open(path)?, schema)
}

pub fn load_gdp_path(path: &Path) -> Result<GdpTable, IngestError> {
    load_gdp(open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "reporter_iso3,partner_iso3,export_value\n";

    fn load(body: &str) -> Result<BilateralFlowTable, IngestError> {
        load_trade_flows(format!("{HEADER}{body}").as_bytes(), &FlowSchema::default())
    }

    #[test]
    fn duplicates_are_summed() {
        let t = load("USA,CHN,120\nUSA,CHN,30\n").unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.get("USA", "CHN"), Some(150.0));
    }

    #[test]
    fn self_flow_rejected() {
        assert!(matches!(
            load("USA,USA,5\n"),
            Err(IngestError::SelfFlow { .. })
        ));
    }

    #[test]
    fn negative_flow_rejected() {
        assert!(
            matches!(load("USA,CHN,-1\n"), Err(IngestError::NegativeFlow { value, .. }) if value == -1.0)
        );
    }

    #[test]
    fn thousands_separators_rejected() {
        for v in ["\"1,000\"", "1_000", "inf", "NaN", "", "12a"] {
            let err = load(&format!("USA,CHN,{v}\n")).unwrap_err();
            assert!(
                matches!(err, IngestError::InvalidNumber { .. }),
                "{v}: {err}"
            );
        }
    }

    #[test]
    fn unknown_column() {
        let schema = FlowSchema {
            value: "value_usd".into(),
            ..FlowSchema::default()
        };
        let err = load_trade_flows(format!("{HEADER}USA,CHN,1\n").as_bytes(), &schema).unwrap_err();
        assert!(
            matches!(err, IngestError::MissingColumn { ref column, .. } if column == "value_usd")
        );
    }

    #[test]
    fn malformed_csv() {
        assert!(matches!(load("USA,CHN\n"), Err(IngestError::Csv(_))));
        assert!(matches!(
            load("US,CHN,1\n"),
            Err(IngestError::InvalidCode { .. })
        ));
    }

    #[test]
    fn custom_schema_and_mirror_average() {
        let csv = "from,to,x,m,yr\nusa,chn,10,20,2018\nCHN,USA,5,,2018\n";
        let schema = FlowSchema {
            reporter: "from".into(),
            partner: "to".into(),
            value: "x".into(),
            mirror: Some("m".into()),
            year: Some("yr".into()),
            mirror_policy: MirrorPolicy::Average,
        };
        let t = load_trade_flows(csv.as_bytes(), &schema).unwrap();
        assert_eq!(t.get("USA", "CHN"), Some(15.0));
        assert_eq!(t.get("CHN", "USA"), Some(5.0));
        assert_eq!(t.period, Some(2018));

        let reporter_only = FlowSchema {
            mirror_policy: MirrorPolicy::Reporter,
            ..schema
        };
        let t = load_trade_flows(csv.as_bytes(), &reporter_only).unwrap();
        assert_eq!(t.get("USA", "CHN"), Some(10.0));
    }

    #[test]
    fn mixed_periods_rejected() {
        let csv = "reporter_iso3,partner_iso3,export_value,year\nUSA,CHN,1,2018\nCHN,USA,1,2000\n";
        assert!(matches!(
            load_trade_flows(csv.as_bytes(), &FlowSchema::default()),
            Err(IngestError::MixedPeriods {
                expected: 2018,
                found: 2000,
                ..
            })
        ));
    }

    #[test]
    fn gdp_loading() {
        let g = load_gdp("iso3,gdp\nUSA,20.58\nCHN,12.79\n".as_bytes()).unwrap();
        assert_eq!(g.get("USA"), Some(20.58));
        assert!(matches!(
            load_gdp("iso3,gdp\nUSA,0\n".as_bytes()),
            Err(IngestError::NonPositiveGdp { .. })
        ));
        assert!(matches!(
            load_gdp("iso3,gdp\nUSA,1\nUSA,2\n".as_bytes()),
            Err(IngestError::DuplicateGdp { .. })
        ));
        assert!(matches!(
            load_gdp("code,gdp\nUSA,1\n".as_bytes()),
            Err(IngestError::MissingColumn { .. })
        ));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_gdp_path(Path::new("/nonexistent/gdp.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/gdp.csv"));
    }
}
