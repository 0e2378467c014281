//! Country index, bilateral flow ingestion and the row-stochastic exposure
//! matrix `P`.
//!
//! `P[i][j]` is the fraction of country `i`'s GDP exported to country `j`; the
//! diagonal holds the non-exported fraction, so every row sums to one.

mod aggregate;
mod connectivity;
mod ingest;

pub use aggregate::{aggregate_regions, Aggregated, AggregationError, AggregationMap};
pub use connectivity::{check_connectivity, ConnectivityReport};
pub use ingest::{
    load_gdp, load_gdp_path, load_trade_flows, load_trade_flows_path, BilateralFlowTable,
    FlowEntry, FlowSchema, GdpTable, IngestError, MirrorPolicy,
};

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum deviation of a row sum from one accepted by [`TradeMatrix::new`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Three-letter uppercase ISO-3 country (or group) code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode([u8; 3]);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid ISO-3 code {0:?}: expected three ASCII letters")]
pub struct InvalidCode(pub String);

impl CountryCode {
    pub fn as_str(&self) -> &str {
        // Constructed only from ASCII uppercase letters.
        std::str::from_utf8(&self.0).expect("ascii country code")
    }
}

impl FromStr for CountryCode {
    type Err = InvalidCode;

    /// Trims surrounding whitespace and uppercases; anything other than three
    /// ASCII letters is rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bytes = t.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_alphabetic) {
            return Err(InvalidCode(s.to_string()));
        }
        let mut code = [0u8; 3];
        for (dst, src) in code.iter_mut().zip(bytes) {
            *dst = src.to_ascii_uppercase();
        }
        Ok(CountryCode(code))
    }
}

impl TryFrom<String> for CountryCode {
    type Error = InvalidCode;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.as_str().to_string()
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// Ordered list of country codes with the reverse lookup `code -> position`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountryIndex {
    codes: Vec<CountryCode>,
    positions: HashMap<CountryCode, usize>,
}

impl CountryIndex {
    pub fn new(codes: Vec<CountryCode>) -> Result<Self, MatrixError> {
        let mut positions = HashMap::with_capacity(codes.len());
        for (k, c) in codes.iter().enumerate() {
            if positions.insert(*c, k).is_some() {
                return Err(MatrixError::DuplicateCode(*c));
            }
        }
        Ok(CountryIndex { codes, positions })
    }

    /// Index over every country that has a GDP value, ISO-3 ascending.
    pub fn from_gdp(gdp: &GdpTable) -> Self {
        // BTreeMap keys are already sorted and unique.
        Self::new(gdp.values.keys().copied().collect()).expect("unique keys")
    }

    /// Index over every country named in either table, ISO-3 ascending. A
    /// flow partner without GDP then surfaces as [`MatrixError::MissingGdp`]
    /// in [`build_matrix`] instead of being dropped.
    pub fn from_tables(flows: &BilateralFlowTable, gdp: &GdpTable) -> Self {
        let codes: BTreeSet<CountryCode> = gdp
            .values
            .keys()
            .copied()
            .chain(flows.entries.iter().flat_map(|e| [e.reporter, e.partner]))
            .collect();
        Self::new(codes.into_iter().collect()).expect("unique keys")
    }

    /// Parses a list of codes such as `["USA", "CHN"]`.
    pub fn from_strs(codes: &[&str]) -> Result<Self, MatrixError> {
        let parsed = codes
            .iter()
            .map(|s| s.parse::<CountryCode>())
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(parsed)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[CountryCode] {
        &self.codes
    }

    pub fn code(&self, position: usize) -> CountryCode {
        self.codes[position]
    }

    pub fn position(&self, code: &CountryCode) -> Option<usize> {
        self.positions.get(code).copied()
    }

    /// Looks up a textual code; `None` for malformed or absent codes.
    pub fn position_of(&self, code: &str) -> Option<usize> {
        code.parse().ok().and_then(|c| self.position(&c))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("duplicate country code {0}")]
    DuplicateCode(CountryCode),
    #[error(transparent)]
    InvalidCode(#[from] InvalidCode),
    #[error("no GDP value for {0}")]
    MissingGdp(CountryCode),
    #[error("{}", exports_exceed_message(.0))]
    ExportsExceedGdp(Vec<ExcessExports>),
    #[error("country index is empty")]
    EmptyIndex,
    #[error("dimension mismatch: index has {expected} countries, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("entry P[{row}][{col}] = {value} is outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: f64 },
    #[error("GDP of {code} must be finite and positive, got {value}")]
    NonPositiveGdp { code: CountryCode, value: f64 },
}

/// A country whose recorded exports exceed its GDP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcessExports {
    pub country: CountryCode,
    pub exports: f64,
    pub gdp: f64,
}

fn exports_exceed_message(rows: &[ExcessExports]) -> String {
    let list = rows
        .iter()
        .map(|r| format!("{} (exports {} > GDP {})", r.country, r.exports, r.gdp))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "exports exceed GDP for {list}; re-export hubs usually need to be folded into a \
         neighbouring economy with an aggregation map"
    )
}

/// Row-stochastic exposure matrix with its country index and GDP vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeMatrix {
    index: CountryIndex,
    p: DMatrix<f64>,
    gdp: Vec<f64>,
}

impl TradeMatrix {
    /// Validates and wraps a matrix: entries in `[0, 1]`, rows summing to one
    /// within [`ROW_SUM_TOLERANCE`], positive GDP aligned to the index.
    pub fn new(index: CountryIndex, p: DMatrix<f64>, gdp: Vec<f64>) -> Result<Self, MatrixError> {
        let n = index.len();
        if n == 0 {
            return Err(MatrixError::EmptyIndex);
        }
        for actual in [p.nrows(), p.ncols(), gdp.len()] {
            if actual != n {
                return Err(MatrixError::Dimension {
                    expected: n,
                    actual,
                });
            }
        }
        for (k, &g) in gdp.iter().enumerate() {
            if !(g.is_finite() && g > 0.0) {
                return Err(MatrixError::NonPositiveGdp {
                    code: index.code(k),
                    value: g,
                });
            }
        }
        for row in 0..n {
            let mut sum = 0.0;
            for col in 0..n {
                let value = p[(row, col)];
                if !(0.0..=1.0).contains(&value) {
                    return Err(MatrixError::EntryOutOfRange { row, col, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MatrixError::RowSum { row, sum });
            }
        }
        Ok(TradeMatrix { index, p, gdp })
    }

    /// Convenience constructor from string codes and nested rows.
    pub fn from_rows(codes: &[&str], rows: &[Vec<f64>], gdp: &[f64]) -> Result<Self, MatrixError> {
        let index = CountryIndex::from_strs(codes)?;
        let n = index.len();
        if rows.len() != n {
            return Err(MatrixError::Dimension {
                expected: n,
                actual: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(MatrixError::Dimension {
                expected: n,
                actual: bad.len(),
            });
        }
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::new(index, p, gdp.to_vec())
    }

    pub fn n(&self) -> usize {
        self.index.len()
    }

    pub fn index(&self) -> &CountryIndex {
        &self.index
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.p[(row, col)]
    }

    pub fn gdp(&self) -> &[f64] {
        &self.gdp
    }

    /// `sum_{t != i} P[i][t]`, i.e. `1 - P[i][i]` evaluated without cancellation.
    pub fn export_share(&self, i: usize) -> f64 {
        (0..self.n())
            .filter(|&t| t != i)
            .map(|t| self.p[(i, t)])
            .sum()
    }

    /// Same countries and GDP with a replacement matrix (validated).
    pub fn with_matrix(&self, p: DMatrix<f64>) -> Result<Self, MatrixError> {
        Self::new(self.index.clone(), p, self.gdp.clone())
    }

    /// Relabels countries: position `k` of the result is country `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, MatrixError> {
        let n = self.n();
        if order.len() != n {
            return Err(MatrixError::Dimension {
                expected: n,
                actual: order.len(),
            });
        }
        let index = CountryIndex::new(order.iter().map(|&k| self.index.code(k)).collect())?;
        let p = DMatrix::from_fn(n, n, |a, b| self.p[(order[a], order[b])]);
        let gdp = order.iter().map(|&k| self.gdp[k]).collect();
        Self::new(index, p, gdp)
    }
}

/// Builds `P` from flows and GDP over `index`.
///
/// `P[i][j] = flow(i -> j) / gdp_i` for `i != j`, missing pairs are zero and
/// `P[i][i] = 1 - sum_{j != i} P[i][j]`. Flows touching countries outside the
/// index are dropped.
pub fn build_matrix(
    flows: &BilateralFlowTable,
    gdp: &GdpTable,
    index: &CountryIndex,
) -> Result<TradeMatrix, MatrixError> {
    let n = index.len();
    if n == 0 {
        return Err(MatrixError::EmptyIndex);
    }
    let mut gdp_vec = Vec::with_capacity(n);
    for code in index.codes() {
        match gdp.values.get(code) {
            Some(&g) => gdp_vec.push(g),
            None => return Err(MatrixError::MissingGdp(*code)),
        }
    }

    let mut value = DMatrix::<f64>::zeros(n, n);
    for e in &flows.entries {
        if let (Some(i), Some(j)) = (index.position(&e.reporter), index.position(&e.partner)) {
            value[(i, j)] += e.value;
        }
    }

    let mut excess = Vec::new();
    for i in 0..n {
        let exports: f64 = (0..n).filter(|&j| j != i).map(|j| value[(i, j)]).sum();
        if exports > gdp_vec[i] {
            excess.push(ExcessExports {
                country: index.code(i),
                exports,
                gdp: gdp_vec[i],
            });
        }
    }
    if !excess.is_empty() {
        return Err(MatrixError::ExportsExceedGdp(excess));
    }

    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let share = value[(i, j)] / gdp_vec[i];
            p[(i, j)] = share;
            off += share;
        }
        // exports == gdp can leave a -1ulp diagonal
        p[(i, i)] = (1.0 - off).max(0.0);
    }
    TradeMatrix::new(index.clone(), p, gdp_vec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows(rows: &[(&str, &str, f64)]) -> BilateralFlowTable {
        BilateralFlowTable {
            entries: rows
                .iter()
                .map(|(a, b, v)| FlowEntry {
                    reporter: a.parse().unwrap(),
                    partner: b.parse().unwrap(),
                    value: *v,
                })
                .collect(),
            period: None,
        }
    }

    fn gdp(rows: &[(&str, f64)]) -> GdpTable {
        GdpTable {
            values: rows.iter().map(|(c, v)| (c.parse().unwrap(), *v)).collect(),
            period: None,
        }
    }

    #[test]
    fn code_parsing() {
        assert_eq!("usa".parse::<CountryCode>().unwrap().as_str(), "USA");
        assert_eq!(" chn ".parse::<CountryCode>().unwrap().to_string(), "CHN");
        assert!("US".parse::<CountryCode>().is_err());
        assert!("US1".parse::<CountryCode>().is_err());
        assert!("USAA".parse::<CountryCode>().is_err());
    }

    #[test]
    fn index_is_a_bijection() {
        let idx = CountryIndex::from_strs(&["USA", "CHN", "DEU"]).unwrap();
        for (k, c) in idx.codes().iter().enumerate() {
            assert_eq!(idx.position(c), Some(k));
        }
        assert_eq!(idx.position_of("XXX"), None);
        assert!(matches!(
            CountryIndex::from_strs(&["USA", "usa"]),
            Err(MatrixError::DuplicateCode(_))
        ));
    }

    #[test]
    fn two_country_matrix() {
        let f = flows(&[("AAA", "BBB", 2.0), ("BBB", "AAA", 4.0)]);
        let g = gdp(&[("AAA", 10.0), ("BBB", 20.0)]);
        let m = build_matrix(&f, &g, &CountryIndex::from_gdp(&g)).unwrap();
        assert_eq!(m.entry(0, 0), 0.8);
        assert_eq!(m.entry(0, 1), 0.2);
        assert_eq!(m.entry(1, 0), 0.2);
        assert_eq!(m.entry(1, 1), 0.8);
    }

    #[test]
    fn no_flows_gives_identity() {
        let g = gdp(&[("AAA", 1.0), ("BBB", 2.0)]);
        let m = build_matrix(&flows(&[]), &g, &CountryIndex::from_gdp(&g)).unwrap();
        assert_eq!(m.p(), &DMatrix::identity(2, 2));
        assert!(!check_connectivity(&m).strongly_connected);
    }

    #[test]
    fn exports_exceeding_gdp_is_an_error() {
        let f = flows(&[
            ("AAA", "BBB", 4.0),
            ("AAA", "CCC", 2.0),
            ("BBB", "AAA", 1.0),
        ]);
        let g = gdp(&[("AAA", 5.0), ("BBB", 20.0), ("CCC", 3.0)]);
        match build_matrix(&f, &g, &CountryIndex::from_gdp(&g)) {
            Err(MatrixError::ExportsExceedGdp(rows)) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].country.as_str(), "AAA");
                assert_eq!(rows[0].exports, 6.0);
                let msg = MatrixError::ExportsExceedGdp(rows).to_string();
                assert!(msg.contains("aggregation"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_gdp() {
        let g = gdp(&[("AAA", 5.0)]);
        let idx = CountryIndex::from_strs(&["AAA", "BBB"]).unwrap();
        assert_eq!(
            build_matrix(&flows(&[]), &g, &idx).unwrap_err(),
            MatrixError::MissingGdp("BBB".parse().unwrap())
        );
    }

    #[test]
    fn flows_outside_index_are_dropped() {
        let f = flows(&[
            ("AAA", "BBB", 1.0),
            ("AAA", "ZZZ", 3.0),
            ("ZZZ", "BBB", 9.0),
        ]);
        let g = gdp(&[("AAA", 10.0), ("BBB", 10.0)]);
        let m = build_matrix(&f, &g, &CountryIndex::from_gdp(&g)).unwrap();
        assert_eq!(m.entry(0, 1), 0.1);
        assert_eq!(m.entry(0, 0), 0.9);
        assert_eq!(m.entry(1, 1), 1.0);
    }

    #[test]
    fn validation_rejects_bad_rows() {
        assert!(matches!(
            TradeMatrix::from_rows(
                &["AAA", "BBB"],
                &[vec![0.5, 0.6], vec![0.5, 0.5]],
                &[1.0, 1.0]
            ),
            Err(MatrixError::RowSum { row: 0, .. })
        ));
        assert!(matches!(
            TradeMatrix::from_rows(
                &["AAA", "BBB"],
                &[vec![1.5, -0.5], vec![0.5, 0.5]],
                &[1.0, 1.0]
            ),
            Err(MatrixError::EntryOutOfRange { .. })
        ));
        assert!(matches!(
            TradeMatrix::from_rows(
                &["AAA", "BBB"],
                &[vec![1.0, 0.0], vec![0.5, 0.5]],
                &[1.0, 0.0]
            ),
            Err(MatrixError::NonPositiveGdp { .. })
        ));
    }

    #[test]
    fn permutation_relabels_consistently() {
        let m = TradeMatrix::from_rows(
            &["AAA", "BBB", "CCC"],
            &[
                vec![0.5, 0.3, 0.2],
                vec![0.1, 0.8, 0.1],
                vec![0.25, 0.25, 0.5],
            ],
            &[1.0, 2.0, 3.0],
        )
        .unwrap();
        let q = m.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(q.index().code(0).as_str(), "CCC");
        assert_eq!(q.entry(0, 1), m.entry(2, 0));
        assert_eq!(q.gdp(), &[3.0, 1.0, 2.0]);
    }
}
