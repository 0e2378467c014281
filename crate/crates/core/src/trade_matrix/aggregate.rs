use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BilateralFlowTable, CountryCode, FlowEntry, GdpTable, IngestError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregationError {
    #[error("{member} appears in groups {first} and {second}")]
    DuplicateMember {
        member: CountryCode,
        first: CountryCode,
        second: CountryCode,
    },
    #[error("group code {0} collides with an unaggregated country in the data")]
    GroupCollision(CountryCode),
    #[error("group code {group} is also a member of group {parent}")]
    NestedGroup {
        group: CountryCode,
        parent: CountryCode,
    },
}

/// Region groups: every member's flows and GDP are folded into the group code.
///
/// Config text is TOML, one key per group:
///
/// ```toml
/// CHN = ["CHN", "HKG", "MAC"]
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<CountryCode, Vec<CountryCode>>")]
pub struct AggregationMap {
    groups: BTreeMap<CountryCode, Vec<CountryCode>>,
    member_of: BTreeMap<CountryCode, CountryCode>,
}

impl TryFrom<BTreeMap<CountryCode, Vec<CountryCode>>> for AggregationMap {
    type Error = AggregationError;
    fn try_from(groups: BTreeMap<CountryCode, Vec<CountryCode>>) -> Result<Self, Self::Error> {
        Self::new(groups)
    }
}

impl AggregationMap {
    pub fn new(groups: BTreeMap<CountryCode, Vec<CountryCode>>) -> Result<Self, AggregationError> {
        let mut member_of = BTreeMap::new();
        for (group, members) in &groups {
            for m in members {
                if let Some(first) = member_of.insert(*m, *group) {
                    if first != *group {
                        return Err(AggregationError::DuplicateMember {
                            member: *m,
                            first,
                            second: *group,
                        });
                    }
                }
            }
        }
        for group in groups.keys() {
            if let Some(parent) = member_of.get(group) {
                if parent != group {
                    return Err(AggregationError::NestedGroup {
                        group: *group,
                        parent: *parent,
                    });
                }
            }
        }
        Ok(AggregationMap { groups, member_of })
    }

    pub fn parse(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::AggregationConfig(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn groups(&self) -> &BTreeMap<CountryCode, Vec<CountryCode>> {
        &self.groups
    }

    fn rekey(&self, code: CountryCode) -> CountryCode {
        self.member_of.get(&code).copied().unwrap_or(code)
    }
}

/// Result of [`aggregate_regions`].
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub flows: BilateralFlowTable,
    pub gdp: GdpTable,
    /// Value of flows between members of the same group, now internal.
    pub internal_removed: f64,
    /// Map members found in neither the flows nor the GDP table (skipped).
    pub missing_members: Vec<CountryCode>,
}

/// Folds group members into their group code: intra-group flows are removed,
/// the rest are re-keyed and summed, and group GDP is the member sum.
pub fn aggregate_regions(
    flows: &BilateralFlowTable,
    gdp: &GdpTable,
    map: &AggregationMap,
) -> Result<Aggregated, AggregationError> {
    let present: BTreeSet<CountryCode> = gdp
        .values
        .keys()
        .copied()
        .chain(flows.entries.iter().flat_map(|e| [e.reporter, e.partner]))
        .collect();

    let mut missing_members = Vec::new();
    for (group, members) in &map.groups {
        if !members.contains(group) && present.contains(group) {
            return Err(AggregationError::GroupCollision(*group));
        }
        missing_members.extend(members.iter().filter(|m| !present.contains(m)).copied());
    }

    let mut internal_removed = 0.0;
    let mut kept = Vec::with_capacity(flows.entries.len());
    for e in &flows.entries {
        let (reporter, partner) = (map.rekey(e.reporter), map.rekey(e.partner));
        if reporter == partner {
            internal_removed += e.value;
        } else {
            kept.push(FlowEntry {
                reporter,
                partner,
                value: e.value,
            });
        }
    }

    let mut values = BTreeMap::new();
    for (code, g) in &gdp.values {
        *values.entry(map.rekey(*code)).or_insert(0.0) += g;
    }

    missing_members.sort();
    Ok(Aggregated {
        flows: BilateralFlowTable::from_entries(kept, flows.period),
        gdp: GdpTable {
            values,
            period: gdp.period,
        },
        internal_removed,
        missing_members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CountryCode {
        s.parse().unwrap()
    }

    fn china_map() -> AggregationMap {
        AggregationMap::parse("CHN = [\"CHN\", \"HKG\", \"MAC\"]\n").unwrap()
    }

    fn table(rows: &[(&str, &str, f64)]) -> BilateralFlowTable {
        BilateralFlowTable::from_entries(
            rows.iter().map(|(a, b, v)| FlowEntry {
                reporter: code(a),
                partner: code(b),
                value: *v,
            }),
            None,
        )
    }

    fn gdp(rows: &[(&str, f64)]) -> GdpTable {
        GdpTable {
            values: rows.iter().map(|(c, v)| (code(c), *v)).collect(),
            period: None,
        }
    }

    #[test]
    fn intra_group_flow_becomes_internal() {
        let out =
            aggregate_regions(&table(&[("HKG", "CHN", 50.0)]), &gdp(&[]), &china_map()).unwrap();
        assert!(out.flows.entries.is_empty());
        assert_eq!(out.internal_removed, 50.0);
    }

    #[test]
    fn members_are_rekeyed_and_summed() {
        let out = aggregate_regions(
            &table(&[
                ("HKG", "USA", 10.0),
                ("CHN", "USA", 20.0),
                ("USA", "MAC", 1.0),
            ]),
            &gdp(&[("CHN", 13.0), ("HKG", 0.36), ("MAC", 0.05), ("USA", 20.0)]),
            &china_map(),
        )
        .unwrap();
        assert_eq!(out.flows.get("CHN", "USA"), Some(30.0));
        assert_eq!(out.flows.get("USA", "CHN"), Some(1.0));
        assert_eq!(out.gdp.get("CHN"), Some(13.0 + 0.36 + 0.05));
        assert!((out.gdp.get("CHN").unwrap() - 13.41).abs() < 1e-12);
        assert_eq!(out.gdp.values.len(), 2);
    }

    #[test]
    fn missing_members_are_reported() {
        let out =
            aggregate_regions(&table(&[("CHN", "USA", 1.0)]), &gdp(&[]), &china_map()).unwrap();
        assert_eq!(out.missing_members, vec![code("HKG"), code("MAC")]);
    }

    #[test]
    fn group_code_collision() {
        let map = AggregationMap::parse("CHN = [\"HKG\", \"MAC\"]\n").unwrap();
        let err = aggregate_regions(&table(&[("CHN", "USA", 1.0)]), &gdp(&[]), &map).unwrap_err();
        assert_eq!(err, AggregationError::GroupCollision(code("CHN")));
    }

    #[test]
    fn member_in_two_groups() {
        let err = AggregationMap::parse("CHN = [\"HKG\"]\nGBC = [\"HKG\", \"GBR\"]\n").unwrap_err();
        assert!(err.to_string().contains("HKG"), "{err}");
        assert!(AggregationMap::parse("AAA = [\"BBB\"]\nBBB = [\"CCC\"]\n").is_err());
        assert!(AggregationMap::parse("CHN = [\"hk\"]\n").is_err());
    }

    #[test]
    fn conservation_is_exact_on_integer_values() {
        let flows = table(&[
            ("CHN", "USA", 478.0),
            ("HKG", "USA", 45.0),
            ("HKG", "CHN", 313.0),
            ("CHN", "HKG", 303.0),
            ("MAC", "HKG", 1.0),
            ("USA", "HKG", 37.0),
            ("USA", "CHN", 120.0),
            ("DEU", "MAC", 2.0),
        ]);
        let out = aggregate_regions(&flows, &gdp(&[]), &china_map()).unwrap();
        assert_eq!(flows.total(), out.flows.total() + out.internal_removed);
        assert_eq!(out.internal_removed, 617.0);
    }
}
