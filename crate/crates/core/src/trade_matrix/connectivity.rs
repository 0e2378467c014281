use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::{Bfs, Reversed};
use serde::{Deserialize, Serialize};

use super::{CountryCode, TradeMatrix};

/// Strong-connectivity diagnosis of the directed graph `i -> j` for
/// `P[i][j] > 0`, `i != j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub strongly_connected: bool,
    /// Strongly connected components, largest first, members ISO-3 ascending.
    pub components: Vec<Vec<CountryCode>>,
    /// Countries the largest component cannot reach.
    pub unreachable_from_giant: Vec<CountryCode>,
    /// Countries that cannot reach the largest component.
    pub not_reaching_giant: Vec<CountryCode>,
    /// Countries with no positive off-diagonal entry in either direction.
    pub isolated: Vec<CountryCode>,
    /// At least one strictly positive diagonal entry.
    pub aperiodic: bool,
}

impl ConnectivityReport {
    /// Strongly connected and aperiodic: the equilibrium is unique and
    /// power iteration converges.
    pub fn well_connected(&self) -> bool {
        self.strongly_connected && self.aperiodic
    }
}

pub fn check_connectivity(p: &TradeMatrix) -> ConnectivityReport {
    let n = p.n();
    let codes = p.index().codes();
    let mut graph = DiGraph::<usize, ()>::with_capacity(n, n * n);
    let nodes: Vec<NodeIndex> = (0..n).map(|k| graph.add_node(k)).collect();
    let mut degree = vec![0usize; n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if p.entry(i, j) > 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }

    let mut components: Vec<Vec<CountryCode>> = tarjan_scc(&graph)
        .into_iter()
        .map(|scc| {
            let mut members: Vec<CountryCode> = scc.into_iter().map(|v| codes[graph[v]]).collect();
            members.sort();
            members
        })
        .collect();
    components.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    let (mut unreachable_from_giant, mut not_reaching_giant) = (Vec::new(), Vec::new());
    if let Some(giant) = components.first() {
        let start = nodes[p.index().position(&giant[0]).expect("member of index")];
        let mut forward = vec![false; n];
        let mut bfs = Bfs::new(&graph, start);
        while let Some(v) = bfs.next(&graph) {
            forward[graph[v]] = true;
        }
        let mut backward = vec![false; n];
        let reversed = Reversed(&graph);
        let mut bfs = Bfs::new(reversed, start);
        while let Some(v) = bfs.next(reversed) {
            backward[graph[v]] = true;
        }
        unreachable_from_giant = (0..n).filter(|&k| !forward[k]).map(|k| codes[k]).collect();
        not_reaching_giant = (0..n).filter(|&k| !backward[k]).map(|k| codes[k]).collect();
        unreachable_from_giant.sort();
        not_reaching_giant.sort();
    }

    let mut isolated: Vec<CountryCode> = (0..n)
        .filter(|&k| degree[k] == 0)
        .map(|k| codes[k])
        .collect();
    isolated.sort();

    ConnectivityReport {
        strongly_connected: components.len() == 1,
        components,
        unreachable_from_giant,
        not_reaching_giant,
        isolated,
        aperiodic: (0..n).any(|k| p.entry(k, k) > 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_country_connected() {
        let p = TradeMatrix::from_rows(
            &["AAA", "BBB"],
            &[vec![0.8, 0.2], vec![0.2, 0.8]],
            &[1.0, 1.0],
        )
        .unwrap();
        let r = check_connectivity(&p);
        assert!(r.strongly_connected);
        assert!(r.well_connected());
        assert!(r.isolated.is_empty());
    }

    #[test]
    fn identity_is_disconnected_and_isolated() {
        let p = TradeMatrix::from_rows(
            &["AAA", "BBB"],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[1.0, 1.0],
        )
        .unwrap();
        let r = check_connectivity(&p);
        assert!(!r.strongly_connected);
        assert_eq!(r.isolated.len(), 2);
        assert_eq!(r.components.len(), 2);
    }

    #[test]
    fn block_diagonal_has_two_components() {
        let p = TradeMatrix::from_rows(
            &["AAA", "BBB", "CCC", "DDD"],
            &[
                vec![0.5, 0.5, 0.0, 0.0],
                vec![0.3, 0.7, 0.0, 0.0],
                vec![0.0, 0.0, 0.6, 0.4],
                vec![0.0, 0.0, 0.1, 0.9],
            ],
            &[1.0; 4],
        )
        .unwrap();
        let r = check_connectivity(&p);
        assert!(!r.strongly_connected);
        assert_eq!(r.components.len(), 2);
        assert_eq!(r.components[0].len(), 2);
        assert_eq!(r.unreachable_from_giant.len(), 2);
        assert!(r.isolated.is_empty());
    }

    #[test]
    fn one_way_link_is_flagged() {
        // CCC exports to AAA but nobody exports to CCC.
        let p = TradeMatrix::from_rows(
            &["AAA", "BBB", "CCC"],
            &[
                vec![0.5, 0.5, 0.0],
                vec![0.3, 0.7, 0.0],
                vec![0.2, 0.0, 0.8],
            ],
            &[1.0; 3],
        )
        .unwrap();
        let r = check_connectivity(&p);
        assert!(!r.strongly_connected);
        assert_eq!(r.components[0].len(), 2);
        assert_eq!(r.unreachable_from_giant, vec!["CCC".parse().unwrap()]);
        assert!(r.not_reaching_giant.is_empty());
    }

    #[test]
    fn periodic_cycle_is_not_well_connected() {
        let p = TradeMatrix::from_rows(
            &["AAA", "BBB"],
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
            &[1.0, 1.0],
        )
        .unwrap();
        let r = check_connectivity(&p);
        assert!(r.strongly_connected);
        assert!(!r.aperiodic);
        assert!(!r.well_connected());
    }
}
