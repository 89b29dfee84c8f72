//! Influence graphs and their Laplacians.
//!
//! An edge `(a, b, w)` means node `a` is influenced by node `b` with weight
//! `w`, so it lands in the Laplacian as `L[a][b] = -w` and adds `w` to the
//! diagonal of row `a`. Node indices are 1-based in every public interface.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted directed edge, serialized as `[source, target, weight]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Edge {
    /// Node being influenced (1-based).
    pub source: usize,
    /// Node exerting the influence (1-based).
    pub target: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(source: usize, target: usize, weight: f64) -> Self {
        Edge {
            source,
            target,
            weight,
        }
    }
}

impl From<(usize, usize, f64)> for Edge {
    fn from((source, target, weight): (usize, usize, f64)) -> Self {
        Edge::new(source, target, weight)
    }
}

impl From<Edge> for (usize, usize, f64) {
    fn from(e: Edge) -> Self {
        (e.source, e.target, e.weight)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n_nodes: usize,
    pub edges: Vec<Edge>,
}

impl GraphSpec {
    /// Builds a spec and checks its invariants.
    pub fn new(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        let spec = GraphSpec { n_nodes, edges };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::Parameter("graph must have at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        for (index, e) in self.edges.iter().enumerate() {
            let bad = |reason: &str| Error::InvalidEdge {
                index,
                source_node: e.source,
                target_node: e.target,
                weight: e.weight,
                reason: reason.to_string(),
            };
            if e.source == 0 || e.source > self.n_nodes || e.target == 0 || e.target > self.n_nodes {
                return Err(bad(&format!("node index outside 1..={}", self.n_nodes)));
            }
            if e.source == e.target {
                return Err(bad("self-loop"));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(bad("weight must be finite and strictly positive"));
            }
            if !seen.insert((e.source, e.target)) {
                return Err(bad("duplicate (source, target) pair"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GraphSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Graph Laplacian `L` driving the consensus flow `dx/dt = -L x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: Array2<f64>,
}

impl Laplacian {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    /// Entry at 1-based `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[[row - 1, col - 1]]
    }

    /// Wraps a matrix after checking the Laplacian sign and row-sum invariants.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Parameter(format!(
                "Laplacian must be square, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        for (i, row) in matrix.outer_iter().enumerate() {
            let scale = row.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if row.sum().abs() > 1e-12 * scale {
                return Err(Error::Parameter(format!("row {} does not sum to zero", i + 1)));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || (i == j && v < 0.0) || (i != j && v > 0.0) {
                    return Err(Error::Parameter(format!(
                        "entry ({}, {}) = {} violates Laplacian sign pattern",
                        i + 1,
                        j + 1,
                        v
                    )));
                }
            }
        }
        Ok(Laplacian { matrix })
    }
}

pub fn build_laplacian(spec: &GraphSpec) -> Result<Laplacian> {
    spec.validate()?;
    let n = spec.n_nodes;
    let mut matrix = Array2::<f64>::zeros((n, n));
    for e in &spec.edges {
        let (a, b) = (e.source - 1, e.target - 1);
        matrix[[a, b]] -= e.weight;
    }
    // Diagonal is the negated sum of the row's off-diagonals, so each row
    // sums to exactly zero in floating point.
    for a in 0..n {
        let off: f64 = (0..n).filter(|&b| b != a).map(|b| matrix[[a, b]]).sum();
        matrix[[a, a]] = -off;
    }
    Ok(Laplacian { matrix })
}

/// Edges of one 5-node block, as (influenced, influencer) pairs.
const BLOCK_EDGES: [(usize, usize); 8] = [
    (1, 5),
    (2, 1),
    (2, 3),
    (3, 1),
    (3, 5),
    (4, 1),
    (5, 1),
    (5, 2),
];

/// Weight of the edge `n <- n+5` across consecutive blocks.
pub const CASCADE_FORWARD_WEIGHT: f64 = 1.0;
/// Weight of the edge `n+5 <- n`; earlier blocks are more influential.
pub const CASCADE_BACKWARD_WEIGHT: f64 = 4.0;

/// Cascading benchmark: a 5-node block repeated `n_nodes / 5` times, each
/// node `n` linked to `n + 5` with `L[n][n+5] = -1` and `L[n+5][n] = -4`.
pub fn cascading_benchmark(n_nodes: usize) -> Result<GraphSpec> {
    if n_nodes < 5 || n_nodes % 5 != 0 {
        return Err(Error::Parameter(format!(
            "cascading benchmark needs a positive multiple of 5 nodes, got {n_nodes}"
        )));
    }
    let blocks = n_nodes / 5;
    let mut edges = Vec::with_capacity(8 * blocks + 2 * (n_nodes - 5));
    for b in 0..blocks {
        let off = 5 * b;
        edges.extend(
            BLOCK_EDGES
                .iter()
                .map(|&(s, t)| Edge::new(off + s, off + t, 1.0)),
        );
    }
    for n in 1..=n_nodes - 5 {
        edges.push(Edge::new(n, n + 5, CASCADE_FORWARD_WEIGHT));
        edges.push(Edge::new(n + 5, n, CASCADE_BACKWARD_WEIGHT));
    }
    GraphSpec::new(n_nodes, edges)
}

/// True iff every node reaches every other node along directed edges.
///
/// Strong connectivity does not depend on which end of an edge is taken as
/// the tail, so this checks reachability from node 1 in the edge direction
/// and in the reverse direction.
pub fn is_strongly_connected(spec: &GraphSpec) -> Result<bool> {
    spec.validate()?;
    let n = spec.n_nodes;
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for e in &spec.edges {
        fwd[e.source - 1].push(e.target - 1);
        rev[e.target - 1].push(e.source - 1);
    }
    Ok(reaches_all(&fwd) && reaches_all(&rev))
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut visited = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_pair() {
        let spec = GraphSpec::new(2, vec![Edge::new(1, 2, 1.0), Edge::new(2, 1, 1.0)]).unwrap();
        let l = build_laplacian(&spec).unwrap();
        assert_eq!(l.matrix(), &ndarray::arr2(&[[1.0, -1.0], [-1.0, 1.0]]));
    }

    #[test]
    fn single_node() {
        let l = build_laplacian(&GraphSpec::new(1, vec![]).unwrap()).unwrap();
        assert_eq!(l.matrix(), &ndarray::arr2(&[[0.0]]));
    }

    #[test]
    fn cascading_cross_block_entries() {
        let l = build_laplacian(&cascading_benchmark(10).unwrap()).unwrap();
        assert_eq!(l.entry(1, 6), -1.0);
        assert_eq!(l.entry(6, 1), -4.0);
    }

    #[test]
    fn cascading_edge_counts() {
        let five = cascading_benchmark(5).unwrap();
        assert_eq!(five.edges.len(), 8);
        assert!(five.edges.iter().all(|e| e.weight == 1.0));

        // Direct re-enumeration of the block and cross-block rules.
        let mut expected = 0;
        for _block in 0..10 {
            expected += BLOCK_EDGES.len();
        }
        for n in 1..=50 {
            if n + 5 <= 50 {
                expected += 2;
            }
        }
        assert_eq!(expected, 8 * 10 + 2 * 45);
        assert_eq!(cascading_benchmark(50).unwrap().edges.len(), expected);
    }

    #[test]
    fn cascading_rejects_bad_sizes() {
        for n in [0, 3, 7, 12] {
            assert!(matches!(cascading_benchmark(n), Err(Error::Parameter(_))));
        }
    }

    /// Independent oracle: Floyd-Warshall transitive closure.
    fn closure_strongly_connected(spec: &GraphSpec) -> bool {
        let n = spec.n_nodes;
        let mut reach = vec![vec![false; n]; n];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for e in &spec.edges {
            reach[e.source - 1][e.target - 1] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach.iter().all(|row| row.iter().all(|&r| r))
    }

    #[test]
    fn connectivity() {
        let pair = GraphSpec::new(2, vec![Edge::new(1, 2, 1.0), Edge::new(2, 1, 1.0)]).unwrap();
        assert!(is_strongly_connected(&pair).unwrap());
        let one_way = GraphSpec::new(2, vec![Edge::new(1, 2, 1.0)]).unwrap();
        assert!(!is_strongly_connected(&one_way).unwrap());
        let ring = GraphSpec::new(4, (1..=4).map(|i| Edge::new(i, i % 4 + 1, 1.0)).collect()).unwrap();
        assert!(is_strongly_connected(&ring).unwrap());
    }

    #[test]
    fn cascading_connectivity_matches_closure() {
        // Node 4 of each block never influences the rest of its block, so
        // the nodes {4, 9, 14, ...} form a separate strong component.
        for n in [5, 10, 50, 100, 200] {
            let spec = cascading_benchmark(n).unwrap();
            let oracle = closure_strongly_connected(&spec);
            assert!(!oracle, "N={n}");
            assert_eq!(is_strongly_connected(&spec).unwrap(), oracle, "N={n}");
        }
        // Adding the missing influence of node 4 closes the block.
        let mut five = cascading_benchmark(5).unwrap();
        five.edges.push(Edge::new(1, 4, 1.0));
        assert!(is_strongly_connected(&five).unwrap());
        assert!(closure_strongly_connected(&five));
    }

    #[test]
    fn validation_names_offending_edge() {
        let err = GraphSpec::new(3, vec![Edge::new(1, 2, 1.0), Edge::new(2, 4, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidEdge { index: 1, target_node: 4, .. }));
        let err = GraphSpec::new(3, vec![Edge::new(1, 2, 0.0)]).unwrap_err();
        assert!(err.to_string().contains("strictly positive"));
        assert!(GraphSpec::new(3, vec![Edge::new(2, 2, 1.0)]).is_err());
        assert!(GraphSpec::new(3, vec![Edge::new(1, 2, 1.0), Edge::new(1, 2, 2.0)]).is_err());
        assert!(GraphSpec::new(3, vec![Edge::new(1, 2, f64::NAN)]).is_err());
    }

    #[test]
    fn json_schema() {
        let spec = GraphSpec::from_json(r#"{"n_nodes": 3, "edges": [[1, 2, 0.5], [3, 1, 2]]}"#).unwrap();
        assert_eq!(spec.edges[1], Edge::new(3, 1, 2.0));
        assert!(GraphSpec::from_json(r#"{"n_nodes": 2, "edges": [[1, 3, 1.0]]}"#).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = GraphSpec> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::btree_map((1..=n, 1..=n), 0.01f64..10.0, 0..(n * n))
                .prop_map(move |m| {
                    let edges = m
                        .into_iter()
                        .filter(|((a, b), _)| a != b)
                        .map(|((a, b), w)| Edge::new(a, b, w))
                        .collect();
                    GraphSpec { n_nodes: n, edges }
                })
        })
    }

    proptest! {
        #[test]
        fn laplacian_rows_sum_to_zero(spec in arb_spec()) {
            let l = build_laplacian(&spec).unwrap();
            // exact: the diagonal is assembled from the same summands
            for (i, row) in l.matrix().outer_iter().enumerate() {
                let diag = row[i];
                let off: f64 = row.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).sum();
                prop_assert_eq!(diag + off, 0.0);
                prop_assert!(diag >= 0.0);
            }
        }

        #[test]
        fn json_round_trip(spec in arb_spec()) {
            let back = GraphSpec::from_json(&spec.to_json().unwrap()).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
