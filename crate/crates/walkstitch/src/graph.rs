//! Graph construction, ingestion, generators, and structural queries shared
//! by the simulator and the exact oracle.
//!
//! All protocols in this crate run on undirected, unweighted, connected
//! graphs with node IDs `0..n-1`. Construction validates those invariants up
//! front so the protocol layers never have to.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Node identifier; always in `0..n`.
pub type NodeId = usize;

/// How many times a random graph family is resampled before giving up on
/// finding a connected instance.
pub const CONNECTIVITY_RETRY_BUDGET: usize = 100;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: self-loop at node {node}")]
    SelfLoop { line: usize, node: NodeId },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: NodeId, v: NodeId },
    #[error("graph is disconnected: no path between nodes {a} and {b}")]
    Disconnected { a: NodeId, b: NodeId },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("no connected sample of {kind} after {budget} attempts")]
    RetryBudgetExhausted { kind: String, budget: usize },
}

/// An undirected simple connected graph with sorted per-node adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    m: usize,
    adjacency: Vec<Vec<NodeId>>,
}

impl Graph {
    /// Builds a graph from an undirected edge list over nodes `0..n-1`.
    ///
    /// Rejects self-loops, duplicate edges (in either orientation), node IDs
    /// outside `0..n`, and disconnected inputs.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidParam(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (line, &(u, v)) in edges.iter().enumerate() {
            let line = line + 1;
            if u == v {
                return Err(GraphError::SelfLoop { line, node: u });
            }
            if u >= n || v >= n {
                return Err(GraphError::Parse {
                    line,
                    reason: format!("node id out of range: ({u}, {v}) with n={n}"),
                });
            }
            if adjacency[u].contains(&v) {
                return Err(GraphError::DuplicateEdge { line, u, v });
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let g = Graph {
            n,
            m: edges.len(),
            adjacency,
        };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let dist = self.bfs_distances(0);
        if let Some(b) = dist.iter().position(|d| d.is_none()) {
            return Err(GraphError::Disconnected { a: 0, b });
        }
        Ok(())
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted neighbors of `v`.
    pub fn adj(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    /// All undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            for &v in &self.adjacency[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Position of `v` in `adj(u)`, if adjacent.
    pub fn neighbor_index(&self, u: NodeId, v: NodeId) -> Option<usize> {
        self.adjacency[u].binary_search(&v).ok()
    }

    fn bfs_distances(&self, root: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Single-source eccentricity: the largest BFS distance from `root`.
    pub fn eccentricity(&self, root: NodeId) -> usize {
        self.bfs_distances(root)
            .iter()
            .map(|d| d.expect("graph is connected"))
            .max()
            .unwrap_or(0)
    }

    /// True iff the graph is bipartite (2-colorable).
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![None; self.n];
        color[0] = Some(false);
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for &w in &self.adjacency[u] {
                match color[w] {
                    None => {
                        color[w] = Some(!cu);
                        queue.push_back(w);
                    }
                    Some(cw) if cw == cu => return false,
                    Some(_) => {}
                }
            }
        }
        true
    }
}

/// BFS tree with deterministic parent choice (lowest-ID neighbor on the
/// previous level), so simulator runs are reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    pub root: NodeId,
    /// Parent of each node; `None` exactly for the root.
    pub parent: Vec<Option<NodeId>>,
    pub level: Vec<usize>,
    pub depth: usize,
}

/// Builds the BFS tree rooted at `root`. Ties between same-level parent
/// candidates are broken by lowest neighbor ID.
pub fn bfs_tree(g: &Graph, root: NodeId) -> BfsTree {
    assert!(root < g.n(), "root {root} out of range");
    let dist = g.bfs_distances(root);
    let level: Vec<usize> = dist.iter().map(|d| d.expect("connected")).collect();
    let mut parent = vec![None; g.n()];
    for v in 0..g.n() {
        if v == root {
            continue;
        }
        parent[v] = g
            .adj(v)
            .iter()
            .copied()
            .find(|&u| level[u] + 1 == level[v]);
        debug_assert!(parent[v].is_some());
    }
    let depth = level.iter().copied().max().unwrap_or(0);
    BfsTree {
        root,
        parent,
        level,
        depth,
    }
}

/// Exact diameter via all-sources BFS.
pub fn diameter(g: &Graph) -> usize {
    (0..g.n()).map(|v| g.eccentricity(v)).max().unwrap_or(0)
}

/// Parses an edge-list text: one undirected edge per line as two node IDs,
/// blank lines and `#` comments ignored. The node count is one plus the
/// largest ID seen.
pub fn load_graph(text: &str) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    let mut max_id = 0;
    let mut edge_lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut it = content.split_whitespace();
        let parse = |tok: Option<&str>, line: usize| -> Result<NodeId, GraphError> {
            let tok = tok.ok_or(GraphError::Parse {
                line,
                reason: "expected two node ids".into(),
            })?;
            tok.parse::<NodeId>().map_err(|_| GraphError::Parse {
                line,
                reason: format!("bad node id {tok:?}"),
            })
        };
        let u = parse(it.next(), line)?;
        let v = parse(it.next(), line)?;
        if it.next().is_some() {
            return Err(GraphError::Parse {
                line,
                reason: "trailing tokens after edge".into(),
            });
        }
        max_id = max_id.max(u).max(v);
        edges.push((u, v));
        edge_lines.push(line);
    }
    if edges.is_empty() {
        return Err(GraphError::Parse {
            line: 0,
            reason: "no edges in input".into(),
        });
    }
    // Re-validate with original line numbers for good error messages.
    let n = max_id + 1;
    let mut adjacency = vec![Vec::new(); n];
    for (&(u, v), &line) in edges.iter().zip(&edge_lines) {
        if u == v {
            return Err(GraphError::SelfLoop { line, node: u });
        }
        if adjacency[u].contains(&v) {
            return Err(GraphError::DuplicateEdge { line, u, v });
        }
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    Graph::from_edges(n, &edges)
}

/// Generator families. Deterministic for a fixed seed; random families are
/// resampled until connected within [`CONNECTIVITY_RETRY_BUDGET`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphKind {
    Path,
    Cycle,
    Star,
    Complete,
    /// Square grid; `n` must be a perfect square.
    Grid,
    ErdosRenyi { p: f64 },
    RandomGeometric { r: f64 },
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Path => write!(f, "path"),
            GraphKind::Cycle => write!(f, "cycle"),
            GraphKind::Star => write!(f, "star"),
            GraphKind::Complete => write!(f, "complete"),
            GraphKind::Grid => write!(f, "grid"),
            GraphKind::ErdosRenyi { p } => write!(f, "erdos_renyi({p})"),
            GraphKind::RandomGeometric { r } => write!(f, "random_geometric({r})"),
        }
    }
}

/// Generates a graph of the given family with `n` nodes.
pub fn generate(kind: GraphKind, n: usize, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidParam(format!(
            "generator needs n >= 2, got {n}"
        )));
    }
    match kind {
        GraphKind::Path => {
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Cycle => {
            if n < 3 {
                return Err(GraphError::InvalidParam("cycle needs n >= 3".into()));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Star => {
            let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphKind::Complete => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    edges.push((u, v));
                }
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::Grid => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(GraphError::InvalidParam(format!(
                    "grid needs a perfect square node count, got {n}"
                )));
            }
            let mut edges = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let v = r * side + c;
                    if c + 1 < side {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < side {
                        edges.push((v, v + side));
                    }
                }
            }
            Graph::from_edges(n, &edges)
        }
        GraphKind::ErdosRenyi { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidParam(format!("p={p} not in [0,1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..CONNECTIVITY_RETRY_BUDGET {
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.gen::<f64>() < p {
                            edges.push((u, v));
                        }
                    }
                }
                if !edges.is_empty() {
                    if let Ok(g) = Graph::from_edges(n, &edges) {
                        return Ok(g);
                    }
                }
            }
            Err(GraphError::RetryBudgetExhausted {
                kind: kind.to_string(),
                budget: CONNECTIVITY_RETRY_BUDGET,
            })
        }
        GraphKind::RandomGeometric { r } => {
            if r <= 0.0 {
                return Err(GraphError::InvalidParam(format!("radius {r} <= 0")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..CONNECTIVITY_RETRY_BUDGET {
                let pts: Vec<(f64, f64)> =
                    (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        let (dx, dy) = (pts[u].0 - pts[v].0, pts[u].1 - pts[v].1);
                        if (dx * dx + dy * dy).sqrt() <= r {
                            edges.push((u, v));
                        }
                    }
                }
                if !edges.is_empty() {
                    if let Ok(g) = Graph::from_edges(n, &edges) {
                        return Ok(g);
                    }
                }
            }
            Err(GraphError::RetryBudgetExhausted {
                kind: kind.to_string(),
                budget: CONNECTIVITY_RETRY_BUDGET,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force all-pairs shortest paths (Floyd-Warshall), independent of
    /// the BFS implementation it checks.
    fn floyd_warshall(g: &Graph) -> Vec<Vec<usize>> {
        let n = g.n();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for v in 0..n {
            d[v][v] = 0;
            for &w in g.adj(v) {
                d[v][w] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn load_smallest_path() {
        let g = load_graph("0 1\n1 2").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.m(), 2);
    }

    #[test]
    fn load_rejects_duplicate_edge() {
        let err = load_graph("0 1\n0 1").unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEdge { line: 2, .. }));
        let err = load_graph("0 1\n1 0").unwrap_err();
        assert!(matches!(err, GraphError::DuplicateEdge { line: 2, .. }));
    }

    #[test]
    fn load_rejects_two_components() {
        let err = load_graph("0 1\n2 3").unwrap_err();
        assert!(matches!(err, GraphError::Disconnected { .. }));
    }

    #[test]
    fn load_rejects_self_loop_with_line() {
        let err = load_graph("0 1\n2 2\n1 2").unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop { line: 2, node: 2 }));
    }

    #[test]
    fn load_skips_comments() {
        let g = load_graph("# triangle\n0 1\n1 2 # closing\n0 2\n").unwrap();
        assert_eq!(g.m(), 3);
    }

    #[test]
    fn star_degrees() {
        let g = generate(GraphKind::Star, 5, 0).unwrap();
        assert_eq!(g.degree(0), 4);
        for v in 1..5 {
            assert_eq!(g.degree(v), 1);
        }
    }

    #[test]
    fn cycle_structure() {
        let g = generate(GraphKind::Cycle, 8, 0).unwrap();
        assert!((0..8).all(|v| g.degree(v) == 2));
        assert_eq!(diameter(&g), 4);
    }

    #[test]
    fn erdos_renyi_deterministic() {
        let a = generate(GraphKind::ErdosRenyi { p: 0.5 }, 10, 7).unwrap();
        let b = generate(GraphKind::ErdosRenyi { p: 0.5 }, 10, 7).unwrap();
        assert_eq!(a, b);
        let c = generate(GraphKind::ErdosRenyi { p: 0.5 }, 10, 8).unwrap();
        // Overwhelmingly likely to differ; determinism is the point above.
        assert!(a != c || a.m() == c.m());
    }

    #[test]
    fn random_geometric_connected() {
        let g = generate(GraphKind::RandomGeometric { r: 0.5 }, 12, 3).unwrap();
        assert_eq!(g.n(), 12);
        assert!(g.check_connected().is_ok());
    }

    #[test]
    fn bfs_star_and_cycle() {
        let star = generate(GraphKind::Star, 5, 0).unwrap();
        let t = bfs_tree(&star, 0);
        assert_eq!(t.depth, 1);
        for v in 1..5 {
            assert_eq!(t.parent[v], Some(0));
        }
        let cycle = generate(GraphKind::Cycle, 8, 0).unwrap();
        assert_eq!(bfs_tree(&cycle, 0).depth, 4);
    }

    #[test]
    fn bfs_grid_corner_depth() {
        let g = generate(GraphKind::Grid, 16, 0).unwrap();
        let t = bfs_tree(&g, 0);
        assert_eq!(t.depth, 6);
        let d = floyd_warshall(&g);
        for v in 0..16 {
            assert_eq!(t.level[v], d[0][v]);
        }
    }

    #[test]
    fn bfs_parent_tie_break_lowest() {
        // 4-cycle: node 3 is adjacent to both 0 (root) and 2; from root 0 its
        // parent must be 0. Node 2 at level 2 has neighbors 1 and 3 at level
        // 1 and must pick 1.
        let g = generate(GraphKind::Cycle, 4, 0).unwrap();
        let t = bfs_tree(&g, 0);
        assert_eq!(t.parent[3], Some(0));
        assert_eq!(t.parent[2], Some(1));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&generate(GraphKind::Complete, 6, 0).unwrap()), 1);
        assert_eq!(diameter(&generate(GraphKind::Path, 10, 0).unwrap()), 9);
        let g = generate(GraphKind::Grid, 25, 0).unwrap();
        assert_eq!(diameter(&g), 8);
        let d = floyd_warshall(&g);
        let brute = (0..25)
            .flat_map(|i| (0..25).map(move |j| (i, j)))
            .map(|(i, j)| d[i][j])
            .max()
            .unwrap();
        assert_eq!(diameter(&g), brute);
    }

    #[test]
    fn degree_sum_is_twice_m() {
        for (kind, n) in [
            (GraphKind::Path, 7),
            (GraphKind::Cycle, 9),
            (GraphKind::Star, 6),
            (GraphKind::Complete, 5),
            (GraphKind::Grid, 9),
            (GraphKind::ErdosRenyi { p: 0.4 }, 12),
        ] {
            let g = generate(kind, n, 11).unwrap();
            let sum: usize = (0..g.n()).map(|v| g.degree(v)).sum();
            assert_eq!(sum, 2 * g.m(), "{kind}");
        }
    }

    #[test]
    fn bipartite_detection() {
        assert!(generate(GraphKind::Cycle, 8, 0).unwrap().is_bipartite());
        assert!(!generate(GraphKind::Cycle, 9, 0).unwrap().is_bipartite());
        assert!(generate(GraphKind::Star, 5, 0).unwrap().is_bipartite());
        assert!(!generate(GraphKind::Complete, 4, 0).unwrap().is_bipartite());
    }
}
