//! Communication graphs and the structures derived from them.
//!
//! A [`Graph`] is always connected. [`select_links`] thins it down to a
//! bounded-degree subset (standing in for a topology control layer that only
//! keeps a limited number of stable neighbors), and [`build_tree`] derives the
//! BFS spanning tree the virtual ring is later unrolled from.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type NodeId = usize;

/// Resamples allowed before an Erdős–Rényi draw is declared hopeless.
pub const ER_RETRY_BUDGET: usize = 1000;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no connected G({n}, {p}) sample after {attempts} attempts")]
    GenerationFailed { n: usize, p: f64, attempts: usize },
    #[error("no connected subgraph with maximum degree {cap} found")]
    SelectionFailed { cap: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph text: {0}")]
    Parse(String),
}

/// Undirected, connected, simple graph over nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: BTreeSet<(NodeId, NodeId)>,
    adj: Vec<Vec<NodeId>>,
}

impl Graph {
    /// Builds a graph from an edge list. Rejects self-loops, duplicate or
    /// out-of-range edges, and disconnected inputs.
    pub fn new(
        node_count: usize,
        edge_list: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::InvalidParams("node count must be positive".into()));
        }
        let mut edges = BTreeSet::new();
        for (u, v) in edge_list {
            if u == v {
                return Err(TopologyError::InvalidParams(format!("self-loop at node {u}")));
            }
            if u >= node_count || v >= node_count {
                return Err(TopologyError::InvalidParams(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            let e = (u.min(v), u.max(v));
            if !edges.insert(e) {
                return Err(TopologyError::InvalidParams(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
        }
        if !is_connected(node_count, &edges) {
            return Err(TopologyError::Disconnected);
        }
        let adj = build_adjacency(node_count, &edges);
        Ok(Self { node_count, edges, adj })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// Plain text form: first line `n m`, then one `u v` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.node_count, self.edges.len());
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Parses the `to_text` format, enforcing the same validity rules as
    /// [`Graph::new`] plus an edge-count check against the header.
    pub fn from_text(text: &str) -> Result<Self, TopologyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| TopologyError::Parse("empty input".into()))?;
        let mut parts = header.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| TopologyError::Parse("bad node count in header".into()))?;
        let m: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| TopologyError::Parse("bad edge count in header".into()))?;
        let mut edge_list = Vec::with_capacity(m);
        for (i, line) in lines.enumerate() {
            let mut it = line.split_whitespace();
            let u: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| TopologyError::Parse(format!("bad edge line {}", i + 2)))?;
            let v: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| TopologyError::Parse(format!("bad edge line {}", i + 2)))?;
            edge_list.push((u, v));
        }
        if edge_list.len() != m {
            return Err(TopologyError::Parse(format!(
                "header declares {m} edges, found {}",
                edge_list.len()
            )));
        }
        Graph::new(n, edge_list)
    }
}

fn build_adjacency(n: usize, edges: &BTreeSet<(NodeId, NodeId)>) -> Vec<Vec<NodeId>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

fn is_connected(n: usize, edges: &BTreeSet<(NodeId, NodeId)>) -> bool {
    if n == 0 {
        return false;
    }
    let adj = build_adjacency(n, edges);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// Samples a connected G(n, p) graph, resampling up to [`ER_RETRY_BUDGET`]
/// times. Deterministic for a fixed seed.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph, TopologyError> {
    if n < 2 {
        return Err(TopologyError::InvalidParams("need at least 2 nodes".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(TopologyError::InvalidParams(format!(
            "edge probability {p} outside (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ER_RETRY_BUDGET {
        let mut edges = BTreeSet::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen_bool(p) {
                    edges.insert((u, v));
                }
            }
        }
        if is_connected(n, &edges) {
            let adj = build_adjacency(n, &edges);
            return Ok(Graph { node_count: n, edges, adj });
        }
    }
    Err(TopologyError::GenerationFailed { n, p, attempts: ER_RETRY_BUDGET })
}

/// A connected, degree-capped subset of a graph's edges.
#[derive(Debug, Clone)]
pub struct LinkSelection {
    base: Graph,
    kept: BTreeSet<(NodeId, NodeId)>,
    degree_cap: usize,
}

impl LinkSelection {
    /// Keeps every edge. Usable whenever no degree bound is wanted.
    pub fn all(base: &Graph) -> Self {
        Self {
            base: base.clone(),
            kept: base.edges.clone(),
            degree_cap: base.node_count.max(1),
        }
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn node_count(&self) -> usize {
        self.base.node_count
    }

    pub fn kept_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.kept.iter().copied()
    }

    pub fn kept_count(&self) -> usize {
        self.kept.len()
    }

    pub fn contains(&self, u: NodeId, v: NodeId) -> bool {
        self.kept.contains(&(u.min(v), u.max(v)))
    }

    pub fn kept_degree(&self, v: NodeId) -> usize {
        self.kept.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn kept_adjacency(&self) -> Vec<Vec<NodeId>> {
        build_adjacency(self.base.node_count, &self.kept)
    }

    /// Kept edges that are not part of `tree`; these become ring shortcuts.
    pub fn non_tree_edges(&self, tree: &SpanningTree) -> Vec<(NodeId, NodeId)> {
        self.kept
            .iter()
            .copied()
            .filter(|&(u, v)| tree.parent(u) != Some(v) && tree.parent(v) != Some(u))
            .collect()
    }

    pub(crate) fn kept_set(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.kept
    }
}

/// Greedily prunes edges at nodes over the cap, highest degree first, never
/// breaking connectivity. Deterministic per seed (the seed only breaks ties).
pub fn select_links(g: &Graph, degree_cap: usize, seed: u64) -> Result<LinkSelection, TopologyError> {
    if degree_cap < 2 {
        return Err(TopologyError::InvalidParams("degree cap must be at least 2".into()));
    }
    let n = g.node_count;
    let mut kept: BTreeSet<(NodeId, NodeId)> = g.edges.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fixed random rank per edge so equal-priority choices stay reproducible.
    let rank: std::collections::BTreeMap<(NodeId, NodeId), u64> =
        g.edges.iter().map(|&e| (e, rng.gen())).collect();

    loop {
        let mut deg = vec![0usize; n];
        for &(u, v) in &kept {
            deg[u] += 1;
            deg[v] += 1;
        }
        let over = (0..n)
            .filter(|&v| deg[v] > degree_cap)
            .max_by_key(|&v| (deg[v], std::cmp::Reverse(v)));
        let Some(v) = over else { break };

        let mut candidates: Vec<(NodeId, NodeId)> =
            kept.iter().copied().filter(|&(a, b)| a == v || b == v).collect();
        candidates.sort_by_key(|&(a, b)| {
            let other = if a == v { b } else { a };
            (std::cmp::Reverse(deg[other]), rank[&(a, b)])
        });

        let mut removed = false;
        for e in candidates {
            let mut trial = kept.clone();
            trial.remove(&e);
            if is_connected(n, &trial) {
                kept = trial;
                removed = true;
                break;
            }
        }
        if !removed {
            return Err(TopologyError::SelectionFailed { cap: degree_cap });
        }
    }

    Ok(LinkSelection { base: g.clone(), kept, degree_cap })
}

/// Rooted spanning tree with a canonical child order (ascending node id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanningTree {
    root: NodeId,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

impl SpanningTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    /// Tree degree: parent plus children.
    pub fn degree(&self, v: NodeId) -> usize {
        self.children[v].len() + usize::from(self.parent[v].is_some())
    }

    /// Slots in the id space; dead ids (after churn) have no parent and no children.
    pub fn slot_count(&self) -> usize {
        self.parent.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p.min(v), p.max(v))))
    }

    pub fn edge_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    /// Hop distance between two nodes along tree edges.
    pub fn distance(&self, a: NodeId, b: NodeId) -> usize {
        let depth = |mut v: NodeId| {
            let mut d = 0;
            while let Some(p) = self.parent[v] {
                v = p;
                d += 1;
            }
            d
        };
        let (mut a, mut b) = (a, b);
        let (mut da, mut db) = (depth(a), depth(b));
        let mut dist = 0;
        while da > db {
            a = self.parent[a].unwrap();
            da -= 1;
            dist += 1;
        }
        while db > da {
            b = self.parent[b].unwrap();
            db -= 1;
            dist += 1;
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
            dist += 2;
        }
        dist
    }
}

/// BFS spanning tree over the kept edges, rooted at `root`. Parents are the
/// first discoverers, so among equal-depth candidates the smallest id wins.
pub fn build_tree(sel: &LinkSelection, root: NodeId) -> SpanningTree {
    let adj = sel.kept_adjacency();
    bfs_tree(sel.node_count(), &adj, root)
}

/// Low-level BFS tree builder over an adjacency list. Nodes unreachable from
/// `root` (absent ids after churn) stay parentless and childless.
pub(crate) fn bfs_tree(n: usize, adj: &[Vec<NodeId>], root: NodeId) -> SpanningTree {
    assert!(root < n, "root {root} out of range");
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                children[v].push(w);
                queue.push_back(w);
            }
        }
    }
    for list in &mut children {
        list.sort_unstable();
    }
    SpanningTree { root, parent, children }
}

/// Node with minimum BFS eccentricity; ties broken by smallest id.
pub fn central_node(g: &Graph) -> NodeId {
    central_node_in(g.node_count, &g.adj, None)
}

/// Eccentricity-minimal node restricted to `alive` (all nodes when `None`).
pub(crate) fn central_node_in(n: usize, adj: &[Vec<NodeId>], alive: Option<&[bool]>) -> NodeId {
    let is_alive = |v: usize| alive.map_or(true, |a| a[v]);
    let mut best = None;
    for v in (0..n).filter(|&v| is_alive(v)) {
        let mut dist = vec![usize::MAX; n];
        dist[v] = 0;
        let mut queue = VecDeque::from([v]);
        let mut ecc = 0;
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if is_alive(w) && dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    ecc = ecc.max(dist[w]);
                    queue.push_back(w);
                }
            }
        }
        match best {
            None => best = Some((ecc, v)),
            Some((e, _)) if ecc < e => best = Some((ecc, v)),
            _ => {}
        }
    }
    best.expect("no alive node").1
}
