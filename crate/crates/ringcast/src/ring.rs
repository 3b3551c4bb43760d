//! Virtual ring construction and position arithmetic.
//!
//! The ring is the closed walk obtained by depth-first traversal of a
//! spanning tree, recording every visit of a node. A node appears once per
//! tree neighbor, so the walk has length 2(n-1). Kept edges outside the tree
//! connect non-consecutive positions and act as shortcuts.
//!
//! All routing decisions reduce to counter-clockwise (ccw) segment tests on
//! positions, so the half-open segment semantics of [`is_between`] is the
//! contract everything else leans on: the segment excludes its left bound,
//! includes its right bound, and `left == right` means the full circle.

use crate::topology::{LinkSelection, NodeId, SpanningTree};

use serde::{Deserialize, Serialize};

/// Index on the virtual ring; arithmetic is modulo the ring length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position(pub u16);

impl Position {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How a kept non-tree edge is expanded into position-level shortcuts.
///
/// `AllPairs` links every position of one endpoint with every position of the
/// other. `FirstPair` links only the first positions of both endpoints; kept
/// for comparing the two readings of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortcutExpansion {
    #[default]
    AllPairs,
    FirstPair,
}

/// `(to - from) mod len`: hops needed to walk ccw from `from` to `to`.
pub fn ccw_dist(from: Position, to: Position, len: usize) -> usize {
    debug_assert!(from.idx() < len && to.idx() < len);
    (to.idx() + len - from.idx()) % len
}

/// True when `test` lies in the ccw segment `(left, right]`. The left bound
/// is excluded, the right bound included, and `left == right` denotes the
/// whole circle (true for every `test`).
pub fn is_between(test: Position, left: Position, right: Position, len: usize) -> bool {
    if left == right {
        return true;
    }
    let d = ccw_dist(left, test, len);
    d > 0 && d <= ccw_dist(left, right, len)
}

/// Closed node sequence, per-node position lists and shortcut sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualRing {
    seq: Vec<NodeId>,
    pos: Vec<Vec<Position>>,
    shortcuts: Vec<Vec<Position>>,
}

impl VirtualRing {
    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn seq(&self) -> &[NodeId] {
        &self.seq
    }

    pub fn node_at(&self, p: Position) -> NodeId {
        self.seq[p.idx()]
    }

    /// Ring positions of `v` in ccw visit order (empty for absent nodes).
    pub fn positions_of(&self, v: NodeId) -> &[Position] {
        &self.pos[v]
    }

    pub fn shortcuts_at(&self, p: Position) -> &[Position] {
        &self.shortcuts[p.idx()]
    }

    pub fn successor(&self, p: Position) -> Position {
        Position(((p.idx() + 1) % self.len()) as u16)
    }

    pub fn ccw_dist(&self, from: Position, to: Position) -> usize {
        ccw_dist(from, to, self.len())
    }

    pub fn is_between(&self, test: Position, left: Position, right: Position) -> bool {
        is_between(test, left, right, self.len())
    }

    /// Largest ccw step from `p` that does not pass `goal`: the best of the
    /// ring successor and the shortcuts of `p`, measured by ccw distance and
    /// bounded by the distance to `goal`. The successor always qualifies, so
    /// a result exists. Distances of distinct candidates are distinct, so no
    /// tie-breaking is needed.
    pub fn get_pos_closest_to(&self, p: Position, goal: Position) -> Position {
        debug_assert_ne!(p, goal, "goal must differ from the current position");
        let bound = self.ccw_dist(p, goal);
        let mut best = self.successor(p);
        let mut best_d = 1usize;
        for &q in self.shortcuts_at(p) {
            let d = self.ccw_dist(p, q);
            if d <= bound && d > best_d {
                best = q;
                best_d = d;
            }
        }
        best
    }

    /// Dump format: ring length, the sequence, per-node position lists, and
    /// per-position shortcut sets (positions without shortcuts are omitted).
    pub fn to_dump(&self) -> String {
        let mut out = format!("{}\n", self.len());
        let seq: Vec<String> = self.seq.iter().map(|v| v.to_string()).collect();
        out.push_str(&seq.join(" "));
        out.push('\n');
        for (v, ps) in self.pos.iter().enumerate() {
            if ps.is_empty() {
                continue;
            }
            let ps: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
            out.push_str(&format!("pos {v}: {}\n", ps.join(" ")));
        }
        for (i, sc) in self.shortcuts.iter().enumerate() {
            if sc.is_empty() {
                continue;
            }
            let sc: Vec<String> = sc.iter().map(|p| p.to_string()).collect();
            out.push_str(&format!("sc {i}: {}\n", sc.join(" ")));
        }
        out
    }
}

/// Unrolls the tree into a virtual ring: depth-first traversal from the root,
/// children in canonical order, every visit (first arrival and each return
/// from a child) appending the node. Shortcuts come from the kept edges that
/// are not tree edges.
pub fn build_ring(tree: &SpanningTree, sel: &LinkSelection, mode: ShortcutExpansion) -> VirtualRing {
    build_ring_from(tree, &sel.non_tree_edges(tree), sel.node_count(), mode)
}

/// Variant taking the extra edges directly; churn rebuilds use this with an
/// id space larger than the set of live nodes.
pub(crate) fn build_ring_from(
    tree: &SpanningTree,
    extra_edges: &[(NodeId, NodeId)],
    slot_count: usize,
    mode: ShortcutExpansion,
) -> VirtualRing {
    let root = tree.root();
    let mut seq: Vec<NodeId> = Vec::new();
    let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
    seq.push(root);
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if *next < tree.children(v).len() {
            let c = tree.children(v)[*next];
            *next += 1;
            stack.push((c, 0));
            seq.push(c);
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                seq.push(p);
            }
        }
    }
    // The final return to the root duplicates position 0; the ring closes by
    // wrapping instead.
    if seq.len() > 1 {
        let closing = seq.pop();
        debug_assert_eq!(closing, Some(root));
    }
    let len = seq.len();
    assert!(len <= u16::MAX as usize, "ring too long for 16-bit positions");

    let mut pos = vec![Vec::new(); slot_count];
    for (i, &v) in seq.iter().enumerate() {
        pos[v].push(Position(i as u16));
    }

    let mut shortcuts: Vec<Vec<Position>> = vec![Vec::new(); len];
    {
        let mut link = |from: Position, to: Position| {
            if (from.idx() + 1) % len != to.idx() {
                shortcuts[from.idx()].push(to);
            }
        };
        for &(u, v) in extra_edges {
            match mode {
                ShortcutExpansion::AllPairs => {
                    for &pu in &pos[u] {
                        for &pv in &pos[v] {
                            link(pu, pv);
                            link(pv, pu);
                        }
                    }
                }
                ShortcutExpansion::FirstPair => {
                    if let (Some(&pu), Some(&pv)) = (pos[u].first(), pos[v].first()) {
                        link(pu, pv);
                        link(pv, pu);
                    }
                }
            }
        }
    }
    for list in &mut shortcuts {
        list.sort_unstable();
        list.dedup();
    }

    let ring = VirtualRing { seq, pos, shortcuts };
    debug_assert_ring_invariants(&ring, tree);
    ring
}

fn debug_assert_ring_invariants(ring: &VirtualRing, tree: &SpanningTree) {
    if cfg!(debug_assertions) {
        let l = ring.len();
        for i in 0..l {
            let a = ring.seq[i];
            let b = ring.seq[(i + 1) % l];
            assert!(
                tree.parent(a) == Some(b) || tree.parent(b) == Some(a),
                "ring neighbors {a},{b} are not tree neighbors"
            );
        }
        for (v, ps) in ring.pos.iter().enumerate() {
            if !ps.is_empty() {
                assert_eq!(ps.len(), tree.degree(v), "positions of {v} != tree degree");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_tree, generate_er, select_links, Graph, LinkSelection};
    use proptest::prelude::*;

    /// Six-node example: r=0, a=1, b=2, c=3, d=4, e=5.
    /// Expected walk r,e,c,a,c,e,d,b,d,e with shortcuts from the extra c-d edge.
    fn six_node_ring() -> VirtualRing {
        let g = Graph::new(6, [(0, 5), (5, 3), (3, 1), (5, 4), (4, 2), (3, 4)]).unwrap();
        let sel = select_links(&g, 3, 0).unwrap();
        let tree = build_tree(&sel, 0);
        build_ring(&tree, &sel, ShortcutExpansion::AllPairs)
    }

    /// Walks the ring one step at a time from `left`; `test` must be met
    /// within the first `ccw_dist(left, right)` steps (all `len` steps when
    /// the bounds coincide).
    fn is_between_walk_oracle(test: Position, left: Position, right: Position, len: usize) -> bool {
        let steps = if left == right { len } else { ccw_dist(left, right, len) };
        let mut cur = left;
        for _ in 0..steps {
            cur = Position(((cur.idx() + 1) % len) as u16);
            if cur == test {
                return true;
            }
        }
        false
    }

    #[test]
    fn six_node_walk_matches_expected_sequence() {
        let ring = six_node_ring();
        assert_eq!(ring.len(), 10);
        assert_eq!(ring.seq(), &[0, 5, 3, 1, 3, 5, 4, 2, 4, 5]);
        let p = |i: u16| Position(i);
        assert_eq!(ring.positions_of(5), &[p(1), p(5), p(9)]);
        assert_eq!(ring.positions_of(3), &[p(2), p(4)]);
        assert_eq!(ring.positions_of(4), &[p(6), p(8)]);
        assert_eq!(ring.positions_of(0), &[p(0)]);
    }

    #[test]
    fn six_node_shortcuts_connect_both_position_sets() {
        let ring = six_node_ring();
        let p = |i: u16| Position(i);
        assert_eq!(ring.shortcuts_at(p(2)), &[p(6), p(8)]);
        assert_eq!(ring.shortcuts_at(p(4)), &[p(6), p(8)]);
        assert_eq!(ring.shortcuts_at(p(6)), &[p(2), p(4)]);
        assert_eq!(ring.shortcuts_at(p(8)), &[p(2), p(4)]);
        for i in [0u16, 1, 3, 5, 7, 9] {
            assert!(ring.shortcuts_at(p(i)).is_empty());
        }
    }

    #[test]
    fn first_pair_expansion_links_only_first_positions() {
        let g = Graph::new(6, [(0, 5), (5, 3), (3, 1), (5, 4), (4, 2), (3, 4)]).unwrap();
        let sel = select_links(&g, 3, 0).unwrap();
        let tree = build_tree(&sel, 0);
        let ring = build_ring(&tree, &sel, ShortcutExpansion::FirstPair);
        let p = |i: u16| Position(i);
        assert_eq!(ring.shortcuts_at(p(2)), &[p(6)]);
        assert_eq!(ring.shortcuts_at(p(6)), &[p(2)]);
        assert!(ring.shortcuts_at(p(4)).is_empty());
        assert!(ring.shortcuts_at(p(8)).is_empty());
    }

    #[test]
    fn path_graph_ring_has_no_shortcuts() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let sel = LinkSelection::all(&g);
        let tree = build_tree(&sel, 0);
        let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
        assert_eq!(ring.len(), 8);
        assert!((0..8).all(|i| ring.shortcuts_at(Position(i)).is_empty()));
    }

    #[test]
    fn ccw_dist_examples() {
        assert_eq!(ccw_dist(Position(3), Position(3), 10), 0);
        assert_eq!(ccw_dist(Position(1), Position(3), 20), 2);
        // Stepwise: 18 -> 19 -> 0 -> 1 -> 2 is four hops.
        assert_eq!(ccw_dist(Position(18), Position(2), 20), 4);
    }

    #[test]
    fn is_between_pins_the_segment_semantics() {
        // Equal bounds mean the full circle.
        assert!(is_between(Position(7), Position(4), Position(4), 20));
        // Beyond the right bound.
        assert!(!is_between(Position(2), Position(18), Position(0), 20));
        assert!(!is_between(Position(16), Position(8), Position(12), 20));
        // The left bound itself is excluded.
        assert!(!is_between(Position(5), Position(5), Position(6), 20));
        // The right bound is included.
        assert!(is_between(Position(6), Position(5), Position(6), 20));
    }

    #[test]
    fn is_between_agrees_with_walk_oracle_exhaustively() {
        for len in [3usize, 8, 10, 21, 40] {
            for t in 0..len {
                for l in 0..len {
                    for r in 0..len {
                        let (t, l, r) = (Position(t as u16), Position(l as u16), Position(r as u16));
                        assert_eq!(
                            is_between(t, l, r, len),
                            is_between_walk_oracle(t, l, r, len),
                            "len={len} test={t} left={l} right={r}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn closest_position_follows_shortcuts_up_to_goal() {
        let ring = six_node_ring();
        let p = |i: u16| Position(i);
        // From 8 the shortcuts reach 2 and 4; goal 2 admits the jump to 2.
        assert_eq!(ring.get_pos_closest_to(p(8), p(2)), p(2));
        // From 4 the shortcut to 6 is within goal 6; the one to 8 is beyond.
        assert_eq!(ring.get_pos_closest_to(p(4), p(6)), p(6));
        // No shortcuts at 9: successor.
        assert_eq!(ring.get_pos_closest_to(p(9), p(2)), p(0));
        assert_eq!(ring.get_pos_closest_to(p(0), p(2)), p(1));
    }

    #[test]
    fn closest_position_never_passes_goal() {
        for seed in 0..8u64 {
            let g = generate_er(18, 0.3, seed).unwrap();
            let sel = LinkSelection::all(&g);
            let tree = build_tree(&sel, 0);
            let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
            for p in 0..ring.len() {
                for goal in 0..ring.len() {
                    if p == goal {
                        continue;
                    }
                    let (p, goal) = (Position(p as u16), Position(goal as u16));
                    let got = ring.get_pos_closest_to(p, goal);
                    assert!(ring.ccw_dist(p, got) <= ring.ccw_dist(p, goal));
                    assert!(
                        got == ring.successor(p) || ring.shortcuts_at(p).contains(&got),
                        "result must be a one-hop candidate"
                    );
                }
            }
        }
    }

    #[test]
    fn ring_length_and_position_counts_match_tree_degrees() {
        for seed in 0..6u64 {
            for n in [5usize, 20, 80, 200] {
                let g = generate_er(n, (8.0 / n as f64).min(1.0).max(0.05), seed).unwrap();
                let sel = LinkSelection::all(&g);
                let tree = build_tree(&sel, 0);
                let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
                assert_eq!(ring.len(), 2 * (n - 1));
                for v in 0..n {
                    assert_eq!(ring.positions_of(v).len(), tree.degree(v));
                }
            }
        }
    }

    #[test]
    fn position_lists_never_interlace() {
        for seed in 0..6u64 {
            let g = generate_er(14, 0.3, seed).unwrap();
            let sel = LinkSelection::all(&g);
            let tree = build_tree(&sel, 0);
            let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
            let l = ring.len();
            for v in 0..14 {
                for w in 0..14 {
                    if v == w {
                        continue;
                    }
                    // All positions of w must sit inside a single ccw gap
                    // between consecutive positions of v.
                    let vp = ring.positions_of(v);
                    let wp = ring.positions_of(w);
                    if vp.len() < 2 || wp.is_empty() {
                        continue;
                    }
                    let in_gap = |gap: (Position, Position)| {
                        wp.iter().all(|&q| is_between(q, gap.0, gap.1, l) && q != gap.1)
                    };
                    let mut gaps = 0;
                    for i in 0..vp.len() {
                        let gap = (vp[i], vp[(i + 1) % vp.len()]);
                        if in_gap(gap) {
                            gaps += 1;
                        }
                    }
                    assert!(gaps >= 1, "positions of {w} interlace with {v}");
                }
            }
        }
    }

    #[test]
    fn shortcut_entries_point_at_real_non_tree_edges() {
        let g = generate_er(16, 0.35, 9).unwrap();
        let sel = LinkSelection::all(&g);
        let tree = build_tree(&sel, 0);
        let extra = sel.non_tree_edges(&tree);
        let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
        for p in 0..ring.len() {
            let p = Position(p as u16);
            for &q in ring.shortcuts_at(p) {
                assert_ne!(ring.successor(p), q, "shortcut duplicates the ring edge");
                let (a, b) = (ring.node_at(p), ring.node_at(q));
                assert!(
                    extra.contains(&(a.min(b), a.max(b))),
                    "shortcut {p}->{q} has no backing edge"
                );
            }
        }
    }

    #[test]
    fn dump_format_of_six_node_ring() {
        let ring = six_node_ring();
        let dump = ring.to_dump();
        let expected = "10\n\
                        0 5 3 1 3 5 4 2 4 5\n\
                        pos 0: 0\n\
                        pos 1: 3\n\
                        pos 2: 7\n\
                        pos 3: 2 4\n\
                        pos 4: 6 8\n\
                        pos 5: 1 5 9\n\
                        sc 2: 6 8\n\
                        sc 4: 6 8\n\
                        sc 6: 2 4\n\
                        sc 8: 2 4\n";
        assert_eq!(dump, expected);
    }

    proptest! {
        #[test]
        fn random_rings_keep_structural_invariants(seed in 0u64..500, n in 4usize..40) {
            let p = (6.0 / n as f64).clamp(0.2, 1.0);
            let Ok(g) = generate_er(n, p, seed) else { return Ok(()) };
            let sel = LinkSelection::all(&g);
            let tree = build_tree(&sel, 0);
            let ring = build_ring(&tree, &sel, ShortcutExpansion::AllPairs);
            prop_assert_eq!(ring.len(), 2 * (n - 1));
            let total: usize = (0..n).map(|v| ring.positions_of(v).len()).sum();
            prop_assert_eq!(total, ring.len());
        }
    }
}
