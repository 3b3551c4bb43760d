//! Reference routing strategies the ring protocol is measured against.
//!
//! All of them are computed from global knowledge: the naive full-ring
//! traversal, a breadth-first tree per publisher pruned down to subscribers,
//! the shared central tree, and subscriber-direction forwarding on a shared
//! tree (after Shen). The analytic evaluator in [`RingcastEvaluator`] drives the
//! real forwarding code over a converged routing table so message counts can
//! be compared without running the event simulator.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use crate::pubsub::{ChannelId, NodeState, ProtocolParams, PubMsg, Tick};
use crate::ring::{Position, VirtualRing};
use crate::topology::{Graph, NodeId, SpanningTree};

/// Outcome of routing one publication under some strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteResult {
    /// Number of point-to-point transmissions.
    pub transmissions: u64,
    /// Directed node pairs, one per transmission.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Nodes that delivered the publication.
    pub delivered: BTreeSet<NodeId>,
    /// Hop distance from the publisher per delivering node.
    pub hops: BTreeMap<NodeId, u32>,
}

/// Full ring walk: the publication visits every position once, obliviously.
/// Exactly `l` transmissions; a subscriber delivers at its first visited
/// position. The publisher itself does not deliver.
pub fn route_naive_ring(
    ring: &VirtualRing,
    publisher: NodeId,
    subscribers: &BTreeSet<NodeId>,
) -> RouteResult {
    let l = ring.len();
    let start = ring.positions_of(publisher)[0];
    let mut edges = Vec::with_capacity(l);
    let mut delivered = BTreeSet::new();
    let mut hops = BTreeMap::new();
    let mut cur = start;
    for step in 1..=l {
        let next = ring.successor(cur);
        edges.push((ring.node_at(cur), ring.node_at(next)));
        let owner = ring.node_at(next);
        if owner != publisher && subscribers.contains(&owner) && !delivered.contains(&owner) {
            delivered.insert(owner);
            hops.insert(owner, step as u32);
        }
        cur = next;
    }
    RouteResult { transmissions: l as u64, edges, delivered, hops }
}

/// Per-publisher strategy: BFS tree rooted at the publisher (smallest-id
/// parent on ties), leaves not covering a subscriber pruned to fixpoint.
pub fn route_td(g: &Graph, publisher: NodeId, subscribers: &BTreeSet<NodeId>) -> RouteResult {
    let n = g.node_count();
    let mut parent = vec![None; n];
    let mut depth = vec![0u32; n];
    let mut seen = vec![false; n];
    seen[publisher] = true;
    let mut queue = VecDeque::from([publisher]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }
    prune_to_targets(n, publisher, &parent, &depth, subscribers)
}

/// Shared-tree strategy: the publication traverses the minimal subtree of
/// `tree` spanning the publisher and the subscribers.
pub fn route_on_tree(
    tree: &SpanningTree,
    publisher: NodeId,
    subscribers: &BTreeSet<NodeId>,
) -> RouteResult {
    let n = tree.slot_count();
    // Re-root the tree at the publisher so pruning works from one map.
    let mut parent = vec![None; n];
    let mut depth = vec![0u32; n];
    let mut seen = vec![false; n];
    seen[publisher] = true;
    let mut queue = VecDeque::from([publisher]);
    while let Some(v) = queue.pop_front() {
        let mut nbrs: Vec<NodeId> = tree.children(v).to_vec();
        if let Some(p) = tree.parent(v) {
            nbrs.push(p);
        }
        nbrs.sort_unstable();
        for w in nbrs {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some(v);
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
        }
    }
    prune_to_targets(n, publisher, &parent, &depth, subscribers)
}

/// Single shared tree rooted at `tree_root`, the common fixed-tree approach.
pub fn route_ts(
    g: &Graph,
    tree_root: NodeId,
    publisher: NodeId,
    subscribers: &BTreeSet<NodeId>,
) -> RouteResult {
    let sel = crate::topology::LinkSelection::all(g);
    let tree = crate::topology::build_tree(&sel, tree_root);
    route_on_tree(&tree, publisher, subscribers)
}

/// Subscriber-direction forwarding on the shared tree delivers along exactly
/// the same pruned subtree, so the analytic count coincides with
/// [`route_on_tree`].
pub fn route_shen(
    tree: &SpanningTree,
    publisher: NodeId,
    subscribers: &BTreeSet<NodeId>,
) -> RouteResult {
    route_on_tree(tree, publisher, subscribers)
}

fn prune_to_targets(
    n: usize,
    publisher: NodeId,
    parent: &[Option<NodeId>],
    depth: &[u32],
    subscribers: &BTreeSet<NodeId>,
) -> RouteResult {
    // A node stays when its subtree (away from the publisher) holds a target.
    let mut needed = vec![false; n];
    for &s in subscribers {
        if s == publisher {
            continue;
        }
        let mut v = s;
        while !needed[v] {
            needed[v] = true;
            match parent[v] {
                Some(p) => v = p,
                None => break,
            }
        }
    }
    needed[publisher] = true;
    let mut edges = Vec::new();
    for v in 0..n {
        if v != publisher && needed[v] {
            if let Some(p) = parent[v] {
                edges.push((p, v));
            }
        }
    }
    edges.sort_unstable();
    let delivered: BTreeSet<NodeId> =
        subscribers.iter().copied().filter(|&s| s != publisher).collect();
    let hops = delivered.iter().map(|&s| (s, depth[s])).collect();
    RouteResult { transmissions: edges.len() as u64, edges, delivered, hops }
}

/// Next ccw subscriber position for every node and own-position index, as the
/// subscription protocol converges to it: the closest position of another
/// subscribing node, `None` when no such position exists.
pub fn converged_ns(
    ring: &VirtualRing,
    subscribers: &BTreeSet<NodeId>,
) -> Vec<Vec<Option<Position>>> {
    let mut out = Vec::new();
    let max_node = ring.seq().iter().copied().max().unwrap_or(0);
    for v in 0..=max_node {
        let mut row = Vec::new();
        for &p in ring.positions_of(v) {
            let mut q = ring.successor(p);
            let mut found = None;
            while q != p {
                let owner = ring.node_at(q);
                if owner != v && subscribers.contains(&owner) {
                    found = Some(q);
                    break;
                }
                q = ring.successor(q);
            }
            row.push(found);
        }
        out.push(row);
    }
    out
}

/// Drives the real forwarding logic over converged tables, without timers or
/// losses. One instance serves any number of publishers on the same
/// subscriber placement.
pub struct RingcastEvaluator {
    ring: Arc<VirtualRing>,
    nodes: Vec<NodeState>,
    subscribers: BTreeSet<NodeId>,
}

impl RingcastEvaluator {
    pub fn new(ring: Arc<VirtualRing>, subscribers: &BTreeSet<NodeId>) -> Self {
        let params = ProtocolParams::defaults_for(ring.len(), 1);
        let tables = converged_ns(&ring, subscribers);
        let max_node = ring.seq().iter().copied().max().unwrap_or(0);
        let mut nodes = Vec::with_capacity(max_node + 1);
        for v in 0..=max_node {
            let mut st = NodeState::detached(
                v,
                ring.clone(),
                ring.positions_of(v).to_vec(),
                1,
                params,
                0,
            );
            if subscribers.contains(&v) {
                st.subscribe(0, 0).expect("channel 0 exists");
            }
            for (j, &ns) in tables[v].iter().enumerate() {
                st.set_entry(0, j, ns, 0);
            }
            nodes.push(st);
        }
        Self { ring, nodes, subscribers: subscribers.clone() }
    }

    pub fn ring(&self) -> &Arc<VirtualRing> {
        &self.ring
    }

    pub fn subscribers(&self) -> &BTreeSet<NodeId> {
        &self.subscribers
    }

    /// Routes one publication from `publisher` on channel 0 and tallies the
    /// cascade.
    pub fn route(&mut self, publisher: NodeId) -> RouteResult {
        let seeds = self.nodes[publisher].publish(0, b"").expect("channel 0 exists");
        let mut edges = Vec::new();
        let mut delivered = BTreeSet::new();
        let mut hops = BTreeMap::new();
        let mut queue: VecDeque<(PubMsg, NodeId, u32)> = VecDeque::new();
        for s in seeds {
            edges.push((publisher, self.ring.node_at(s.msg.goal)));
            queue.push_back((s.msg, publisher, 1));
        }
        let mut transmissions = edges.len() as u64;
        while let Some((msg, _, hop)) = queue.pop_front() {
            let target = self.ring.node_at(msg.goal);
            let handling = self.nodes[target].on_pub(&msg).expect("goal owned by target");
            if handling.delivered && !delivered.contains(&target) {
                delivered.insert(target);
                hops.insert(target, hop);
            } else if handling.delivered {
                // Duplicate delivery would break the exactly-once guarantee;
                // surfaced loudly because analytic runs are error-free.
                panic!("duplicate delivery at node {target}");
            }
            for s in handling.forwards {
                transmissions += 1;
                edges.push((target, self.ring.node_at(s.msg.goal)));
                queue.push_back((s.msg, target, hop + 1));
            }
        }
        RouteResult { transmissions, edges, delivered, hops }
    }
}

/// Tree pub/sub node after Shen: per channel, the set of tree directions that
/// lead to at least one subscriber, maintained by leased announcements that
/// flood the spanning tree.
#[derive(Debug, Clone)]
pub struct ShenNode {
    id: NodeId,
    neighbors: Vec<NodeId>,
    channel_count: u8,
    subscribed: BTreeSet<ChannelId>,
    directions: BTreeMap<(ChannelId, NodeId), Tick>,
    delta_s: Tick,
    sub_deadline: Option<Tick>,
}

/// Announcement flooded over the tree: the subscriber's channels plus the
/// neighbor it arrived from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShenSub {
    pub origin: NodeId,
    pub channels: BTreeSet<ChannelId>,
}

impl ShenNode {
    pub fn new(id: NodeId, tree: &SpanningTree, channel_count: u8, delta_s: Tick) -> Self {
        let mut neighbors: Vec<NodeId> = tree.children(id).to_vec();
        if let Some(p) = tree.parent(id) {
            neighbors.push(p);
        }
        neighbors.sort_unstable();
        Self {
            id,
            neighbors,
            channel_count,
            subscribed: BTreeSet::new(),
            directions: BTreeMap::new(),
            delta_s,
            sub_deadline: None,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn sub_deadline(&self) -> Option<Tick> {
        self.sub_deadline
    }

    pub fn subscribe(&mut self, c: ChannelId, now: Tick) {
        assert!((c as usize) < self.channel_count as usize);
        if self.subscribed.insert(c) {
            self.sub_deadline = Some(now);
        }
    }

    pub fn unsubscribe(&mut self, c: ChannelId) {
        self.subscribed.remove(&c);
    }

    /// Lease renewal: announce the whole channel set to every tree neighbor.
    pub fn on_timer_sub(&mut self, now: Tick) -> Option<(ShenSub, Vec<NodeId>)> {
        if self.subscribed.is_empty() {
            self.sub_deadline = None;
            return None;
        }
        self.sub_deadline = Some(now + self.delta_s);
        let msg = ShenSub { origin: self.id, channels: self.subscribed.clone() };
        Some((msg, self.neighbors.clone()))
    }

    /// Records the arrival direction for every announced channel and floods
    /// the message onward, away from the sender.
    pub fn on_sub(&mut self, msg: &ShenSub, from: NodeId, now: Tick) -> Vec<NodeId> {
        for &c in &msg.channels {
            self.directions.insert((c, from), now);
        }
        self.neighbors.iter().copied().filter(|&v| v != from).collect()
    }

    /// Directions a publication on `c` leaves toward, excluding where it came
    /// from. Stale entries still route; expiry is the caller's policy.
    fn forward_directions(&self, c: ChannelId, arrived_from: Option<NodeId>) -> Vec<NodeId> {
        self.neighbors
            .iter()
            .copied()
            .filter(|&v| Some(v) != arrived_from && self.directions.contains_key(&(c, v)))
            .collect()
    }

    pub fn publish(&self, c: ChannelId) -> Vec<NodeId> {
        self.forward_directions(c, None)
    }

    /// Returns whether the node delivers plus the onward directions.
    pub fn on_pub(&self, c: ChannelId, from: NodeId) -> (bool, Vec<NodeId>) {
        (self.subscribed.contains(&c), self.forward_directions(c, Some(from)))
    }
}

/// Runs the Shen machines over a tree until subscriptions have flooded, then
/// routes one publication. Used by tests comparing the protocol behaviors.
pub fn shen_route_via_machines(
    tree: &SpanningTree,
    publisher: NodeId,
    subscribers: &BTreeSet<NodeId>,
) -> RouteResult {
    let n = tree.slot_count();
    let mut nodes: Vec<ShenNode> = (0..n).map(|v| ShenNode::new(v, tree, 1, 1_000)).collect();
    for &s in subscribers {
        nodes[s].subscribe(0, 0);
    }
    // Flood every announcement to quiescence.
    let mut queue: VecDeque<(ShenSub, NodeId, NodeId)> = VecDeque::new();
    for v in 0..n {
        if nodes[v].sub_deadline() == Some(0) {
            if let Some((msg, targets)) = nodes[v].on_timer_sub(0) {
                for t in targets {
                    queue.push_back((msg.clone(), v, t));
                }
            }
        }
    }
    while let Some((msg, from, to)) = queue.pop_front() {
        for next in nodes[to].on_sub(&msg, from, 1) {
            queue.push_back((msg.clone(), to, next));
        }
    }
    // Route one publication.
    let mut edges = Vec::new();
    let mut delivered = BTreeSet::new();
    let mut hops = BTreeMap::new();
    let mut pubs: VecDeque<(NodeId, NodeId, u32)> = VecDeque::new();
    for to in nodes[publisher].publish(0) {
        pubs.push_back((publisher, to, 1));
    }
    while let Some((from, to, hop)) = pubs.pop_front() {
        edges.push((from, to));
        let (deliver, onward) = nodes[to].on_pub(0, from);
        if deliver {
            assert!(delivered.insert(to), "duplicate delivery at node {to}");
            hops.insert(to, hop);
        }
        for next in onward {
            pubs.push_back((to, next, hop + 1));
        }
    }
    edges.sort_unstable();
    RouteResult { transmissions: edges.len() as u64, edges, delivered, hops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{build_ring, ShortcutExpansion};
    use crate::topology::{build_tree, central_node, generate_er, LinkSelection};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn six_node() -> (Graph, Arc<VirtualRing>, SpanningTree) {
        let g = Graph::new(6, [(0, 5), (5, 3), (3, 1), (5, 4), (4, 2), (3, 4)]).unwrap();
        let sel = LinkSelection::all(&g);
        let tree = build_tree(&sel, 0);
        let ring = Arc::new(build_ring(&tree, &sel, ShortcutExpansion::AllPairs));
        (g, ring, tree)
    }

    fn random_instance(seed: u64, n: usize, p: f64, s: usize) -> (Graph, Arc<VirtualRing>, SpanningTree, BTreeSet<NodeId>) {
        let g = generate_er(n, p, seed).unwrap();
        let sel = LinkSelection::all(&g);
        let root = central_node(&g);
        let tree = build_tree(&sel, root);
        let ring = Arc::new(build_ring(&tree, &sel, ShortcutExpansion::AllPairs));
        let mut ids: Vec<NodeId> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5u64);
        ids.shuffle(&mut rng);
        let subs: BTreeSet<NodeId> = ids.into_iter().take(s).collect();
        (g, ring, tree, subs)
    }

    #[test]
    fn naive_ring_always_spends_the_full_ring() {
        let (_, ring, _) = six_node();
        let subs = BTreeSet::from([1, 2]);
        let r = route_naive_ring(&ring, 0, &subs);
        assert_eq!(r.transmissions, 10);
        assert_eq!(r.delivered, subs);

        let none = BTreeSet::new();
        let r = route_naive_ring(&ring, 0, &none);
        assert_eq!(r.transmissions, 10);
        assert!(r.delivered.is_empty());
    }

    #[test]
    fn naive_ring_delivery_set_ignores_placement() {
        for seed in 0..5u64 {
            let (_, ring, _, subs) = random_instance(seed, 16, 0.3, 5);
            let publisher = (0..16).find(|v| !subs.contains(v)).unwrap();
            let r = route_naive_ring(&ring, publisher, &subs);
            assert_eq!(r.delivered, subs);
            assert_eq!(r.transmissions as usize, ring.len());
        }
    }

    #[test]
    fn per_source_tree_handles_trivial_placements() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        // Publisher adjacent to the only subscriber.
        let r = route_td(&g, 0, &BTreeSet::from([1]));
        assert_eq!(r.transmissions, 1);
        assert_eq!(r.hops[&1], 1);
        // Everyone subscribes: no pruning possible.
        let r = route_td(&g, 0, &BTreeSet::from([0, 1, 2, 3]));
        assert_eq!(r.transmissions, 3);
    }

    #[test]
    fn per_source_tree_equals_path_union_oracle() {
        for seed in [3u64, 4, 5] {
            let g = generate_er(30, 0.2, seed).unwrap();
            let (_, _, _, subs) = random_instance(seed, 30, 0.2, 5);
            let publisher = (0..30).find(|v| !subs.contains(v)).unwrap();
            let r = route_td(&g, publisher, &subs);

            // Oracle: union of BFS root paths to each subscriber.
            let n = g.node_count();
            let mut parent = vec![None; n];
            let mut seen = vec![false; n];
            seen[publisher] = true;
            let mut queue = VecDeque::from([publisher]);
            while let Some(v) = queue.pop_front() {
                for &w in g.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = Some(v);
                        queue.push_back(w);
                    }
                }
            }
            let mut union: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
            for &s in &subs {
                let mut v = s;
                while let Some(p) = parent[v] {
                    union.insert((p, v));
                    v = p;
                }
            }
            assert_eq!(r.transmissions as usize, union.len());
        }
    }

    #[test]
    fn shared_tree_handles_trivial_placements() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        // Publisher is the root; one subscriber at depth 3.
        let r = route_ts(&g, 0, 0, &BTreeSet::from([3]));
        assert_eq!(r.transmissions, 3);
        assert_eq!(r.hops[&3], 3);
        let r = route_ts(&g, 0, 0, &BTreeSet::from([0, 1, 2, 3, 4]));
        assert_eq!(r.transmissions, 4);
    }

    #[test]
    fn shared_tree_equals_steiner_subtree_oracle() {
        for seed in [7u64, 8] {
            let (g, _, _, subs) = random_instance(seed, 25, 0.25, 6);
            let root = central_node(&g);
            let publisher = (0..25).find(|v| !subs.contains(v)).unwrap();
            let r = route_ts(&g, root, publisher, &subs);

            // Oracle: union of unique tree paths publisher -> subscriber.
            let tree = build_tree(&LinkSelection::all(&g), root);
            let mut union: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
            for &s in &subs {
                // Walk both endpoints up to their meeting point.
                let mut up_a: Vec<NodeId> = vec![publisher];
                let mut v = publisher;
                while let Some(p) = tree.parent(v) {
                    up_a.push(p);
                    v = p;
                }
                let mut path: Vec<NodeId> = Vec::new();
                let mut w = s;
                loop {
                    path.push(w);
                    if let Some(i) = up_a.iter().position(|&x| x == w) {
                        for k in (0..i).rev() {
                            path.push(up_a[k]);
                        }
                        break;
                    }
                    w = tree.parent(w).expect("meeting point exists");
                }
                for pair in path.windows(2) {
                    union.insert((pair[0].min(pair[1]), pair[0].max(pair[1])));
                }
            }
            assert_eq!(r.transmissions as usize, union.len());
        }
    }

    #[test]
    fn tree_counts_never_exceed_the_broadcast_bound() {
        for seed in 0..6u64 {
            let (g, _, tree, subs) = random_instance(seed, 20, 0.3, 7);
            let publisher = (0..20).find(|v| !subs.contains(v)).unwrap();
            let n1 = (g.node_count() - 1) as u64;
            assert!(route_td(&g, publisher, &subs).transmissions <= n1);
            assert!(route_on_tree(&tree, publisher, &subs).transmissions <= n1);
        }
    }

    #[test]
    fn analytic_ring_route_reproduces_the_twenty_position_schedule() {
        let g = Graph::new(
            11,
            [
                (0, 1), (0, 2), (0, 3), (0, 4), (1, 5), (1, 6), (6, 7), (2, 8), (4, 9), (9, 10),
                (1, 3), (4, 5),
            ],
        )
        .unwrap();
        let sel = LinkSelection::all(&g);
        let tree = build_tree(&sel, 0);
        let ring = Arc::new(build_ring(&tree, &sel, ShortcutExpansion::AllPairs));
        let subs = BTreeSet::from([5, 7, 9]);
        let mut eval = RingcastEvaluator::new(ring, &subs);
        let r = eval.route(1);
        assert_eq!(r.transmissions, 7);
        assert_eq!(r.delivered, subs);
    }

    #[test]
    fn all_strategies_deliver_exactly_the_subscriber_set() {
        for seed in 0..8u64 {
            let (g, ring, tree, subs) = random_instance(seed, 18, 0.3, 6);
            let publisher = (0..18).find(|v| !subs.contains(v)).unwrap();
            let mut eval = RingcastEvaluator::new(ring.clone(), &subs);
            for r in [
                route_naive_ring(&ring, publisher, &subs),
                route_td(&g, publisher, &subs),
                route_on_tree(&tree, publisher, &subs),
                eval.route(publisher),
            ] {
                assert_eq!(r.delivered, subs, "seed {seed}");
            }
        }
    }

    #[test]
    fn shen_machines_are_quiet_without_subscribers() {
        let (_, _, tree) = six_node();
        let r = shen_route_via_machines(&tree, 0, &BTreeSet::new());
        assert_eq!(r.transmissions, 0);
        assert!(r.delivered.is_empty());
    }

    #[test]
    fn shen_single_subscriber_hops_equal_tree_distance() {
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let tree = build_tree(&LinkSelection::all(&g), 0);
        let subs = BTreeSet::from([5]);
        let r = shen_route_via_machines(&tree, 0, &subs);
        assert_eq!(r.hops[&5], tree.distance(0, 5) as u32);
        assert_eq!(r.transmissions, 5);
        // The analytic shortcut agrees with the machine run.
        assert_eq!(route_shen(&tree, 0, &subs).transmissions, r.transmissions);
    }

    #[test]
    fn full_subscription_makes_ring_and_tree_routing_coincide() {
        for seed in 0..5u64 {
            let n = 14;
            let (_, ring, tree, _) = random_instance(seed, n, 0.35, 1);
            let all: BTreeSet<NodeId> = (0..n).collect();
            let publisher = (seed as usize) % n;
            let mut eval = RingcastEvaluator::new(ring, &all);
            let ring_result = eval.route(publisher);
            let shen_result = shen_route_via_machines(&tree, publisher, &all);
            assert_eq!(ring_result.transmissions, (n - 1) as u64);
            assert_eq!(shen_result.transmissions, (n - 1) as u64);
            let mut a = ring_result.edges.clone();
            let mut b = shen_result.edges.clone();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b, "identical transmission multiset on the shared tree");
        }
    }

    #[test]
    fn analytic_route_respects_the_ring_bound() {
        for seed in 0..6u64 {
            let (_, ring, _, subs) = random_instance(seed, 20, 0.3, 4);
            let publisher = (0..20).find(|v| !subs.contains(v)).unwrap();
            let mut eval = RingcastEvaluator::new(ring.clone(), &subs);
            let r = eval.route(publisher);
            assert!(r.transmissions <= ring.len() as u64);
        }
    }
}
