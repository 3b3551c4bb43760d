//! Single-threaded deterministic event engine.
//!
//! Events are processed in `(time, sequence)` order; the sequence number is
//! assigned at insertion, so equal-time events run in the order they were
//! created. All randomness (loss draws) comes from one seeded generator and
//! every state change lands in the ledger, which makes two runs of the same
//! scenario byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pubsub::{
    wire, ChannelId, NodeState, ProtocolParams, PubMsg, PubSend, SubMsg, Tick,
};
use crate::ring::{build_ring_from, Position, VirtualRing};
use crate::topology::{
    self, bfs_tree, central_node_in, select_links, Graph, LinkSelection, NodeId, SpanningTree,
};

use super::ledger::{LedgerEvent, TraceLedger};
use super::scenario::{AppAction, FaultKind, RootPolicy, Scenario, TopologySource};
use super::SimError;

#[derive(Debug)]
enum Ev {
    RingDeliver { msg: PubMsg, pub_id: u64, hops: u32, epoch: u64 },
    TreeDeliver { to: NodeId, from: NodeId, msg: SubMsg, wave: u64, epoch: u64 },
    TimerSub { node: NodeId, gen: u64 },
    TimerClean { node: NodeId, gen: u64 },
    App { node: NodeId, action: AppAction },
    Fault(FaultKind),
    Rebuild,
}

pub struct Engine {
    scenario: Scenario,
    n_slots: usize,
    alive: Vec<bool>,
    kept: BTreeSet<(NodeId, NodeId)>,
    tree: SpanningTree,
    ring: Arc<VirtualRing>,
    nodes: Vec<Option<NodeState>>,
    params: ProtocolParams,
    queue: BTreeMap<(Tick, u64), Ev>,
    next_seq: u64,
    rng: ChaCha8Rng,
    loss: f64,
    epoch: u64,
    pending_rebuild: Option<Tick>,
    sub_gen: Vec<u64>,
    sub_mirror: Vec<Option<Tick>>,
    clean_gen: Vec<u64>,
    next_pub_id: u64,
    next_wave: u64,
    events: Vec<LedgerEvent>,
    now: Tick,
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let graph = load_topology(&scenario)?;
        let errors = scenario.validate(graph.node_count());
        if !errors.is_empty() {
            return Err(SimError::Validation(errors));
        }
        let sel = match scenario.degree_cap {
            Some(cap) => select_links(&graph, cap, scenario.seed ^ 0x9E37_79B9_7F4A_7C15)?,
            None => LinkSelection::all(&graph),
        };
        let root = match scenario.root {
            RootPolicy::Central => topology::central_node(&graph),
            RootPolicy::Node(r) => r,
        };
        let tree = topology::build_tree(&sel, root);
        let ring = Arc::new(crate::ring::build_ring(&tree, &sel, scenario.shortcut_expansion));
        let mut params = ProtocolParams::defaults_for(ring.len(), scenario.per_hop_delay);
        if let Some(d) = scenario.delta_s {
            params.delta_s = d;
            params.t_clean = (d / 4).max(1);
            params.t_wback = 2 * d;
        }
        if let Some(t) = scenario.t_clean {
            params.t_clean = t;
        }
        if let Some(t) = scenario.t_wback {
            params.t_wback = t;
        }

        let n = graph.node_count();
        let mut nodes = Vec::with_capacity(n);
        for v in 0..n {
            let mut st = NodeState::new(v, ring.clone(), &tree, scenario.channels, params, 0);
            st.set_forwarding_bound(scenario.forwarding_bound);
            nodes.push(Some(st));
        }

        let mut engine = Self {
            loss: scenario.loss,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed ^ 0xD1B5_4A32_D192_ED03),
            n_slots: n,
            alive: vec![true; n],
            kept: sel.kept_set().clone(),
            tree,
            ring,
            nodes,
            params,
            queue: BTreeMap::new(),
            next_seq: 0,
            epoch: 0,
            pending_rebuild: None,
            sub_gen: vec![0; n],
            sub_mirror: vec![None; n],
            clean_gen: vec![0; n],
            next_pub_id: 0,
            next_wave: 0,
            events: Vec::new(),
            now: 0,
            scenario,
        };
        for a in engine.scenario.apps.clone() {
            engine.push(a.time, Ev::App { node: a.node, action: a.action });
        }
        for f in engine.scenario.faults.clone() {
            engine.push(f.time, Ev::Fault(f.kind));
        }
        for v in 0..engine.n_slots {
            let deadline = engine.nodes[v].as_ref().unwrap().clean_deadline();
            engine.push(deadline, Ev::TimerClean { node: v, gen: 0 });
        }
        Ok(engine)
    }

    pub fn ring(&self) -> &Arc<VirtualRing> {
        &self.ring
    }

    pub fn tree(&self) -> &SpanningTree {
        &self.tree
    }

    pub fn node(&self, v: NodeId) -> Option<&NodeState> {
        self.nodes.get(v).and_then(|n| n.as_ref())
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Alive nodes currently subscribed to `c`.
    pub fn subscribers_of(&self, c: ChannelId) -> BTreeSet<NodeId> {
        (0..self.n_slots)
            .filter(|&v| self.alive[v])
            .filter(|&v| self.nodes[v].as_ref().is_some_and(|n| n.is_subscribed(c)))
            .collect()
    }

    pub fn run_to_end(&mut self) -> Result<TraceLedger, SimError> {
        let duration = self.scenario.duration;
        while let Some((&(t, _), _)) = self.queue.first_key_value() {
            if t > duration {
                break;
            }
            let ((t, _), ev) = self.queue.pop_first().unwrap();
            self.now = t;
            self.dispatch(ev)?;
        }
        self.now = duration;
        Ok(TraceLedger::from_events(std::mem::take(&mut self.events), duration))
    }

    fn push(&mut self, time: Tick, ev: Ev) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.insert((time, seq), ev);
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::TimerSub { node, gen } => self.on_timer_sub(node, gen),
            Ev::TimerClean { node, gen } => self.on_timer_clean(node, gen),
            Ev::TreeDeliver { to, from, msg, wave, epoch } => {
                self.on_tree_deliver(to, from, msg, wave, epoch)
            }
            Ev::RingDeliver { msg, pub_id, hops, epoch } => {
                self.on_ring_deliver(msg, pub_id, hops, epoch)
            }
            Ev::App { node, action } => self.on_app(node, action),
            Ev::Fault(kind) => return self.on_fault(kind),
            Ev::Rebuild => return self.rebuild(),
        }
        Ok(())
    }

    fn sync_sub_timer(&mut self, v: NodeId) {
        let deadline = self.nodes[v].as_ref().and_then(|n| n.sub_deadline());
        if deadline != self.sub_mirror[v] {
            self.sub_mirror[v] = deadline;
            self.sub_gen[v] += 1;
            if let Some(t) = deadline {
                let gen = self.sub_gen[v];
                self.push(t.max(self.now), Ev::TimerSub { node: v, gen });
            }
        }
    }

    fn on_timer_sub(&mut self, v: NodeId, gen: u64) {
        if gen != self.sub_gen[v] || !self.alive[v] {
            return;
        }
        if let Some(t) = self.pending_rebuild {
            self.push(t, Ev::TimerSub { node: v, gen });
            return;
        }
        let msg = self.nodes[v].as_mut().unwrap().on_timer_sub(self.now);
        self.sub_mirror[v] = self.nodes[v].as_ref().unwrap().sub_deadline();
        self.sub_gen[v] += 1;
        if let Some(t) = self.sub_mirror[v] {
            let gen = self.sub_gen[v];
            self.push(t, Ev::TimerSub { node: v, gen });
        }
        if let Some(msg) = msg {
            let wave = self.next_wave;
            self.next_wave += 1;
            self.events.push(LedgerEvent::SubWave {
                t: self.now,
                origin: v,
                wave,
                channels: msg.channels.iter().copied().collect(),
            });
            self.broadcast(v, msg, wave);
        }
    }

    fn on_timer_clean(&mut self, v: NodeId, gen: u64) {
        if gen != self.clean_gen[v] || !self.alive[v] {
            return;
        }
        if let Some(t) = self.pending_rebuild {
            self.push(t, Ev::TimerClean { node: v, gen });
            return;
        }
        let write_backs = self.nodes[v].as_mut().unwrap().on_timer_clean(self.now);
        for wb in write_backs {
            self.events.push(LedgerEvent::WriteBack {
                t: self.now,
                node: v,
                channel: wb.channel,
                pos_index: wb.pos_index,
                old_ns: wb.old_ns.map(|p| p.0),
                new_ns: wb.new_ns.0,
            });
        }
        let next = self.nodes[v].as_ref().unwrap().clean_deadline();
        self.push(next, Ev::TimerClean { node: v, gen });
    }

    /// Tree-layer broadcast: one unicast to the parent and each child, loss
    /// drawn per receiver.
    fn broadcast(&mut self, v: NodeId, msg: SubMsg, wave: u64) {
        let node = self.nodes[v].as_ref().unwrap();
        let mut targets: Vec<NodeId> = Vec::with_capacity(node.children().len() + 1);
        if let Some(p) = node.parent() {
            targets.push(p);
        }
        targets.extend_from_slice(node.children());
        let bytes = wire::sub_wire_len(&msg);
        for to in targets {
            let lost = self.rng.gen_bool(self.loss);
            self.events.push(LedgerEvent::SubTx { t: self.now, wave, from: v, to, bytes, lost });
            if !lost {
                self.push(
                    self.now + self.scenario.per_hop_delay,
                    Ev::TreeDeliver { to, from: v, msg: msg.clone(), wave, epoch: self.epoch },
                );
            }
        }
    }

    fn on_tree_deliver(&mut self, to: NodeId, from: NodeId, msg: SubMsg, wave: u64, epoch: u64) {
        if epoch != self.epoch {
            self.events.push(LedgerEvent::SubDrop { t: self.now, wave, reason: "stale epoch".into() });
            return;
        }
        if !self.alive[to] {
            self.events.push(LedgerEvent::SubDrop { t: self.now, wave, reason: "dead node".into() });
            return;
        }
        match self.nodes[to].as_mut().unwrap().on_sub(&msg, from, self.now) {
            Ok(Some(fwd)) => self.broadcast(to, fwd, wave),
            Ok(None) => {}
            Err(e) => self.events.push(LedgerEvent::Diagnostic {
                t: self.now,
                node: to,
                detail: e.to_string(),
            }),
        }
    }

    fn transmit_pub(&mut self, pub_id: u64, from_node: NodeId, send: PubSend, hops: u32) {
        let bytes = wire::pub_wire_len(&send.msg);
        let lost = self.rng.gen_bool(self.loss);
        self.events.push(LedgerEvent::PubTx {
            t: self.now,
            pub_id,
            from_node,
            from_pos: send.from.0,
            goal: send.msg.goal.0,
            ep: send.msg.ep.0,
            hops,
            bytes,
            lost,
        });
        if !lost {
            self.push(
                self.now + self.scenario.per_hop_delay,
                Ev::RingDeliver { msg: send.msg, pub_id, hops, epoch: self.epoch },
            );
        }
    }

    fn on_ring_deliver(&mut self, msg: PubMsg, pub_id: u64, hops: u32, epoch: u64) {
        if epoch != self.epoch {
            self.events.push(LedgerEvent::PubDrop {
                t: self.now,
                pub_id,
                reason: "stale epoch".into(),
            });
            return;
        }
        let target = self.ring.node_at(msg.goal);
        match self.nodes[target].as_mut().unwrap().on_pub(&msg) {
            Ok(handling) => {
                self.events.push(LedgerEvent::PubRecv {
                    t: self.now,
                    pub_id,
                    node: target,
                    delivered: handling.delivered,
                    hops,
                });
                for send in handling.forwards {
                    self.transmit_pub(pub_id, target, send, hops + 1);
                }
            }
            Err(e) => {
                self.events.push(LedgerEvent::PubDrop { t: self.now, pub_id, reason: e.to_string() });
            }
        }
    }

    fn on_app(&mut self, v: NodeId, action: AppAction) {
        if !self.alive[v] {
            self.events.push(LedgerEvent::Diagnostic {
                t: self.now,
                node: v,
                detail: "app event on absent node".into(),
            });
            return;
        }
        match action {
            AppAction::Subscribe { channel } => {
                if let Err(e) = self.nodes[v].as_mut().unwrap().subscribe(channel, self.now) {
                    self.events.push(LedgerEvent::Diagnostic {
                        t: self.now,
                        node: v,
                        detail: e.to_string(),
                    });
                }
                self.sync_sub_timer(v);
            }
            AppAction::Unsubscribe { channel } => {
                self.nodes[v].as_mut().unwrap().unsubscribe(channel);
            }
            AppAction::Publish { channel, size } => {
                let payload = vec![0u8; size];
                let node = self.nodes[v].as_mut().unwrap();
                let seq = node.next_pub_seq();
                match node.publish(channel, &payload) {
                    Ok(sends) => {
                        let pub_id = self.next_pub_id;
                        self.next_pub_id += 1;
                        let expected: Vec<NodeId> = self
                            .subscribers_of(channel)
                            .into_iter()
                            .filter(|&s| s != v)
                            .collect();
                        self.events.push(LedgerEvent::PubIssued {
                            t: self.now,
                            pub_id,
                            origin: v,
                            channel,
                            seq,
                            expected,
                        });
                        for send in sends {
                            self.transmit_pub(pub_id, v, send, 1);
                        }
                    }
                    Err(e) => {
                        self.events.push(LedgerEvent::Diagnostic {
                            t: self.now,
                            node: v,
                            detail: e.to_string(),
                        });
                    }
                }
            }
        }
    }

    fn on_fault(&mut self, kind: FaultKind) -> Result<(), SimError> {
        match kind {
            FaultKind::CorruptEntry { node, channel, pos_index, new_ns } => {
                let valid = self.alive[node]
                    && self.nodes[node]
                        .as_ref()
                        .is_some_and(|n| pos_index < n.positions().len());
                if valid {
                    self.nodes[node]
                        .as_mut()
                        .unwrap()
                        .corrupt_entry(channel, pos_index, Position(new_ns));
                    self.events.push(LedgerEvent::Epoch {
                        t: self.now,
                        label: format!("corrupt node={node} channel={channel} pos={pos_index} ns={new_ns}"),
                    });
                } else {
                    self.events.push(LedgerEvent::Diagnostic {
                        t: self.now,
                        node,
                        detail: "corruption target does not exist".into(),
                    });
                }
            }
            FaultKind::SetLoss { loss } => {
                self.loss = loss;
                self.events.push(LedgerEvent::Epoch { t: self.now, label: format!("loss={loss}") });
            }
            FaultKind::Leave { node } => {
                if !self.alive[node] {
                    self.events.push(LedgerEvent::Diagnostic {
                        t: self.now,
                        node,
                        detail: "leave of absent node".into(),
                    });
                    return Ok(());
                }
                self.alive[node] = false;
                self.nodes[node] = None;
                if !self.alive_connected() {
                    return Err(SimError::ChurnInvalid {
                        time: self.now,
                        detail: format!("leave of node {node} disconnects the network"),
                    });
                }
                self.events.push(LedgerEvent::Epoch { t: self.now, label: format!("leave node={node}") });
                self.start_rebuild()?;
            }
            FaultKind::Join { attach } => {
                let new_id = self.n_slots;
                let live_attach: Vec<NodeId> =
                    attach.iter().copied().filter(|&a| self.alive[a]).collect();
                if live_attach.is_empty() {
                    return Err(SimError::ChurnInvalid {
                        time: self.now,
                        detail: format!("join of node {new_id} has no live attachment"),
                    });
                }
                self.n_slots += 1;
                self.alive.push(true);
                self.nodes.push(None);
                self.sub_gen.push(0);
                self.sub_mirror.push(None);
                self.clean_gen.push(0);
                for a in live_attach {
                    self.kept.insert((a.min(new_id), a.max(new_id)));
                }
                self.events.push(LedgerEvent::Epoch { t: self.now, label: format!("join node={new_id}") });
                self.start_rebuild()?;
            }
        }
        Ok(())
    }

    fn start_rebuild(&mut self) -> Result<(), SimError> {
        // In-flight traffic addresses the old ring; invalidate it now.
        self.epoch += 1;
        if self.scenario.rebuild_latency == 0 {
            self.rebuild()
        } else {
            let at = self.now + self.scenario.rebuild_latency;
            self.pending_rebuild = Some(at);
            self.push(at, Ev::Rebuild);
            Ok(())
        }
    }

    fn alive_adjacency(&self) -> Vec<Vec<NodeId>> {
        let mut adj = vec![Vec::new(); self.n_slots];
        for &(u, v) in &self.kept {
            if self.alive[u] && self.alive[v] {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    fn alive_connected(&self) -> bool {
        let adj = self.alive_adjacency();
        let Some(start) = (0..self.n_slots).find(|&v| self.alive[v]) else {
            return false;
        };
        let mut seen = vec![false; self.n_slots];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.alive.iter().filter(|&&a| a).count()
    }

    /// Central rebuild after churn: new tree and ring over the live nodes,
    /// every state rebound with an empty table, subscriptions kept.
    fn rebuild(&mut self) -> Result<(), SimError> {
        self.pending_rebuild = None;
        let adj = self.alive_adjacency();
        let root = match self.scenario.root {
            RootPolicy::Node(r) if self.alive[r] => r,
            _ => central_node_in(self.n_slots, &adj, Some(&self.alive)),
        };
        let tree = bfs_tree(self.n_slots, &adj, root);
        for v in 0..self.n_slots {
            if self.alive[v] && v != root && tree.parent(v).is_none() {
                return Err(SimError::ChurnInvalid {
                    time: self.now,
                    detail: format!("node {v} unreachable after rebuild"),
                });
            }
        }
        let extra: Vec<(NodeId, NodeId)> = self
            .kept
            .iter()
            .copied()
            .filter(|&(u, v)| self.alive[u] && self.alive[v])
            .filter(|&(u, v)| tree.parent(u) != Some(v) && tree.parent(v) != Some(u))
            .collect();
        let ring = Arc::new(build_ring_from(
            &tree,
            &extra,
            self.n_slots,
            self.scenario.shortcut_expansion,
        ));
        for v in 0..self.n_slots {
            if !self.alive[v] {
                continue;
            }
            match self.nodes[v].as_mut() {
                Some(node) => node.rebind(ring.clone(), &tree, self.now),
                None => {
                    let mut st = NodeState::new(
                        v,
                        ring.clone(),
                        &tree,
                        self.scenario.channels,
                        self.params,
                        self.now,
                    );
                    st.set_forwarding_bound(self.scenario.forwarding_bound);
                    self.nodes[v] = Some(st);
                }
            }
            self.clean_gen[v] += 1;
            let gen = self.clean_gen[v];
            let deadline = self.nodes[v].as_ref().unwrap().clean_deadline();
            self.push(deadline, Ev::TimerClean { node: v, gen });
        }
        self.ring = ring;
        self.tree = tree;
        self.epoch += 1;
        self.events.push(LedgerEvent::Epoch { t: self.now, label: "rebuild".into() });
        Ok(())
    }
}

fn load_topology(scenario: &Scenario) -> Result<Graph, SimError> {
    match &scenario.topology {
        TopologySource::Generate { nodes, edge_prob } => {
            Ok(topology::generate_er(*nodes, *edge_prob, scenario.seed)?)
        }
        TopologySource::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|err| SimError::TopologyFile {
                path: path.clone(),
                err: err.to_string(),
            })?;
            Ok(Graph::from_text(&text)?)
        }
        TopologySource::Edges { nodes, edges } => Ok(Graph::new(*nodes, edges.iter().copied())?),
    }
}
