//! The per-node publish/subscribe state machine.
//!
//! Every node keeps a routing table with one row per channel and one column
//! per own ring position. An entry holds the next counter-clockwise
//! subscriber position (`ns`), the timestamp of its last renewal, and a
//! temporary replacement candidate (`nstmp`) used once the entry has gone
//! stale. Subscriptions travel as periodic broadcasts over the spanning tree
//! (leasing); publications travel on the ring and its shortcuts, confined to
//! nested segments so that every subscriber is reached exactly once.
//!
//! Handlers are pure transitions: they take the event time as an argument,
//! never read a clock, and return the messages to send. Timer state is a pair
//! of deadlines the driving engine schedules from.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ring::{Position, VirtualRing};
use crate::topology::{NodeId, SpanningTree};

pub mod wire;

pub type ChannelId = u8;
pub type Tick = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PubSubError {
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("node {node} received a publication for position {goal} it does not own")]
    GoalNotOwned { node: NodeId, goal: Position },
    #[error("malformed subscription message: {0}")]
    MalformedSub(String),
}

/// Leasing and cleanup periods, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Resubscribe (leasing) period.
    pub delta_s: Tick,
    /// Interval between table-cleanup scans.
    pub t_clean: Tick,
    /// Staleness age after which `nstmp` replaces `ns`.
    pub t_wback: Tick,
}

impl ProtocolParams {
    /// Defaults scale with the ring: the lease must outlive a full traversal.
    pub fn defaults_for(ring_len: usize, per_hop_delay: Tick) -> Self {
        let delta_s = 4 * ring_len as Tick * per_hop_delay.max(1);
        Self {
            delta_s,
            t_clean: (delta_s / 4).max(1),
            t_wback: 2 * delta_s,
        }
    }
}

/// Which position bounds the forwarding segment test on the left.
///
/// `HandlingPosition` uses the own position whose table entry is being
/// evaluated; this is the only choice under which a node with several
/// positions and a common next subscriber emits a single message.
/// `CurrentPosition` uses the position the message arrived at and exists for
/// comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardingBound {
    #[default]
    HandlingPosition,
    CurrentPosition,
}

/// One routing-table cell.
///
/// `ns == None` means no subscriber is known for the segment starting at this
/// position: nothing is forwarded and the first subscriber position carried
/// by a subscription message is adopted directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingEntry {
    pub ns: Option<Position>,
    pub ts: Tick,
    pub nstmp: Option<Position>,
}

/// Channel-by-position matrix of [`RoutingEntry`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTable {
    entries: Vec<Vec<RoutingEntry>>,
}

impl RoutingTable {
    fn new(channels: u8, positions: usize, now: Tick) -> Self {
        let row = vec![RoutingEntry { ns: None, ts: now, nstmp: None }; positions];
        Self { entries: vec![row; channels as usize] }
    }

    pub fn channel_count(&self) -> usize {
        self.entries.len()
    }

    pub fn position_count(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn entry(&self, c: ChannelId, pos_index: usize) -> &RoutingEntry {
        &self.entries[c as usize][pos_index]
    }
}

/// Subscription message: previous forwarder, subscribed channels, and all
/// positions of the originating subscriber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubMsg {
    pub prev: Option<NodeId>,
    pub channels: BTreeSet<ChannelId>,
    pub positions: Vec<Position>,
}

/// Publication message. `origin` and `seq` identify the publication for
/// delivery accounting only and never influence routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubMsg {
    pub goal: Position,
    pub ep: Position,
    pub channel: ChannelId,
    pub payload: Vec<u8>,
    pub origin: NodeId,
    pub seq: u32,
}

/// A publication emission: the own position it leaves from and the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubSend {
    pub from: Position,
    pub msg: PubMsg,
}

/// Result of receiving a publication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubHandling {
    pub delivered: bool,
    pub forwards: Vec<PubSend>,
}

/// A stale entry replaced by its temporary candidate during cleanup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteBack {
    pub channel: ChannelId,
    pub pos_index: usize,
    pub old_ns: Option<Position>,
    pub new_ns: Position,
}

/// One protocol participant.
#[derive(Debug, Clone)]
pub struct NodeState {
    id: NodeId,
    ring: Arc<VirtualRing>,
    positions: Vec<Position>,
    channel_count: u8,
    subscribed: BTreeSet<ChannelId>,
    ft: RoutingTable,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    params: ProtocolParams,
    sub_deadline: Option<Tick>,
    clean_deadline: Tick,
    pub_seq: u32,
    bound: ForwardingBound,
}

impl NodeState {
    /// Full participant wired to its tree neighborhood.
    pub fn new(
        id: NodeId,
        ring: Arc<VirtualRing>,
        tree: &SpanningTree,
        channel_count: u8,
        params: ProtocolParams,
        now: Tick,
    ) -> Self {
        let positions = ring.positions_of(id).to_vec();
        let ft = RoutingTable::new(channel_count, positions.len(), now);
        Self {
            id,
            ring,
            positions,
            channel_count,
            subscribed: BTreeSet::new(),
            ft,
            parent: tree.parent(id),
            children: tree.children(id).to_vec(),
            params,
            sub_deadline: None,
            clean_deadline: now + params.t_clean,
            pub_seq: 0,
        bound: ForwardingBound::default(),
        }
    }

    /// State detached from any tree, with explicit positions. Used by the
    /// analytic route evaluators and by conformance tests that preload
    /// routing tables.
    pub fn detached(
        id: NodeId,
        ring: Arc<VirtualRing>,
        positions: Vec<Position>,
        channel_count: u8,
        params: ProtocolParams,
        now: Tick,
    ) -> Self {
        let ft = RoutingTable::new(channel_count, positions.len(), now);
        Self {
            id,
            ring,
            positions,
            channel_count,
            subscribed: BTreeSet::new(),
            ft,
            parent: None,
            children: Vec::new(),
            params,
            sub_deadline: None,
            clean_deadline: now + params.t_clean,
            pub_seq: 0,
            bound: ForwardingBound::default(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn children(&self) -> &[NodeId] {
        &self.children
    }

    pub fn subscribed(&self) -> &BTreeSet<ChannelId> {
        &self.subscribed
    }

    pub fn is_subscribed(&self, c: ChannelId) -> bool {
        self.subscribed.contains(&c)
    }

    pub fn table(&self) -> &RoutingTable {
        &self.ft
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn sub_deadline(&self) -> Option<Tick> {
        self.sub_deadline
    }

    pub fn clean_deadline(&self) -> Tick {
        self.clean_deadline
    }

    /// Sequence number the next publication from this node will carry.
    pub fn next_pub_seq(&self) -> u32 {
        self.pub_seq
    }

    pub fn set_forwarding_bound(&mut self, bound: ForwardingBound) {
        self.bound = bound;
    }

    /// Directly sets a table cell; analytic evaluators use this to install a
    /// converged table without running the subscription protocol.
    pub fn set_entry(&mut self, c: ChannelId, pos_index: usize, ns: Option<Position>, ts: Tick) {
        let e = &mut self.ft.entries[c as usize][pos_index];
        e.ns = ns;
        e.ts = ts;
        e.nstmp = None;
    }

    /// Overwrites only the forwarding position, as an injected fault would;
    /// the renewal timestamp and the temporary candidate stay untouched.
    pub fn corrupt_entry(&mut self, c: ChannelId, pos_index: usize, ns: Position) {
        self.ft.entries[c as usize][pos_index].ns = Some(ns);
    }

    /// Adds `c` to the subscription set. A new channel schedules an immediate
    /// subscription broadcast; resubscribing is a no-op.
    pub fn subscribe(&mut self, c: ChannelId, now: Tick) -> Result<(), PubSubError> {
        if c as usize >= self.channel_count as usize {
            return Err(PubSubError::UnknownChannel(c));
        }
        if self.subscribed.insert(c) {
            self.sub_deadline = Some(now);
        }
        Ok(())
    }

    /// Drops `c` from the subscription set. Once the set is empty the node
    /// simply stops announcing: the pending timer fires once more, sends
    /// nothing, and disarms.
    pub fn unsubscribe(&mut self, c: ChannelId) {
        self.subscribed.remove(&c);
    }

    /// Periodic subscription broadcast. Re-arms the lease timer and announces
    /// the whole channel set in one message; with nothing subscribed the
    /// timer disarms silently.
    pub fn on_timer_sub(&mut self, now: Tick) -> Option<SubMsg> {
        if self.subscribed.is_empty() {
            self.sub_deadline = None;
            return None;
        }
        self.sub_deadline = Some(now + self.params.delta_s);
        Some(SubMsg {
            prev: None,
            channels: self.subscribed.clone(),
            positions: self.positions.clone(),
        })
    }

    /// Handles a subscription received from tree neighbor `from`. Updates the
    /// routing table for every known channel in the message, then forwards
    /// the channels this node does not itself cover — only inner tree nodes
    /// forward, and an echo of our own rebroadcast is dropped via `prev`.
    pub fn on_sub(
        &mut self,
        msg: &SubMsg,
        from: NodeId,
        now: Tick,
    ) -> Result<Option<SubMsg>, PubSubError> {
        if msg.channels.is_empty() {
            return Err(PubSubError::MalformedSub("empty channel set".into()));
        }
        if msg.positions.is_empty() {
            return Err(PubSubError::MalformedSub("empty position list".into()));
        }
        if let Some(bad) = msg.positions.iter().find(|p| p.idx() >= self.ring.len()) {
            return Err(PubSubError::MalformedSub(format!(
                "position {bad} outside ring of length {}",
                self.ring.len()
            )));
        }
        if msg.prev == Some(self.id) {
            return Ok(None);
        }
        for &c in &msg.channels {
            if (c as usize) < self.channel_count as usize {
                self.upd_sn(c, &msg.positions, now);
            }
        }
        let remaining: BTreeSet<ChannelId> =
            msg.channels.difference(&self.subscribed).copied().collect();
        if !remaining.is_empty() && !self.children.is_empty() {
            Ok(Some(SubMsg {
                prev: Some(from),
                channels: remaining,
                positions: msg.positions.clone(),
            }))
        } else {
            Ok(None)
        }
    }

    /// Folds the subscriber positions `sps` into channel `c`'s row. A
    /// position that is ccw-closer than the stored next subscriber replaces
    /// it and renews the lease (equality renews as well); otherwise, once the
    /// entry is stale, the closest candidate accumulates in `nstmp`. Own
    /// positions are ignored: an entry always names another node.
    pub fn upd_sn(&mut self, c: ChannelId, sps: &[Position], now: Tick) {
        if c as usize >= self.channel_count as usize {
            return;
        }
        let len = self.ring.len();
        for &sp in sps {
            if self.positions.contains(&sp) {
                continue;
            }
            for j in 0..self.positions.len() {
                let pj = self.positions[j];
                let e = &mut self.ft.entries[c as usize][j];
                let adopt = match e.ns {
                    None => true,
                    Some(ns) => crate::ring::is_between(sp, pj, ns, len),
                };
                if adopt {
                    e.ns = Some(sp);
                    e.ts = now;
                    if e.nstmp == Some(sp) {
                        e.nstmp = None;
                    }
                } else if now.saturating_sub(e.ts) > self.params.delta_s {
                    let closer = match e.nstmp {
                        None => true,
                        Some(t) => crate::ring::is_between(sp, pj, t, len),
                    };
                    if closer {
                        e.nstmp = Some(sp);
                    }
                }
            }
        }
    }

    /// Cleanup scan: entries stale for longer than the write-back period take
    /// over their temporary candidate. Entries without a candidate keep the
    /// stale value — stale entries still route.
    pub fn on_timer_clean(&mut self, now: Tick) -> Vec<WriteBack> {
        self.clean_deadline = now + self.params.t_clean;
        let mut out = Vec::new();
        for (ci, row) in self.ft.entries.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                if now.saturating_sub(e.ts) > self.params.t_wback {
                    if let Some(tmp) = e.nstmp.take() {
                        out.push(WriteBack {
                            channel: ci as ChannelId,
                            pos_index: j,
                            old_ns: e.ns,
                            new_ns: tmp,
                        });
                        e.ns = Some(tmp);
                        e.ts = now;
                    }
                }
            }
        }
        out
    }

    /// Starts a publication: the full ring is the initial segment, expressed
    /// by calling the forwarding logic with current position and endpoint
    /// both at the node's first position.
    pub fn publish(&mut self, c: ChannelId, payload: &[u8]) -> Result<Vec<PubSend>, PubSubError> {
        if c as usize >= self.channel_count as usize {
            return Err(PubSubError::UnknownChannel(c));
        }
        debug_assert!(!self.positions.is_empty(), "publisher is not on the ring");
        let seq = self.pub_seq;
        self.pub_seq += 1;
        let start = self.positions[0];
        Ok(self.handle_pub(start, start, c, payload, self.id, seq))
    }

    /// Receives a publication addressed to one of the node's positions:
    /// delivers locally when subscribed, then forwards into the sub-segments.
    pub fn on_pub(&mut self, msg: &PubMsg) -> Result<PubHandling, PubSubError> {
        if !self.positions.contains(&msg.goal) {
            return Err(PubSubError::GoalNotOwned { node: self.id, goal: msg.goal });
        }
        let delivered = self.subscribed.contains(&msg.channel);
        let forwards = self.handle_pub(
            msg.goal,
            msg.ep,
            msg.channel,
            &msg.payload,
            msg.origin,
            msg.seq,
        );
        Ok(PubHandling { delivered, forwards })
    }

    /// Forwarding core. For every own position, the segment up to the next
    /// own position (bounded by the received endpoint) is examined; when the
    /// stored next subscriber lies strictly inside, one message is sent to
    /// the farthest one-hop position short of it.
    ///
    /// Two guards keep delivery exactly-once. The next subscriber must fall
    /// strictly before the new endpoint: the endpoint belongs to a node that
    /// already saw the message (or to this node), so forwarding onto it would
    /// deliver twice. And it must lie ahead of the arrival position within
    /// the received range `(cur_pos, ep]`: segments behind the arrival point
    /// were already served by the chain that carried the message here, which
    /// can enter nested branches through shortcuts without touching the
    /// branch owner.
    pub fn handle_pub(
        &self,
        cur_pos: Position,
        ep: Position,
        c: ChannelId,
        payload: &[u8],
        origin: NodeId,
        seq: u32,
    ) -> Vec<PubSend> {
        let mut out = Vec::new();
        for (j, &p) in self.positions.iter().enumerate() {
            let Some(next_s) = self.ft.entries[c as usize][j].ns else {
                continue;
            };
            let new_ep = self.calc_new_ep(p, ep);
            if next_s == new_ep {
                continue;
            }
            let forward = match self.bound {
                ForwardingBound::HandlingPosition => {
                    self.ring.is_between(next_s, p, new_ep)
                        && self.ring.is_between(next_s, cur_pos, ep)
                }
                // Received-position variant of the segment test, kept for
                // comparison runs.
                ForwardingBound::CurrentPosition => self.ring.is_between(next_s, cur_pos, new_ep),
            };
            if forward {
                let goal = self.ring.get_pos_closest_to(p, next_s);
                out.push(PubSend {
                    from: p,
                    msg: PubMsg {
                        goal,
                        ep: new_ep,
                        channel: c,
                        payload: payload.to_vec(),
                        origin,
                        seq,
                    },
                });
            }
        }
        out
    }

    /// Narrows the endpoint at position `p`: the next own position takes over
    /// when it lies within the inherited bound. A single-position node keeps
    /// the inherited endpoint.
    pub fn calc_new_ep(&self, p: Position, max_ep: Position) -> Position {
        let i = self
            .positions
            .iter()
            .position(|&q| q == p)
            .expect("calc_new_ep called with a foreign position");
        let q = self.positions[(i + 1) % self.positions.len()];
        if self.ring.is_between(q, p, max_ep) {
            q
        } else {
            max_ep
        }
    }

    /// Rewires the node onto a rebuilt ring and tree, keeping subscriptions
    /// and the publication counter. The routing table restarts empty and the
    /// lease schedule is preserved.
    pub fn rebind(&mut self, ring: Arc<VirtualRing>, tree: &SpanningTree, now: Tick) {
        self.positions = ring.positions_of(self.id).to_vec();
        self.ring = ring;
        self.ft = RoutingTable::new(self.channel_count, self.positions.len(), now);
        self.parent = tree.parent(self.id);
        self.children = tree.children(self.id).to_vec();
        self.clean_deadline = now + self.params.t_clean;
    }
}
