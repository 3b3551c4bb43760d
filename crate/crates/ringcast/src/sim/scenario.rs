//! Declarative experiment description, serializable as JSON.

use serde::{Deserialize, Serialize};

use crate::pubsub::{ChannelId, ForwardingBound, Tick};
use crate::ring::ShortcutExpansion;
use crate::topology::NodeId;

/// Where the communication graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySource {
    /// Connected Erdős–Rényi sample using the scenario seed.
    Generate { nodes: usize, edge_prob: f64 },
    /// Plain-text graph file (`n m` header, one `u v` line per edge).
    File { path: String },
    /// Inline edge list.
    Edges { nodes: usize, edges: Vec<(NodeId, NodeId)> },
}

/// Which node roots the spanning tree the ring is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootPolicy {
    /// Minimum-eccentricity node, ties to the smallest id.
    #[default]
    Central,
    Node(NodeId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppAction {
    Subscribe { channel: ChannelId },
    Unsubscribe { channel: ChannelId },
    Publish { channel: ChannelId, size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppEvent {
    pub time: Tick,
    pub node: NodeId,
    pub action: AppAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Overwrite one routing-table cell with an arbitrary position.
    CorruptEntry { node: NodeId, channel: ChannelId, pos_index: usize, new_ns: u16 },
    /// Add a node attached through the listed neighbors; tree and ring are
    /// rebuilt centrally.
    Join { attach: Vec<NodeId> },
    /// Remove a node (must not disconnect the rest); rebuild follows.
    Leave { node: NodeId },
    /// Change the per-transmission loss probability mid-run.
    SetLoss { loss: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub time: Tick,
    pub kind: FaultKind,
}

fn default_per_hop() -> Tick {
    1
}

/// Complete experiment description. Identical scenarios (including the seed)
/// produce byte-identical trace ledgers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: TopologySource,
    #[serde(default)]
    pub degree_cap: Option<usize>,
    #[serde(default)]
    pub root: RootPolicy,
    pub channels: u8,
    #[serde(default)]
    pub apps: Vec<AppEvent>,
    #[serde(default)]
    pub faults: Vec<FaultEvent>,
    /// Bernoulli loss probability applied to every transmission.
    #[serde(default)]
    pub loss: f64,
    #[serde(default = "default_per_hop")]
    pub per_hop_delay: Tick,
    /// Leasing period override; the default scales with the ring length.
    #[serde(default)]
    pub delta_s: Option<Tick>,
    #[serde(default)]
    pub t_clean: Option<Tick>,
    #[serde(default)]
    pub t_wback: Option<Tick>,
    /// Delay between a churn fault and the rebuilt ring coming online.
    #[serde(default)]
    pub rebuild_latency: Tick,
    pub duration: Tick,
    pub seed: u64,
    #[serde(default)]
    pub forwarding_bound: ForwardingBound,
    #[serde(default)]
    pub shortcut_expansion: ShortcutExpansion,
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Field-path validation against a known node count. Churn may grow the
    /// id space, so references by later events account for joins seen so far.
    pub fn validate(&self, initial_nodes: usize) -> Vec<String> {
        let mut errors = Vec::new();
        if self.channels == 0 {
            errors.push("channels: must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.loss) {
            errors.push(format!("loss: {} outside [0, 1]", self.loss));
        }
        if self.per_hop_delay == 0 {
            errors.push("per_hop_delay: must be at least 1".into());
        }
        if self.duration == 0 {
            errors.push("duration: must be positive".into());
        }
        if let Some(cap) = self.degree_cap {
            if cap < 2 {
                errors.push(format!("degree_cap: {cap} below the minimum of 2"));
            }
        }
        if let RootPolicy::Node(r) = self.root {
            if r >= initial_nodes {
                errors.push(format!("root: node {r} out of range"));
            }
        }
        let mut max_nodes = initial_nodes;
        for (i, f) in self.faults.iter().enumerate() {
            match &f.kind {
                FaultKind::CorruptEntry { node, channel, .. } => {
                    if *node >= max_nodes {
                        errors.push(format!("faults[{i}].node: {node} out of range"));
                    }
                    if *channel >= self.channels {
                        errors.push(format!("faults[{i}].channel: {channel} unknown"));
                    }
                }
                FaultKind::Join { attach } => {
                    if attach.is_empty() {
                        errors.push(format!("faults[{i}].attach: must name at least one neighbor"));
                    }
                    for a in attach {
                        if *a >= max_nodes {
                            errors.push(format!("faults[{i}].attach: node {a} out of range"));
                        }
                    }
                    max_nodes += 1;
                }
                FaultKind::Leave { node } => {
                    if *node >= max_nodes {
                        errors.push(format!("faults[{i}].node: {node} out of range"));
                    }
                }
                FaultKind::SetLoss { loss } => {
                    if !(0.0..=1.0).contains(loss) {
                        errors.push(format!("faults[{i}].loss: {loss} outside [0, 1]"));
                    }
                }
            }
        }
        for (i, a) in self.apps.iter().enumerate() {
            if a.node >= max_nodes {
                errors.push(format!("apps[{i}].node: {} out of range", a.node));
            }
            let channel = match &a.action {
                AppAction::Subscribe { channel }
                | AppAction::Unsubscribe { channel }
                | AppAction::Publish { channel, .. } => *channel,
            };
            if channel >= self.channels {
                errors.push(format!("apps[{i}].channel: {channel} unknown"));
            }
        }
        errors
    }
}
