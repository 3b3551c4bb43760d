//! Deterministic laboratory for publish/subscribe routing on virtual rings.
//!
//! The pipeline: [`topology`] generates or loads a connected graph and thins
//! it to a bounded-degree link set; [`ring`] unrolls its BFS spanning tree
//! into a virtual ring with shortcut edges; [`pubsub`] is the per-node
//! routing state machine (leased subscriptions over the tree, segment-bounded
//! publication forwarding on the ring); [`sim`] drives any number of nodes
//! through a lossy network with fault injection; [`baselines`] and
//! [`metrics`] reproduce the message-overhead and delivery-ratio
//! measurements against tree-based strategies.

pub mod baselines;
pub mod metrics;
pub mod pubsub;
pub mod ring;
pub mod sim;
pub mod topology;

pub use pubsub::{ChannelId, NodeState, ProtocolParams, PubMsg, SubMsg, Tick};
pub use ring::{Position, ShortcutExpansion, VirtualRing};
pub use sim::{Scenario, TraceLedger};
pub use topology::{Graph, LinkSelection, NodeId, SpanningTree};
