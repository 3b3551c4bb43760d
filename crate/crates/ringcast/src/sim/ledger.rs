//! Append-only run trace: every transmission, delivery, write-back and epoch
//! mark, plus derived per-publication views and the summary CSV.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pubsub::Tick;
use crate::topology::NodeId;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("line {line}: {err}")]
    Parse { line: usize, err: String },
}

/// One trace line. The JSONL file holds exactly these, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case")]
pub enum LedgerEvent {
    PubIssued {
        t: Tick,
        pub_id: u64,
        origin: NodeId,
        channel: u8,
        seq: u32,
        expected: Vec<NodeId>,
    },
    PubTx {
        t: Tick,
        pub_id: u64,
        from_node: NodeId,
        from_pos: u16,
        goal: u16,
        ep: u16,
        hops: u32,
        bytes: usize,
        lost: bool,
    },
    PubRecv {
        t: Tick,
        pub_id: u64,
        node: NodeId,
        delivered: bool,
        hops: u32,
    },
    PubDrop {
        t: Tick,
        pub_id: u64,
        reason: String,
    },
    SubWave {
        t: Tick,
        origin: NodeId,
        wave: u64,
        channels: Vec<u8>,
    },
    SubTx {
        t: Tick,
        wave: u64,
        from: NodeId,
        to: NodeId,
        bytes: usize,
        lost: bool,
    },
    SubDrop {
        t: Tick,
        wave: u64,
        reason: String,
    },
    WriteBack {
        t: Tick,
        node: NodeId,
        channel: u8,
        pos_index: usize,
        old_ns: Option<u16>,
        new_ns: u16,
    },
    Epoch {
        t: Tick,
        label: String,
    },
    Diagnostic {
        t: Tick,
        node: NodeId,
        detail: String,
    },
}

impl LedgerEvent {
    pub fn time(&self) -> Tick {
        match self {
            LedgerEvent::PubIssued { t, .. }
            | LedgerEvent::PubTx { t, .. }
            | LedgerEvent::PubRecv { t, .. }
            | LedgerEvent::PubDrop { t, .. }
            | LedgerEvent::SubWave { t, .. }
            | LedgerEvent::SubTx { t, .. }
            | LedgerEvent::SubDrop { t, .. }
            | LedgerEvent::WriteBack { t, .. }
            | LedgerEvent::Epoch { t, .. }
            | LedgerEvent::Diagnostic { t, .. } => *t,
        }
    }
}

/// One transmission of a publication, as seen on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubTxView {
    pub time: Tick,
    pub from_node: NodeId,
    pub from_pos: u16,
    pub goal: u16,
    pub ep: u16,
    pub hops: u32,
    pub lost: bool,
}

/// Everything recorded about a single publication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubView {
    pub pub_id: u64,
    pub origin: NodeId,
    pub channel: u8,
    pub seq: u32,
    pub time: Tick,
    pub expected: BTreeSet<NodeId>,
    pub txs: Vec<PubTxView>,
    /// `(node, time, hops)` per delivery, in delivery order.
    pub deliveries: Vec<(NodeId, Tick, u32)>,
}

impl PubView {
    pub fn tx_count(&self) -> u64 {
        self.txs.len() as u64
    }

    pub fn delivered_nodes(&self) -> BTreeSet<NodeId> {
        self.deliveries.iter().map(|&(n, _, _)| n).collect()
    }

    /// Deliveries beyond the first, summed over nodes.
    pub fn dup_count(&self) -> u64 {
        let mut per_node: BTreeMap<NodeId, u64> = BTreeMap::new();
        for &(n, _, _) in &self.deliveries {
            *per_node.entry(n).or_default() += 1;
        }
        per_node.values().map(|&c| c.saturating_sub(1)).sum()
    }

    pub fn max_hops(&self) -> u32 {
        self.deliveries.iter().map(|&(_, _, h)| h).max().unwrap_or(0)
    }

    /// Exactly-once against the expectation snapshot taken at publish time.
    pub fn exactly_once(&self) -> bool {
        self.dup_count() == 0 && self.delivered_nodes() == self.expected
    }
}

/// The full run record. Built once by the engine, reconstructible from its
/// own JSONL dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLedger {
    events: Vec<LedgerEvent>,
    publications: Vec<PubView>,
    final_time: Tick,
}

impl TraceLedger {
    pub(crate) fn from_events(events: Vec<LedgerEvent>, final_time: Tick) -> Self {
        let mut pubs: BTreeMap<u64, PubView> = BTreeMap::new();
        for ev in &events {
            match ev {
                LedgerEvent::PubIssued { t, pub_id, origin, channel, seq, expected } => {
                    pubs.insert(
                        *pub_id,
                        PubView {
                            pub_id: *pub_id,
                            origin: *origin,
                            channel: *channel,
                            seq: *seq,
                            time: *t,
                            expected: expected.iter().copied().collect(),
                            txs: Vec::new(),
                            deliveries: Vec::new(),
                        },
                    );
                }
                LedgerEvent::PubTx { t, pub_id, from_node, from_pos, goal, ep, hops, lost, .. } => {
                    if let Some(p) = pubs.get_mut(pub_id) {
                        p.txs.push(PubTxView {
                            time: *t,
                            from_node: *from_node,
                            from_pos: *from_pos,
                            goal: *goal,
                            ep: *ep,
                            hops: *hops,
                            lost: *lost,
                        });
                    }
                }
                LedgerEvent::PubRecv { t, pub_id, node, delivered, hops } => {
                    if *delivered {
                        if let Some(p) = pubs.get_mut(pub_id) {
                            p.deliveries.push((*node, *t, *hops));
                        }
                    }
                }
                _ => {}
            }
        }
        let publications = pubs.into_values().collect();
        Self { events, publications, final_time }
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn publications(&self) -> &[PubView] {
        &self.publications
    }

    pub fn publication(&self, pub_id: u64) -> Option<&PubView> {
        self.publications.iter().find(|p| p.pub_id == pub_id)
    }

    pub fn final_time(&self) -> Tick {
        self.final_time
    }

    pub fn epochs(&self) -> Vec<(Tick, &str)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                LedgerEvent::Epoch { t, label } => Some((*t, label.as_str())),
                _ => None,
            })
            .collect()
    }

    pub fn write_backs(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, LedgerEvent::WriteBack { .. }))
            .count()
    }

    pub fn pub_tx_total(&self) -> u64 {
        self.events.iter().filter(|e| matches!(e, LedgerEvent::PubTx { .. })).count() as u64
    }

    pub fn pub_tx_lost(&self) -> u64 {
        self.events
            .iter()
            .filter(|e| matches!(e, LedgerEvent::PubTx { lost: true, .. }))
            .count() as u64
    }

    pub fn pub_recv_total(&self) -> u64 {
        self.events.iter().filter(|e| matches!(e, LedgerEvent::PubRecv { .. })).count() as u64
    }

    pub fn pub_drop_total(&self) -> u64 {
        self.events.iter().filter(|e| matches!(e, LedgerEvent::PubDrop { .. })).count() as u64
    }

    pub fn sub_tx_total(&self) -> u64 {
        self.events.iter().filter(|e| matches!(e, LedgerEvent::SubTx { .. })).count() as u64
    }

    /// Transmissions per subscription wave, keyed by wave id.
    pub fn sub_wave_sizes(&self) -> BTreeMap<u64, (NodeId, u64)> {
        let mut out: BTreeMap<u64, (NodeId, u64)> = BTreeMap::new();
        for e in &self.events {
            match e {
                LedgerEvent::SubWave { origin, wave, .. } => {
                    out.entry(*wave).or_insert((*origin, 0)).0 = *origin;
                }
                LedgerEvent::SubTx { wave, .. } => {
                    out.entry(*wave).or_insert((0, 0)).1 += 1;
                }
                _ => {}
            }
        }
        out
    }

    pub fn total_bytes(&self) -> (u64, u64) {
        let mut pub_bytes = 0u64;
        let mut sub_bytes = 0u64;
        for e in &self.events {
            match e {
                LedgerEvent::PubTx { bytes, .. } => pub_bytes += *bytes as u64,
                LedgerEvent::SubTx { bytes, .. } => sub_bytes += *bytes as u64,
                _ => {}
            }
        }
        (pub_bytes, sub_bytes)
    }

    /// Line-oriented JSON, one event per line; the last line carries the end
    /// time so a dump round-trips exactly.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out.push_str(&format!("{{\"ev\":\"end\",\"t\":{}}}\n", self.final_time));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LedgerError> {
        let mut events = Vec::new();
        let mut final_time = 0;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(line) {
                if v.get("ev").and_then(|e| e.as_str()) == Some("end") {
                    final_time = v.get("t").and_then(|t| t.as_u64()).unwrap_or(0);
                    continue;
                }
            }
            let ev: LedgerEvent = serde_json::from_str(line)
                .map_err(|e| LedgerError::Parse { line: i + 1, err: e.to_string() })?;
            events.push(ev);
        }
        Ok(Self::from_events(events, final_time))
    }

    /// `pub_id, channel, tx_count, delivered, dup_count, max_hops` per
    /// publication.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("pub_id,channel,tx_count,delivered,dup_count,max_hops\n");
        for p in &self.publications {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.pub_id,
                p.channel,
                p.tx_count(),
                p.delivered_nodes().len(),
                p.dup_count(),
                p.max_hops()
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TraceLedger {
        let events = vec![
            LedgerEvent::PubIssued {
                t: 5,
                pub_id: 0,
                origin: 1,
                channel: 0,
                seq: 0,
                expected: vec![2, 3],
            },
            LedgerEvent::PubTx {
                t: 5,
                pub_id: 0,
                from_node: 1,
                from_pos: 0,
                goal: 1,
                ep: 0,
                hops: 1,
                bytes: 16,
                lost: false,
            },
            LedgerEvent::PubRecv { t: 6, pub_id: 0, node: 2, delivered: true, hops: 1 },
            LedgerEvent::PubRecv { t: 7, pub_id: 0, node: 3, delivered: true, hops: 2 },
            LedgerEvent::Epoch { t: 8, label: "fault".into() },
        ];
        TraceLedger::from_events(events, 10)
    }

    #[test]
    fn views_fold_events() {
        let ledger = sample();
        let p = ledger.publication(0).unwrap();
        assert_eq!(p.tx_count(), 1);
        assert_eq!(p.delivered_nodes(), BTreeSet::from([2, 3]));
        assert_eq!(p.dup_count(), 0);
        assert!(p.exactly_once());
        assert_eq!(p.max_hops(), 2);
        assert_eq!(ledger.epochs(), vec![(8, "fault")]);
    }

    #[test]
    fn duplicate_deliveries_are_counted() {
        let mut events = sample().events().to_vec();
        events.push(LedgerEvent::PubRecv { t: 9, pub_id: 0, node: 2, delivered: true, hops: 3 });
        let ledger = TraceLedger::from_events(events, 10);
        let p = ledger.publication(0).unwrap();
        assert_eq!(p.dup_count(), 1);
        assert!(!p.exactly_once());
    }

    #[test]
    fn jsonl_roundtrip_is_exact() {
        let ledger = sample();
        let text = ledger.to_jsonl();
        let back = TraceLedger::from_jsonl(&text).unwrap();
        assert_eq!(ledger, back);
        assert_eq!(text, back.to_jsonl());
    }

    #[test]
    fn summary_csv_shape() {
        let csv = sample().summary_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("pub_id,channel,tx_count,delivered,dup_count,max_hops"));
        assert_eq!(lines.next(), Some("0,0,1,2,0,2"));
    }
}
