//! Search tree: per-history visit statistics, PUCT selection and backpropagation.
//!
//! Nodes live in an arena and are addressed by [`NodeId`]. Each node stores its
//! values from the point of view of the seat to move there; two-player values
//! are complemented (`1 - v`) on the way up.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::env::{ActionId, Seat};
use crate::error::{Error, Result};
use crate::estimators;
use crate::policy::PolicyDistribution;

/// Actions taken from the root; the root itself is the empty history.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HistoryKey(pub Vec<ActionId>);

impl HistoryKey {
    pub fn root() -> Self {
        HistoryKey(Vec::new())
    }

    pub fn child(&self, action: ActionId) -> Self {
        let mut actions = self.0.clone();
        actions.push(action);
        HistoryKey(actions)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    visits: u32,
    total_value: f64,
    reward_samples: Vec<f64>,
}

impl EdgeStats {
    pub fn visits(&self) -> u32 {
        self.visits
    }

    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    /// Every backed-up value, in arrival order.
    pub fn reward_samples(&self) -> &[f64] {
        &self.reward_samples
    }

    /// Mean backed-up value; `None` before the first visit.
    pub fn q(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.total_value / self.visits as f64)
    }

    fn record(&mut self, value: f64) {
        self.visits += 1;
        self.total_value += value;
        self.reward_samples.push(value);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    key: HistoryKey,
    seat: Seat,
    legal: Vec<ActionId>,
    visits: u32,
    edges: BTreeMap<ActionId, EdgeStats>,
    children: BTreeMap<ActionId, NodeId>,
}

impl TreeNode {
    pub fn new(key: HistoryKey, seat: Seat, legal: Vec<ActionId>) -> Self {
        TreeNode {
            key,
            seat,
            legal,
            visits: 0,
            edges: BTreeMap::new(),
            children: BTreeMap::new(),
        }
    }

    pub fn key(&self) -> &HistoryKey {
        &self.key
    }

    pub fn seat(&self) -> Seat {
        self.seat
    }

    pub fn legal_actions(&self) -> &[ActionId] {
        &self.legal
    }

    /// `N(h)`.
    pub fn visits(&self) -> u32 {
        self.visits
    }

    pub fn edge(&self, action: ActionId) -> Option<&EdgeStats> {
        self.edges.get(&action)
    }

    pub fn edges(&self) -> impl Iterator<Item = (ActionId, &EdgeStats)> {
        self.edges.iter().map(|(&a, e)| (a, e))
    }

    pub fn child(&self, action: ActionId) -> Option<NodeId> {
        self.children.get(&action).copied()
    }

    pub fn children(&self) -> impl Iterator<Item = (ActionId, NodeId)> + '_ {
        self.children.iter().map(|(&a, &n)| (a, n))
    }

    /// `N(h, a)`, zero for unvisited actions.
    pub fn edge_visits(&self, action: ActionId) -> u32 {
        self.edges.get(&action).map_or(0, EdgeStats::visits)
    }

    /// `Q(h, a)` with unvisited actions reading as zero.
    pub fn q_or_zero(&self, action: ActionId) -> f64 {
        self.edges.get(&action).and_then(EdgeStats::q).unwrap_or(0.0)
    }

    pub fn samples(&self, action: ActionId) -> &[f64] {
        self.edges.get(&action).map_or(&[], |e| e.reward_samples())
    }
}

/// `argmax_a Q(h,a) + c·π_b(a|h)·√N(h) / (1 + N(h,a))`, ties to the lowest action.
pub fn puct_select(node: &TreeNode, behavior: &PolicyDistribution, c: f64) -> Result<ActionId> {
    let sqrt_n = f64::from(node.visits).sqrt();
    let mut best: Option<(ActionId, f64)> = None;
    for &action in &node.legal {
        let bonus = c * behavior.prob(action) * sqrt_n / (1.0 + f64::from(node.edge_visits(action)));
        let score = node.q_or_zero(action) + bonus;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((action, score));
        }
    }
    best.map(|(a, _)| a).ok_or(Error::NoLegalAction)
}

/// `(a, Q(h,a))` for every legal action, zero where unvisited.
pub fn q_table(node: &TreeNode) -> Vec<(ActionId, f64)> {
    node.legal.iter().map(|&a| (a, node.q_or_zero(a))).collect()
}

/// Arena of nodes; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    zero_sum: bool,
}

impl Tree {
    pub const ROOT: NodeId = NodeId(0);

    pub fn new(root_seat: Seat, root_legal: Vec<ActionId>, zero_sum: bool) -> Self {
        Tree {
            nodes: vec![TreeNode::new(HistoryKey::root(), root_seat, root_legal)],
            zero_sum,
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    /// Adds the child reached by `action` from `parent`, or returns the existing one.
    pub fn expand(&mut self, parent: NodeId, action: ActionId, seat: Seat, legal: Vec<ActionId>) -> NodeId {
        if let Some(existing) = self.nodes[parent.0].child(action) {
            return existing;
        }
        let id = NodeId(self.nodes.len());
        let key = self.nodes[parent.0].key.child(action);
        self.nodes.push(TreeNode::new(key, seat, legal));
        self.nodes[parent.0].children.insert(action, id);
        id
    }

    /// Converts a value seen by `perspective` into the value seen by `seat`.
    pub fn value_for(&self, value: f64, perspective: Seat, seat: Seat) -> f64 {
        if self.zero_sum && seat != perspective {
            1.0 - value
        } else {
            value
        }
    }

    /// Records `value` (as seen by `perspective`) on every `(node, action)` edge
    /// of a root-to-leaf path and bumps the node counts.
    pub fn record_and_backpropagate(&mut self, path: &[(NodeId, ActionId)], value: f64, perspective: Seat) {
        for &(id, action) in path {
            let v = self.value_for(value, perspective, self.nodes[id.0].seat);
            let node = &mut self.nodes[id.0];
            node.visits += 1;
            node.edges.entry(action).or_default().record(v);
        }
    }

    /// Structured text listing of the root edges: one `action N Q` line each.
    pub fn root_summary(&self) -> String {
        let mut out = String::new();
        for (action, edge) in self.root().edges() {
            let _ = writeln!(
                out,
                "action={} visits={} q={:.4}",
                action,
                edge.visits(),
                edge.q().unwrap_or(0.0)
            );
        }
        out
    }
}

/// `Q̂(h, a)` by k-fold averaging of the edge's samples.
pub fn q_hat(node: &TreeNode, action: ActionId, k: usize) -> Result<f64> {
    estimators::q_hat_kfold(node.samples(action), k)
}
