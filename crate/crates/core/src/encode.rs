//! Relational graph encodings of states and transitions.
//!
//! Every encoding starts from the state encoding `R^s`: one node per object,
//! one hyperedge `P(ō)` per atom of `s`, and one goal-flag hyperedge per goal
//! atom (`P:goal_true` if it holds in `s`, `P:goal_false` otherwise). Object
//! `i` of the instance is always node `i`, so graphs built for the same
//! instance share object node ids.
//!
//! Derived relation labels (predicate names never contain `:`):
//!
//! | label                | meaning                                        |
//! |----------------------|------------------------------------------------|
//! | `P:goal_true/false`  | goal atom true / false in the root state       |
//! | `P:add`, `P:del`     | atom added / deleted relative to the root      |
//! | `P:goal_add/del`     | the same, restricted to goal atoms             |
//! | `action:A`           | ground action of schema `A` (AA)               |
//! | `edge`, `edge_root`  | tree edge between state nodes / from the root  |
//! | `depth_lt`           | depth order `d < d'`                           |
//! | `state_depth`        | state node at a depth                          |
//! | `next:L`             | label `L` of the successor half (Internal)     |

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ground::{AtomId, GroundAction, State, Task};
use crate::lookahead::LookaheadTree;

pub mod labels {
    use alloc::format;
    use alloc::string::String;

    pub const EDGE: &str = "edge";
    pub const EDGE_ROOT: &str = "edge_root";
    pub const DEPTH_ORDER: &str = "depth_lt";
    pub const STATE_DEPTH: &str = "state_depth";

    pub fn goal_true(pred: &str) -> String {
        format!("{pred}:goal_true")
    }

    pub fn goal_false(pred: &str) -> String {
        format!("{pred}:goal_false")
    }

    pub fn added(pred: &str) -> String {
        format!("{pred}:add")
    }

    pub fn deleted(pred: &str) -> String {
        format!("{pred}:del")
    }

    pub fn goal_added(pred: &str) -> String {
        format!("{pred}:goal_add")
    }

    pub fn goal_deleted(pred: &str) -> String {
        format!("{pred}:goal_del")
    }

    pub fn action(schema: &str) -> String {
        format!("action:{schema}")
    }

    pub fn next(label: &str) -> String {
        format!("next:{label}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Object,
    State,
    Depth,
    Action,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Object => "object",
            NodeKind::State => "state",
            NodeKind::Depth => "depth",
            NodeKind::Action => "action",
        }
    }
}

impl FromStr for NodeKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "object" => Ok(NodeKind::Object),
            "state" => Ok(NodeKind::State),
            "depth" => Ok(NodeKind::Depth),
            "action" => Ok(NodeKind::Action),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Encoding {
    State,
    External,
    AggregatedActions,
    AggregatedDelta,
    Internal,
    InternalDelta,
}

impl Encoding {
    pub const ALL: [Encoding; 6] = [
        Encoding::State,
        Encoding::External,
        Encoding::AggregatedActions,
        Encoding::AggregatedDelta,
        Encoding::Internal,
        Encoding::InternalDelta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Encoding::State => "state",
            Encoding::External => "ext",
            Encoding::AggregatedActions => "aa",
            Encoding::AggregatedDelta => "ad",
            Encoding::Internal => "int",
            Encoding::InternalDelta => "intd",
        }
    }

    /// Encodings that describe one transition per graph.
    pub fn is_per_transition(self) -> bool {
        matches!(self, Encoding::External | Encoding::Internal | Encoding::InternalDelta)
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Encoding {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Encoding::ALL.into_iter().find(|e| e.as_str() == s).ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub id: u32,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HyperEdge {
    pub label: String,
    pub args: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMeta {
    pub instance: String,
    pub encoding: Encoding,
}

/// A typed relational graph. Node ids are dense and equal to node positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelGraph {
    pub meta: GraphMeta,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<HyperEdge>,
    /// Node ids whose Q-values are requested. Per-transition graphs carry the
    /// index of the transition they encode instead.
    pub candidates: Vec<u32>,
}

/// External encoding: the two states encoded independently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphPair {
    pub left: RelGraph,
    pub right: RelGraph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphError {
    DanglingEdge { edge: usize, node: u32 },
    NodeIdMismatch { position: usize, id: u32 },
    UnknownCandidate(u32),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DanglingEdge { edge, node } => {
                write!(f, "hyperedge {edge} references missing node {node}")
            }
            GraphError::NodeIdMismatch { position, id } => {
                write!(f, "node at position {position} has id {id}")
            }
            GraphError::UnknownCandidate(c) => write!(f, "candidate {c} is not a node"),
        }
    }
}

impl core::error::Error for GraphError {}

impl RelGraph {
    fn empty(task: &Task, encoding: Encoding) -> Self {
        let nodes = (0..task.num_objects())
            .map(|i| GraphNode {
                id: i as u32,
                kind: NodeKind::Object,
                label: task.object_name(crate::pddl::ObjectId(i as u32)).into(),
            })
            .collect();
        RelGraph {
            meta: GraphMeta {
                instance: task.instance().name.clone(),
                encoding,
            },
            nodes,
            edges: Vec::new(),
            candidates: Vec::new(),
        }
    }

    fn add_node(&mut self, kind: NodeKind, label: String) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(GraphNode { id, kind, label });
        id
    }

    fn add_atom(&mut self, task: &Task, label: String, anchor: Option<u32>, atom: AtomId) {
        let g = task.atom(atom);
        let args = anchor
            .into_iter()
            .chain(g.args.iter().map(|o| o.0))
            .collect();
        self.edges.push(HyperEdge { label, args });
    }

    /// Appends `R^s` hyperedges, with every label passed through `relabel`.
    fn add_state(&mut self, task: &Task, s: &State, relabel: impl Fn(String) -> String) {
        for &a in s.atoms() {
            self.add_atom(task, relabel(pred_name(task, a).into()), None, a);
        }
        for &a in task.goal() {
            let p = pred_name(task, a);
            let l = if s.contains(a) {
                labels::goal_true(p)
            } else {
                labels::goal_false(p)
            };
            self.add_atom(task, relabel(l), None, a);
        }
    }

    /// Appends the delta of `succ` against `root`, optionally anchored to a state node.
    fn add_delta(&mut self, task: &Task, root: &State, succ: &State, anchor: Option<u32>) {
        let added: Vec<AtomId> = succ.difference(root).collect();
        let deleted: Vec<AtomId> = root.difference(succ).collect();
        let is_goal = |a: &AtomId| task.goal().binary_search(a).is_ok();
        for &a in &added {
            self.add_atom(task, labels::added(pred_name(task, a)), anchor, a);
        }
        for &a in &deleted {
            self.add_atom(task, labels::deleted(pred_name(task, a)), anchor, a);
        }
        for &a in added.iter().filter(|a| is_goal(a)) {
            self.add_atom(task, labels::goal_added(pred_name(task, a)), anchor, a);
        }
        for &a in deleted.iter().filter(|a| is_goal(a)) {
            self.add_atom(task, labels::goal_deleted(pred_name(task, a)), anchor, a);
        }
    }

    pub fn with_candidates(mut self, candidates: Vec<u32>) -> Self {
        self.candidates = candidates;
        self
    }

    pub fn node_count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn edges_labeled<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a HyperEdge> + 'a {
        self.edges.iter().filter(move |e| e.label == label)
    }

    /// Checks ids, edge endpoints and (for aggregated encodings) candidates.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id as usize != i {
                return Err(GraphError::NodeIdMismatch { position: i, id: n.id });
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if let Some(&bad) = e.args.iter().find(|&&a| a as usize >= self.nodes.len()) {
                return Err(GraphError::DanglingEdge { edge: i, node: bad });
            }
        }
        if !self.meta.encoding.is_per_transition() {
            if let Some(&c) = self.candidates.iter().find(|&&c| c as usize >= self.nodes.len()) {
                return Err(GraphError::UnknownCandidate(c));
            }
        }
        Ok(())
    }
}

fn pred_name(task: &Task, a: AtomId) -> &str {
    &task.domain().predicate(task.atom(a).pred).name
}

/// `R^s`: |edges| = |s| + |g|.
pub fn encode_state(task: &Task, s: &State) -> RelGraph {
    let mut g = RelGraph::empty(task, Encoding::State);
    g.add_state(task, s, |l| l);
    g
}

/// External: `(R^s, R^{s2})` over aligned object ids.
pub fn encode_external(task: &Task, s: &State, s2: &State) -> GraphPair {
    let mut left = encode_state(task, s);
    let mut right = encode_state(task, s2);
    left.meta.encoding = Encoding::External;
    right.meta.encoding = Encoding::External;
    GraphPair { left, right }
}

impl GraphPair {
    pub fn with_candidate(mut self, c: u32) -> Self {
        self.left.candidates = alloc::vec![c];
        self.right.candidates = alloc::vec![c];
        self
    }
}

/// Aggregated actions: `R^s` plus one action node per ground action with a
/// hyperedge `action:A(o_a, ō)`. Candidates are the action nodes in input order.
pub fn encode_aa(task: &Task, s: &State, actions: &[GroundAction]) -> RelGraph {
    let mut g = RelGraph::empty(task, Encoding::AggregatedActions);
    g.add_state(task, s, |l| l);
    for a in actions {
        let node = g.add_node(NodeKind::Action, task.action_string(a));
        let schema = &task.domain().schema(a.schema).name;
        g.edges.push(HyperEdge {
            label: labels::action(schema),
            args: core::iter::once(node).chain(a.args.iter().map(|o| o.0)).collect(),
        });
        g.candidates.push(node);
    }
    g
}

/// Aggregated delta: the whole lookahead tree in one graph.
///
/// The root is `R^s`. Each non-root node gets a state node anchored to its
/// add/delete deltas against the root. Tree edges out of the root become
/// unary `edge_root` markers since the root has no state node. Depth nodes
/// exist for depths `1..=d_max`, fully ordered by `depth_lt`.
/// Candidates are the state nodes in BFS order.
#[allow(clippy::needless_range_loop)]
pub fn encode_ad(task: &Task, tree: &LookaheadTree) -> RelGraph {
    let root = tree.root();
    let mut g = RelGraph::empty(task, Encoding::AggregatedDelta);
    g.add_state(task, root, |l| l);
    let mut state_node = alloc::vec![u32::MAX; tree.len()];
    for i in 1..tree.len() {
        state_node[i] = g.add_node(NodeKind::State, format!("s{i}"));
        g.candidates.push(state_node[i]);
    }
    for i in 1..tree.len() {
        g.add_delta(task, root, &tree.node(i).state, Some(state_node[i]));
    }
    for (p, c) in tree.edges() {
        let e = if p == 0 {
            HyperEdge {
                label: labels::EDGE_ROOT.into(),
                args: alloc::vec![state_node[c]],
            }
        } else {
            HyperEdge {
                label: labels::EDGE.into(),
                args: alloc::vec![state_node[p], state_node[c]],
            }
        };
        g.edges.push(e);
    }
    let d_max = tree.max_depth();
    let depth_node: Vec<u32> = (1..=d_max)
        .map(|d| g.add_node(NodeKind::Depth, format!("d{d}")))
        .collect();
    for a in 0..depth_node.len() {
        for b in a + 1..depth_node.len() {
            g.edges.push(HyperEdge {
                label: labels::DEPTH_ORDER.into(),
                args: alloc::vec![depth_node[a], depth_node[b]],
            });
        }
    }
    for i in 1..tree.len() {
        let d = tree.node(i).depth as usize;
        g.edges.push(HyperEdge {
            label: labels::STATE_DEPTH.into(),
            args: alloc::vec![state_node[i], depth_node[d - 1]],
        });
    }
    g
}

/// Internal: `R^s` plus `R^{s2}` under the `next:` label alphabet.
pub fn encode_internal(task: &Task, s: &State, s2: &State) -> RelGraph {
    let mut g = RelGraph::empty(task, Encoding::Internal);
    g.add_state(task, s, |l| l);
    g.add_state(task, s2, |l| labels::next(&l));
    g
}

/// Internal delta: `R^s` plus unanchored add/delete deltas of `s2`.
pub fn encode_internal_delta(task: &Task, s: &State, s2: &State) -> RelGraph {
    let mut g = RelGraph::empty(task, Encoding::InternalDelta);
    g.add_state(task, s, |l| l);
    g.add_delta(task, s, s2, None);
    g
}

/// The relation labels any encoding of `task` may use.
pub fn label_alphabet(task: &Task) -> Vec<String> {
    let mut out = Vec::new();
    for p in &task.domain().predicates {
        let n = p.name.as_str();
        let base = [
            n.to_string(),
            labels::goal_true(n),
            labels::goal_false(n),
        ];
        for l in &base {
            out.push(labels::next(l));
        }
        out.extend(base);
        out.extend([
            labels::added(n),
            labels::deleted(n),
            labels::goal_added(n),
            labels::goal_deleted(n),
        ]);
    }
    for a in &task.domain().actions {
        out.push(labels::action(&a.name));
    }
    out.extend(
        [labels::EDGE, labels::EDGE_ROOT, labels::DEPTH_ORDER, labels::STATE_DEPTH]
            .map(String::from),
    );
    out.sort();
    out
}
