//! Breadth-first width-limited lookahead producing an explicit tree of novel states.
//!
//! The root is registered in a fresh novelty table before anything is
//! generated. A generated successor becomes a tree node iff the table reports
//! it novel and no tree node already holds the same state. Once a layer
//! contains a goal state the layer is completed and the search stops.
//!
//! C-AIW additionally trims every completed layer to its `capacity` best
//! nodes by number of satisfied goal atoms, ties going to the earlier
//! generated node. Trimmed nodes leave the tree; survivors keep generation
//! order.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;
use core::str::FromStr;

use hashbrown::HashSet;

use crate::ground::{GroundAction, State, Task};
use crate::novelty::{NoveltyTable, Reduction, UnsupportedWidth};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Iw,
    Aiw,
    Baiw,
    Caiw,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Iw, Variant::Aiw, Variant::Baiw, Variant::Caiw];

    pub fn reduction(self) -> Reduction {
        match self {
            Variant::Iw => Reduction::Identity,
            Variant::Aiw | Variant::Caiw => Reduction::Type,
            Variant::Baiw => Reduction::Base,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Iw => "iw",
            Variant::Aiw => "aiw",
            Variant::Baiw => "baiw",
            Variant::Caiw => "caiw",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = LookaheadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or(LookaheadError::UnknownVariant)
    }
}

pub const DEFAULT_CAPACITY: usize = 1000;
pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookaheadConfig {
    pub variant: Variant,
    pub k: usize,
    /// Per-layer retention limit; only meaningful for C-AIW.
    pub capacity: Option<usize>,
    /// Cap on tree nodes, root included.
    pub max_states: Option<usize>,
    pub max_depth: Option<usize>,
    /// Register the atoms of every generated successor, including pruned
    /// ones. When false only states that enter the tree are registered.
    pub register_pruned: bool,
}

impl LookaheadConfig {
    pub fn new(variant: Variant) -> Self {
        LookaheadConfig {
            variant,
            k: 1,
            capacity: (variant == Variant::Caiw).then_some(DEFAULT_CAPACITY),
            max_states: Some(DEFAULT_MAX_STATES),
            max_depth: None,
            register_pruned: true,
        }
    }

    pub fn with_width(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_capacity(mut self, c: usize) -> Self {
        self.capacity = Some(c);
        self
    }

    pub fn with_max_states(mut self, n: Option<usize>) -> Self {
        self.max_states = n;
        self
    }

    pub fn with_max_depth(mut self, d: Option<usize>) -> Self {
        self.max_depth = d;
        self
    }

    pub fn validate(&self) -> Result<(), LookaheadError> {
        if !(1..=2).contains(&self.k) {
            return Err(LookaheadError::Width(UnsupportedWidth(self.k)));
        }
        match (self.variant, self.capacity) {
            (_, Some(0)) => Err(LookaheadError::ZeroCapacity),
            (Variant::Caiw, _) | (_, None) => Ok(()),
            (_, Some(_)) => Err(LookaheadError::CapacityWithoutCaiw),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LookaheadError {
    Width(UnsupportedWidth),
    ZeroCapacity,
    CapacityWithoutCaiw,
    UnknownVariant,
    InvalidNode(usize),
}

impl From<UnsupportedWidth> for LookaheadError {
    fn from(e: UnsupportedWidth) -> Self {
        LookaheadError::Width(e)
    }
}

impl fmt::Display for LookaheadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LookaheadError::Width(w) => w.fmt(f),
            LookaheadError::ZeroCapacity => f.write_str("capacity must be at least 1"),
            LookaheadError::CapacityWithoutCaiw => f.write_str("capacity is only valid for the caiw variant"),
            LookaheadError::UnknownVariant => f.write_str("unknown variant (expected iw, aiw, baiw or caiw)"),
            LookaheadError::InvalidNode(i) => write!(f, "no tree node with index {i}"),
        }
    }
}

impl core::error::Error for LookaheadError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub state: State,
    pub depth: u32,
    pub parent: Option<usize>,
    /// The action leading from the parent; `None` for the root.
    pub action: Option<GroundAction>,
}

/// Lookahead tree in BFS order; node 0 is the root at depth 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookaheadTree {
    nodes: Vec<TreeNode>,
    seen: usize,
    truncated: bool,
}

impl LookaheadTree {
    /// A root-only tree.
    pub fn single(root: State) -> Self {
        LookaheadTree {
            nodes: vec![TreeNode {
                state: root,
                depth: 0,
                parent: None,
                action: None,
            }],
            seen: 0,
            truncated: false,
        }
    }

    /// Depth-1 tree over all distinct primitive successors of `root`, in
    /// action order. Successors equal to the root are dropped.
    pub fn successors(task: &Task, root: &State) -> Self {
        let mut tree = Self::single(root.clone());
        let mut seen: HashSet<State> = HashSet::new();
        seen.insert(root.clone());
        for a in task.applicable_actions(root) {
            let s = root.apply(&a).expect("applicable action");
            if seen.insert(s.clone()) {
                tree.nodes.push(TreeNode {
                    state: s,
                    depth: 1,
                    parent: Some(0),
                    action: Some(a),
                });
            }
        }
        tree
    }

    /// Builds a tree from explicit nodes. Node 0 must be the only root, nodes
    /// must be in non-decreasing depth order and each parent must precede its
    /// child one level up.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Option<Self> {
        let ok = nodes.first().is_some_and(|r| r.depth == 0 && r.parent.is_none())
            && nodes.windows(2).all(|w| w[0].depth <= w[1].depth)
            && nodes.iter().enumerate().skip(1).all(|(i, n)| {
                n.parent
                    .is_some_and(|p| p < i && nodes[p].depth + 1 == n.depth)
            });
        ok.then_some(LookaheadTree {
            nodes,
            seen: 0,
            truncated: false,
        })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> &State {
        &self.nodes[0].state
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_depth(&self) -> u32 {
        self.nodes.last().map_or(0, |n| n.depth)
    }

    /// Size of the novelty seen-set when the search finished.
    pub fn seen_len(&self) -> usize {
        self.seen
    }

    /// True if `max_states` stopped the search.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Tree edges `(parent, child)` in child order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.parent.map(|p| (p, i)))
    }

    /// Every non-root node, in BFS order.
    pub fn jump_candidates(&self) -> Vec<usize> {
        (1..self.nodes.len()).collect()
    }

    /// Actions along the parent chain from the root to `node`.
    pub fn extract_plan(&self, node: usize) -> Result<Vec<GroundAction>, LookaheadError> {
        if node >= self.nodes.len() {
            return Err(LookaheadError::InvalidNode(node));
        }
        let mut plan = Vec::with_capacity(self.nodes[node].depth as usize);
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            plan.push(self.nodes[cur].action.clone().expect("non-root node has an action"));
            cur = p;
        }
        plan.reverse();
        Ok(plan)
    }
}

/// Runs the configured width-based lookahead from `root`.
pub fn lookahead(task: &Task, root: &State, cfg: &LookaheadConfig) -> Result<LookaheadTree, LookaheadError> {
    cfg.validate()?;
    let mut table = NoveltyTable::new(task, cfg.k, cfg.variant.reduction())?;
    table.register(root);
    let mut tree = LookaheadTree::single(root.clone());
    let mut in_tree: HashSet<State> = HashSet::new();
    in_tree.insert(root.clone());
    let max_states = cfg.max_states.unwrap_or(usize::MAX).max(1);
    let capacity = match cfg.variant {
        Variant::Caiw => cfg.capacity,
        _ => None,
    };

    let mut frontier = vec![0usize];
    let mut depth = 0u32;
    while !frontier.is_empty() && tree.nodes.len() < max_states {
        if cfg.max_depth.is_some_and(|d| depth as usize >= d) {
            break;
        }
        let layer_start = tree.nodes.len();
        let mut goal_seen = false;
        'layer: for &n in &frontier {
            let state = tree.nodes[n].state.clone();
            for a in task.applicable_actions(&state) {
                let succ = state.apply(&a).expect("applicable action");
                let novel = if cfg.register_pruned {
                    table.check_and_register(&succ)
                } else {
                    table.is_novel(&succ)
                };
                if !novel || in_tree.contains(&succ) {
                    continue;
                }
                if !cfg.register_pruned {
                    table.register(&succ);
                }
                goal_seen |= task.is_goal(&succ);
                in_tree.insert(succ.clone());
                tree.nodes.push(TreeNode {
                    state: succ,
                    depth: depth + 1,
                    parent: Some(n),
                    action: Some(a),
                });
                if tree.nodes.len() >= max_states {
                    tree.truncated = true;
                    break 'layer;
                }
            }
        }
        depth += 1;
        if let Some(c) = capacity {
            trim_layer(task, &mut tree.nodes, layer_start, c);
        }
        if goal_seen {
            break;
        }
        frontier = (layer_start..tree.nodes.len()).collect();
    }
    tree.seen = table.seen_len();
    Ok(tree)
}

/// Keeps the `capacity` nodes of `nodes[start..]` with the most satisfied
/// goal atoms; ties go to the earlier node. Survivors keep their order.
fn trim_layer(task: &Task, nodes: &mut Vec<TreeNode>, start: usize, capacity: usize) {
    let layer_len = nodes.len() - start;
    if layer_len <= capacity {
        return;
    }
    let mut ranked: Vec<usize> = (start..nodes.len()).collect();
    ranked.sort_by_key(|&i| Reverse(task.satisfied_goals(&nodes[i].state)));
    let mut keep = ranked[..capacity].to_vec();
    keep.sort_unstable();
    let mut layer = nodes.split_off(start);
    let mut it = keep.into_iter().peekable();
    for (offset, node) in layer.drain(..).enumerate() {
        if it.peek() == Some(&(start + offset)) {
            it.next();
            nodes.push(node);
        }
    }
}
