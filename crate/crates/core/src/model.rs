//! Instance model: improvement graph, ordered label space, explicit hypothesis
//! class and version-space algebra.
//!
//! Nodes, labels and hypotheses are dense indices; names only exist so they
//! can be printed and written back out. Label index 0 is always the least
//! preferred label `z_1`.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::mask::Mask;

pub type NodeId = usize;
pub type LabelId = usize;
pub type HypId = usize;

/// The least preferred label.
pub const BOTTOM: LabelId = 0;

/// Tolerance used when comparing gains against zero and costs against value
/// gaps. The same constant drives best response, pruning and `Y_{x,v}` so
/// that all three agree on boundary cases.
pub const GAIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub to: NodeId,
    pub cost: f64,
}

/// Directed graph on the instance space. `edges[x]` is the improvement set
/// `Δ(x)` in ascending node order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementGraph {
    nodes: Vec<String>,
    edges: Vec<Vec<Edge>>,
}

impl ImprovementGraph {
    /// Builds a graph as given. Nothing is checked here; use [`validate`].
    pub fn new(nodes: Vec<String>, mut edges: Vec<Vec<Edge>>) -> Self {
        edges.resize(nodes.len(), Vec::new());
        for list in &mut edges {
            list.sort_by_key(|e| e.to);
        }
        ImprovementGraph { nodes, edges }
    }

    /// Unweighted graph from `(from, to)` pairs, self-loops added.
    pub fn unweighted(nodes: Vec<String>, arcs: &[(NodeId, NodeId)]) -> Self {
        let mut edges = vec![Vec::new(); nodes.len()];
        for &(a, b) in arcs {
            edges[a].push(Edge { to: b, cost: 0.0 });
        }
        ImprovementGraph::new(nodes, edges).with_self_loops()
    }

    /// Adds a zero-cost self-loop to every node that lacks one.
    pub fn with_self_loops(mut self) -> Self {
        for (x, list) in self.edges.iter_mut().enumerate() {
            if !list.iter().any(|e| e.to == x) {
                list.push(Edge { to: x, cost: 0.0 });
                list.sort_by_key(|e| e.to);
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self, x: NodeId) -> &[Edge] {
        &self.edges[x]
    }

    pub fn neighbors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.edges[x].iter().map(|e| e.to)
    }

    pub fn cost(&self, x: NodeId, v: NodeId) -> Option<f64> {
        self.edges[x].iter().find(|e| e.to == v).map(|e| e.cost)
    }

    pub fn contains_edge(&self, x: NodeId, v: NodeId) -> bool {
        self.cost(x, v).is_some()
    }

    /// `Δ_G`: the largest improvement set, self-loop included.
    pub fn max_degree(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_unweighted(&self) -> bool {
        self.edges.iter().flatten().all(|e| e.cost == 0.0)
    }
}

/// Ordered labels `z_1 < … < z_k` with strictly increasing values.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpace {
    names: Vec<String>,
    values: Vec<f64>,
}

impl LabelSpace {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Self {
        LabelSpace { names, values }
    }

    /// Labels `0 < 1` with values 0 and 1.
    pub fn binary() -> Self {
        LabelSpace::new(vec!["0".into(), "1".into()], vec![0.0, 1.0])
    }

    /// Labels `z1 … zk` with values `0 … k-1`.
    pub fn graded(k: usize) -> Self {
        LabelSpace::new(
            (1..=k).map(|i| format!("z{i}")).collect(),
            (0..k).map(|i| i as f64).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn value(&self, y: LabelId) -> f64 {
        self.values[y]
    }

    pub fn top(&self) -> LabelId {
        self.len() - 1
    }

    /// `val(z_k) - val(z_1)`.
    pub fn value_gap(&self) -> f64 {
        self.values[self.top()] - self.values[BOTTOM]
    }
}

/// A hypothesis as read from input. A `None` entry is a node the hypothesis
/// does not label, which [`validate`] reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub name: String,
    pub labeling: Vec<Option<LabelId>>,
}

impl Hypothesis {
    pub fn total(name: impl Into<String>, labels: Vec<LabelId>) -> Self {
        Hypothesis {
            name: name.into(),
            labeling: labels.into_iter().map(Some).collect(),
        }
    }
}

pub type HypothesisClass = Vec<Hypothesis>;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingSelfLoop { node: String },
    SelfLoopCost { node: String, cost: f64 },
    NegativeCost { from: String, to: String, cost: f64 },
    DuplicateNeighbor { from: String, to: String },
    UnknownNeighbor { from: String, index: usize },
    TooFewLabels { count: usize },
    NonMonotoneValues { lower: String, upper: String },
    UndefinedLabel { hypothesis: String, node: String },
    UnknownLabel { hypothesis: String, index: usize },
    EmptyClass,
    EmptyGraph,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingSelfLoop { node } => write!(f, "missing self-loop at {node}"),
            Violation::SelfLoopCost { node, cost } => {
                write!(f, "self-loop cost nonzero at {node} ({cost})")
            }
            Violation::NegativeCost { from, to, cost } => {
                write!(f, "negative cost {cost} on edge {from}->{to}")
            }
            Violation::DuplicateNeighbor { from, to } => {
                write!(f, "duplicate neighbor {to} in improvement set of {from}")
            }
            Violation::UnknownNeighbor { from, index } => {
                write!(f, "edge from {from} to undeclared node #{index}")
            }
            Violation::TooFewLabels { count } => write!(f, "need at least 2 labels, got {count}"),
            Violation::NonMonotoneValues { lower, upper } => {
                write!(
                    f,
                    "label values not strictly increasing: {lower} then {upper}"
                )
            }
            Violation::UndefinedLabel { hypothesis, node } => {
                write!(f, "hypothesis {hypothesis} undefined on node {node}")
            }
            Violation::UnknownLabel { hypothesis, index } => {
                write!(f, "hypothesis {hypothesis} uses undeclared label #{index}")
            }
            Violation::EmptyClass => write!(f, "hypothesis class is empty"),
            Violation::EmptyGraph => write!(f, "graph has no nodes"),
        }
    }
}

/// Checks the model assumptions. An empty report means the parts can be
/// assembled into an [`Instance`].
pub fn validate(
    graph: &ImprovementGraph,
    labels: &LabelSpace,
    class: &HypothesisClass,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let name = |i: usize| {
        graph
            .nodes
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("#{i}"))
    };
    if graph.is_empty() {
        out.push(Violation::EmptyGraph);
    }
    for x in 0..graph.len() {
        let list = &graph.edges[x];
        match list.iter().find(|e| e.to == x) {
            None => out.push(Violation::MissingSelfLoop { node: name(x) }),
            Some(e) if e.cost != 0.0 => out.push(Violation::SelfLoopCost {
                node: name(x),
                cost: e.cost,
            }),
            Some(_) => {}
        }
        for (i, e) in list.iter().enumerate() {
            if e.to >= graph.len() {
                out.push(Violation::UnknownNeighbor {
                    from: name(x),
                    index: e.to,
                });
            }
            if e.cost < 0.0 || e.cost.is_nan() {
                out.push(Violation::NegativeCost {
                    from: name(x),
                    to: name(e.to),
                    cost: e.cost,
                });
            }
            if list[..i].iter().any(|p| p.to == e.to) {
                out.push(Violation::DuplicateNeighbor {
                    from: name(x),
                    to: name(e.to),
                });
            }
        }
    }
    if labels.len() < 2 {
        out.push(Violation::TooFewLabels {
            count: labels.len(),
        });
    }
    for w in labels.values.windows(2).zip(labels.names.windows(2)) {
        if w.0[0] >= w.0[1] || w.0[1].is_nan() {
            out.push(Violation::NonMonotoneValues {
                lower: w.1[0].clone(),
                upper: w.1[1].clone(),
            });
        }
    }
    if class.is_empty() {
        out.push(Violation::EmptyClass);
    }
    for h in class {
        for x in 0..graph.len() {
            match h.labeling.get(x).copied().flatten() {
                None => out.push(Violation::UndefinedLabel {
                    hypothesis: h.name.clone(),
                    node: name(x),
                }),
                Some(y) if y >= labels.len() => out.push(Violation::UnknownLabel {
                    hypothesis: h.name.clone(),
                    index: y,
                }),
                Some(_) => {}
            }
        }
    }
    out
}

/// Drops every non-self-loop edge whose cost is at least the full value
/// gap: no labeling can make such a move strictly profitable.
pub fn prune_useless_edges(graph: &ImprovementGraph, labels: &LabelSpace) -> ImprovementGraph {
    let gap = labels.value_gap();
    let edges = graph
        .edges
        .iter()
        .enumerate()
        .map(|(x, list)| {
            list.iter()
                .copied()
                .filter(|e| e.to == x || gap - e.cost > GAIN_EPS)
                .collect()
        })
        .collect();
    ImprovementGraph::new(graph.nodes.clone(), edges)
}

/// A subset of the hypothesis table of one [`Instance`].
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct VersionSpace(Mask);

impl VersionSpace {
    pub fn from_mask(mask: Mask) -> Self {
        VersionSpace(mask)
    }

    pub fn mask(&self) -> &Mask {
        &self.0
    }

    pub fn into_mask(self) -> Mask {
        self.0
    }
}

impl Deref for VersionSpace {
    type Target = Mask;

    fn deref(&self) -> &Mask {
        &self.0
    }
}

/// A validated, pruned instance with a dense hypothesis table.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    graph: ImprovementGraph,
    labels: LabelSpace,
    hyp_names: Vec<String>,
    table: Vec<Vec<LabelId>>,
    /// `label_masks[x][y]` = hypotheses with `h(x) = y`.
    label_masks: Vec<Vec<Mask>>,
}

impl Instance {
    /// Validates the parts and prunes useless edges.
    pub fn new(
        graph: ImprovementGraph,
        labels: LabelSpace,
        class: HypothesisClass,
    ) -> Result<Self> {
        let violations = validate(&graph, &labels, &class);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        let graph = prune_useless_edges(&graph, &labels);
        let hyp_names = class.iter().map(|h| h.name.clone()).collect();
        let table: Vec<Vec<LabelId>> = class
            .into_iter()
            .map(|h| h.labeling.into_iter().map(|y| y.unwrap()).collect())
            .collect();
        let m = table.len();
        let label_masks = (0..graph.len())
            .map(|x| {
                (0..labels.len())
                    .map(|y| Mask::from_indices(m, (0..m).filter(|&h| table[h][x] == y)))
                    .collect()
            })
            .collect();
        Ok(Instance {
            graph,
            labels,
            hyp_names,
            table,
            label_masks,
        })
    }

    pub fn graph(&self) -> &ImprovementGraph {
        &self.graph
    }

    pub fn labels(&self) -> &LabelSpace {
        &self.labels
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_hypotheses(&self) -> usize {
        self.table.len()
    }

    pub fn hypothesis_name(&self, h: HypId) -> &str {
        &self.hyp_names[h]
    }

    pub fn node_name(&self, x: NodeId) -> &str {
        &self.graph.nodes[x]
    }

    pub fn label_name(&self, y: LabelId) -> &str {
        &self.labels.names[y]
    }

    pub fn node_index(&self, name: &str) -> Option<NodeId> {
        self.graph.nodes.iter().position(|n| n == name)
    }

    pub fn label_index(&self, name: &str) -> Option<LabelId> {
        self.labels.names.iter().position(|n| n == name)
    }

    pub fn hypothesis_index(&self, name: &str) -> Option<HypId> {
        self.hyp_names.iter().position(|n| n == name)
    }

    /// `h(x)` for hypothesis `h` of the class.
    pub fn label_of(&self, h: HypId, x: NodeId) -> LabelId {
        self.table[h][x]
    }

    pub fn hypothesis(&self, h: HypId) -> &[LabelId] {
        &self.table[h]
    }

    pub fn is_binary(&self) -> bool {
        self.labels.len() == 2
    }

    /// Hypotheses labeling `x` with `y`.
    pub fn label_mask(&self, x: NodeId, y: LabelId) -> &Mask {
        &self.label_masks[x][y]
    }

    pub fn full(&self) -> VersionSpace {
        VersionSpace(Mask::full(self.num_hypotheses()))
    }

    pub fn empty_space(&self) -> VersionSpace {
        VersionSpace(Mask::empty(self.num_hypotheses()))
    }

    pub fn space_of(&self, members: impl IntoIterator<Item = HypId>) -> VersionSpace {
        VersionSpace(Mask::from_indices(self.num_hypotheses(), members))
    }

    /// `V_{x,y}`.
    pub fn restrict(&self, vs: &VersionSpace, x: NodeId, y: LabelId) -> VersionSpace {
        VersionSpace(vs.0.and(&self.label_masks[x][y]))
    }

    /// `V_{x↛y}`.
    pub fn restrict_not(&self, vs: &VersionSpace, x: NodeId, y: LabelId) -> VersionSpace {
        VersionSpace(vs.0.and_not(&self.label_masks[x][y]))
    }

    pub fn neighbors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.graph.neighbors(x)
    }

    pub fn cost(&self, x: NodeId, v: NodeId) -> Option<f64> {
        self.graph.cost(x, v)
    }

    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    pub fn is_unweighted(&self) -> bool {
        self.graph.is_unweighted()
    }

    /// Whether label `y` can never pay for the move `x -> v`:
    /// `val(y) - val(z_1) <= cost(x, v)`. Such labels form `Y_{x,v}`.
    pub fn discourages_move(&self, x: NodeId, v: NodeId, y: LabelId) -> bool {
        let cost = self.cost(x, v).unwrap_or(f64::INFINITY);
        self.labels.value(y) - self.labels.value(BOTTOM) - cost <= GAIN_EPS
    }

    /// `Y_{x,v}` in ascending label order.
    pub fn discouraging_labels(&self, x: NodeId, v: NodeId) -> Vec<LabelId> {
        (0..self.num_labels())
            .filter(|&y| self.discourages_move(x, v, y))
            .collect()
    }
}
