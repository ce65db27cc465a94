//! Shattered trees: exhaustive search for witnesses and an independent
//! shattering check.
//!
//! The search works on explicit branch constraints and scans the hypothesis
//! table directly; it shares no code with the memoized recursions. It is
//! exponential in the depth, so it refuses inputs beyond
//! [`MAX_ENUM_DEPTH`] and [`MAX_ENUM_NODES`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DimensionKind;
use crate::error::{Error, Result};
use crate::model::{HypId, Instance, LabelId, NodeId, VersionSpace, BOTTOM};

pub const MAX_ENUM_DEPTH: usize = 4;
pub const MAX_ENUM_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShatteredTree {
    Leaf,
    Node { x: NodeId, edges: Vec<TreeEdge> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub point: NodeId,
    pub label: LabelId,
    pub child: ShatteredTree,
}

impl ShatteredTree {
    /// Length of the shortest root-to-leaf branch.
    pub fn depth(&self) -> usize {
        match self {
            ShatteredTree::Leaf => 0,
            ShatteredTree::Node { edges, .. } => {
                1 + edges.iter().map(|e| e.child.depth()).min().unwrap_or(0)
            }
        }
    }

    pub fn root(&self) -> Option<NodeId> {
        match self {
            ShatteredTree::Leaf => None,
            ShatteredTree::Node { x, .. } => Some(*x),
        }
    }

    /// Child below the edge `(point, label)`, if the root has one.
    pub fn follow(&self, point: NodeId, label: LabelId) -> Option<&ShatteredTree> {
        match self {
            ShatteredTree::Leaf => None,
            ShatteredTree::Node { edges, .. } => edges
                .iter()
                .find(|e| e.point == point && e.label == label)
                .map(|e| &e.child),
        }
    }

    pub fn edges(&self) -> &[TreeEdge] {
        match self {
            ShatteredTree::Leaf => &[],
            ShatteredTree::Node { edges, .. } => edges,
        }
    }
}

/// Whether edges assert `h(u) = y` (false) or `h(u) ≠ y` (true).
fn negated(kind: DimensionKind) -> bool {
    kind == DimensionKind::Bil
}

struct Search<'a> {
    inst: &'a Instance,
    members: Vec<HypId>,
    kind: DimensionKind,
}

impl Search<'_> {
    fn realizable(&self, path: &[(NodeId, LabelId)]) -> bool {
        let neg = negated(self.kind);
        self.members.iter().any(|&h| {
            path.iter()
                .all(|&(u, y)| (self.inst.label_of(h, u) == y) != neg)
        })
    }

    fn find(&self, path: &mut Vec<(NodeId, LabelId)>, depth: usize) -> Option<ShatteredTree> {
        if !self.realizable(path) {
            return None;
        }
        if depth == 0 {
            return Some(ShatteredTree::Leaf);
        }
        (0..self.inst.num_nodes()).find_map(|x| self.root_at(x, path, depth))
    }

    fn root_at(
        &self,
        x: NodeId,
        path: &mut Vec<(NodeId, LabelId)>,
        depth: usize,
    ) -> Option<ShatteredTree> {
        let inst = self.inst;
        let k = inst.num_labels();
        let mut frame = Frame {
            search: self,
            path,
            depth,
            memo: HashMap::new(),
            edges: Vec::new(),
        };
        let all: Vec<LabelId> = (0..k).collect();
        let others: Vec<NodeId> = inst.neighbors(x).filter(|&v| v != x).collect();
        match self.kind {
            DimensionKind::Littlestone => {
                if !frame.pair(x, &all) {
                    return None;
                }
            }
            DimensionKind::IlBinary => {
                let mut required = vec![(x, 1)];
                required.extend(inst.neighbors(x).map(|v| (v, 0)));
                for (u, y) in required {
                    if !frame.single(u, y) {
                        return None;
                    }
                }
            }
            DimensionKind::IlMulticlass | DimensionKind::Wil => {
                if !frame.pair(x, &all) {
                    return None;
                }
                for v in others {
                    let singles: Vec<LabelId> = if self.kind == DimensionKind::Wil {
                        inst.discouraging_labels(x, v)
                    } else {
                        vec![BOTTOM]
                    };
                    let rest: Vec<LabelId> = all
                        .iter()
                        .copied()
                        .filter(|y| !singles.contains(y))
                        .collect();
                    let found = singles.iter().any(|&y| frame.single(v, y));
                    if !found && !frame.pair(v, &rest) {
                        return None;
                    }
                }
            }
            DimensionKind::Bil => {
                let mut required: Vec<(NodeId, LabelId)> = (0..k).map(|y| (x, y)).collect();
                for v in others {
                    required.extend((1..k).map(|y| (v, y)));
                }
                for (u, y) in required {
                    if !frame.single(u, y) {
                        return None;
                    }
                }
            }
        }
        Some(ShatteredTree::Node {
            x,
            edges: frame.edges,
        })
    }
}

/// Candidate root under construction: subtree searches are cached per edge.
struct Frame<'s, 'p> {
    search: &'s Search<'s>,
    path: &'p mut Vec<(NodeId, LabelId)>,
    depth: usize,
    memo: HashMap<(NodeId, LabelId), Option<ShatteredTree>>,
    edges: Vec<TreeEdge>,
}

impl Frame<'_, '_> {
    fn subtree(&mut self, u: NodeId, y: LabelId) -> Option<ShatteredTree> {
        if let Some(t) = self.memo.get(&(u, y)) {
            return t.clone();
        }
        self.path.push((u, y));
        let t = self.search.find(self.path, self.depth - 1);
        self.path.pop();
        self.memo.insert((u, y), t.clone());
        t
    }

    /// Adds the edge `(u, y)` if its subtree exists.
    fn single(&mut self, u: NodeId, y: LabelId) -> bool {
        match self.subtree(u, y) {
            Some(child) => {
                self.edges.push(TreeEdge {
                    point: u,
                    label: y,
                    child,
                });
                true
            }
            None => false,
        }
    }

    /// Adds the first pair `y1 < y2` from `labels` whose subtrees both exist.
    fn pair(&mut self, u: NodeId, labels: &[LabelId]) -> bool {
        for (i, &y1) in labels.iter().enumerate() {
            for &y2 in &labels[i + 1..] {
                if let (Some(t1), Some(t2)) = (self.subtree(u, y1), self.subtree(u, y2)) {
                    self.edges.push(TreeEdge {
                        point: u,
                        label: y1,
                        child: t1,
                    });
                    self.edges.push(TreeEdge {
                        point: u,
                        label: y2,
                        child: t2,
                    });
                    return true;
                }
            }
        }
        false
    }
}

/// Searches every tree of the given family with shortest branch `depth`
/// and returns one shattered by `vs`, if any exists.
pub fn enumerate_shattered_tree(
    inst: &Instance,
    vs: &VersionSpace,
    kind: DimensionKind,
    depth: usize,
) -> Result<Option<ShatteredTree>> {
    if depth > MAX_ENUM_DEPTH || inst.num_nodes() > MAX_ENUM_NODES {
        return Err(Error::ResourceLimit(format!(
            "tree enumeration supports depth <= {MAX_ENUM_DEPTH} on at most {MAX_ENUM_NODES} nodes \
             (asked depth {depth} on {} nodes)",
            inst.num_nodes()
        )));
    }
    if kind == DimensionKind::IlBinary && !inst.is_binary() {
        return Err(Error::SettingMismatch(
            "il-binary trees need two labels".into(),
        ));
    }
    let search = Search {
        inst,
        members: vs.iter().collect(),
        kind,
    };
    Ok(search.find(&mut Vec::new(), depth))
}

/// Checks that `tree` belongs to the family of `kind` and that every
/// branch is realized by some member of `vs`. Returns the depth.
pub fn check_witness(
    inst: &Instance,
    vs: &VersionSpace,
    kind: DimensionKind,
    tree: &ShatteredTree,
) -> std::result::Result<usize, String> {
    fn walk(
        inst: &Instance,
        members: &[HypId],
        kind: DimensionKind,
        tree: &ShatteredTree,
        path: &mut Vec<(NodeId, LabelId)>,
    ) -> std::result::Result<(), String> {
        match tree {
            ShatteredTree::Leaf => {
                let neg = negated(kind);
                let ok = members
                    .iter()
                    .any(|&h| path.iter().all(|&(u, y)| (inst.label_of(h, u) == y) != neg));
                if ok {
                    Ok(())
                } else {
                    Err(format!("branch {path:?} is not realizable"))
                }
            }
            ShatteredTree::Node { x, edges } => {
                check_node_shape(inst, kind, *x, edges)?;
                for e in edges {
                    path.push((e.point, e.label));
                    walk(inst, members, kind, &e.child, path)?;
                    path.pop();
                }
                Ok(())
            }
        }
    }
    let members: Vec<HypId> = vs.iter().collect();
    walk(inst, &members, kind, tree, &mut Vec::new())?;
    Ok(tree.depth())
}

fn check_node_shape(
    inst: &Instance,
    kind: DimensionKind,
    x: NodeId,
    edges: &[TreeEdge],
) -> std::result::Result<(), String> {
    let k = inst.num_labels();
    let labels_at = |u: NodeId| -> Vec<LabelId> {
        let mut ls: Vec<LabelId> = edges
            .iter()
            .filter(|e| e.point == u)
            .map(|e| e.label)
            .collect();
        ls.sort_unstable();
        ls
    };
    let bad = |what: &str| Err(format!("node {x}: {what}"));
    let nbrs: Vec<NodeId> = inst.neighbors(x).collect();
    if edges.iter().any(|e| !nbrs.contains(&e.point)) {
        return bad("edge on a point outside the improvement set");
    }
    let mut seen: Vec<(NodeId, LabelId)> = edges.iter().map(|e| (e.point, e.label)).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return bad("duplicate edge");
    }
    let at_x = labels_at(x);
    let others = nbrs.iter().copied().filter(|&v| v != x);
    match kind {
        DimensionKind::Littlestone => {
            if at_x.len() != 2 || edges.len() != 2 {
                return bad("littlestone node needs exactly two labels on its point");
            }
        }
        DimensionKind::IlBinary => {
            if at_x != [0, 1] {
                return bad("root point needs edges (x,0) and (x,1)");
            }
            for v in others {
                if labels_at(v) != [0] {
                    return bad("neighbor needs exactly the edge (v,0)");
                }
            }
        }
        DimensionKind::IlMulticlass | DimensionKind::Wil => {
            if at_x.len() != 2 {
                return bad("root point needs two distinct labels");
            }
            for v in others {
                let ls = labels_at(v);
                let in_single = |y: &LabelId| {
                    if kind == DimensionKind::Wil {
                        inst.discourages_move(x, v, *y)
                    } else {
                        *y == BOTTOM
                    }
                };
                let ok = (ls.len() == 1 && in_single(&ls[0]))
                    || (ls.len() == 2 && !ls.iter().any(in_single));
                if !ok {
                    return bad("neighbor edges violate the single/pair rule");
                }
            }
        }
        DimensionKind::Bil => {
            if at_x != (0..k).collect::<Vec<_>>() {
                return bad("root point needs every label");
            }
            for v in others {
                if labels_at(v) != (1..k).collect::<Vec<_>>() {
                    return bad("neighbor needs every non-bottom label");
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimensions::Dimensions;
    use crate::fixtures;
    use std::sync::Arc;

    #[test]
    fn pairs_have_no_depth_one_tree() {
        let f2 = fixtures::f2();
        let t = enumerate_shattered_tree(&f2, &f2.full(), DimensionKind::IlBinary, 1).unwrap();
        assert!(t.is_none());
        let l = enumerate_shattered_tree(&f2, &f2.full(), DimensionKind::Littlestone, 2).unwrap();
        assert!(l.is_some());
    }

    #[test]
    fn f1_depth_two_witness() {
        let f1 = fixtures::f1();
        let t = enumerate_shattered_tree(&f1, &f1.full(), DimensionKind::IlBinary, 2)
            .unwrap()
            .expect("witness");
        assert_eq!(
            check_witness(&f1, &f1.full(), DimensionKind::IlBinary, &t),
            Ok(2)
        );
        assert!(
            enumerate_shattered_tree(&f1, &f1.full(), DimensionKind::IlBinary, 3)
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn depth_zero_iff_nonempty() {
        let f3 = fixtures::f3();
        for kind in [
            DimensionKind::Littlestone,
            DimensionKind::Bil,
            DimensionKind::Wil,
        ] {
            assert_eq!(
                enumerate_shattered_tree(&f3, &f3.full(), kind, 0).unwrap(),
                Some(ShatteredTree::Leaf)
            );
            assert_eq!(
                enumerate_shattered_tree(&f3, &f3.empty_space(), kind, 0).unwrap(),
                None
            );
        }
    }

    #[test]
    fn limits_enforced() {
        let f1 = fixtures::f1();
        assert!(matches!(
            enumerate_shattered_tree(&f1, &f1.full(), DimensionKind::IlBinary, 5),
            Err(Error::ResourceLimit(_))
        ));
        let f3 = fixtures::f3();
        assert!(enumerate_shattered_tree(&f3, &f3.full(), DimensionKind::IlBinary, 1).is_err());
    }

    #[test]
    fn tampered_witness_rejected() {
        let f1 = fixtures::f1();
        let mut t = enumerate_shattered_tree(&f1, &f1.full(), DimensionKind::IlBinary, 2)
            .unwrap()
            .unwrap();
        if let ShatteredTree::Node { edges, .. } = &mut t {
            edges.pop();
        }
        assert!(check_witness(&f1, &f1.full(), DimensionKind::IlBinary, &t).is_err());
        // a singleton cannot realize every branch of a depth-one tree
        let t1 = enumerate_shattered_tree(&f1, &f1.full(), DimensionKind::IlBinary, 1)
            .unwrap()
            .unwrap();
        assert!(check_witness(&f1, &f1.space_of([0]), DimensionKind::IlBinary, &t1).is_err());
    }

    /// Frozen values for the three-label fixtures, each confirmed by the
    /// search (witness at d, none at d+1). BILdim of f3 is 4, the most any
    /// class on two points with three labels can reach.
    #[test]
    fn multiclass_fixture_values() {
        let f3 = fixtures::f3();
        let f4 = fixtures::f4();
        let cases = [
            (&f3, DimensionKind::Littlestone, 2),
            (&f3, DimensionKind::IlMulticlass, 2),
            (&f3, DimensionKind::Bil, 4),
            (&f3, DimensionKind::Wil, 2),
            (&f4, DimensionKind::Wil, 2),
        ];
        for (inst, kind, expect) in cases {
            let at = enumerate_shattered_tree(inst, &inst.full(), kind, expect).unwrap();
            let w = at.unwrap_or_else(|| panic!("{kind}: no witness at {expect}"));
            assert_eq!(check_witness(inst, &inst.full(), kind, &w), Ok(expect));
            if expect < MAX_ENUM_DEPTH {
                assert!(
                    enumerate_shattered_tree(inst, &inst.full(), kind, expect + 1)
                        .unwrap()
                        .is_none(),
                    "{kind}: witness above {expect}"
                );
            }
            let d = Dimensions::new(Arc::new(inst.clone()));
            assert_eq!(d.dim(kind, &inst.full()), expect as i32, "{kind}");
        }
    }
}
