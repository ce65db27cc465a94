//! Mistake-bound dimensions of version spaces.
//!
//! Each dimension is the largest depth of a tree of its family shattered by
//! the version space. Trees decompose at the root, so the depth satisfies
//!
//! ```text
//! D(∅) = -1
//! D(V) = max(0, 1 + max_x value_x(V))
//! ```
//!
//! where `value_x` is the smallest child dimension over the edges required
//! at a root labeled `x`, maximized over the family's per-point choices.
//! A child equal to `V` itself never limits the depth: a depth-`d` tree for
//! `V` can be hung below that edge whenever a depth-`d+1` root is being
//! built, so such children count as unbounded.
//!
//! The recursions are checked against brute-force enumeration in
//! [`tree`].

pub mod tree;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::model::{Instance, LabelId, NodeId, VersionSpace, BOTTOM};

use tree::{ShatteredTree, TreeEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionKind {
    Littlestone,
    IlBinary,
    IlMulticlass,
    Bil,
    Wil,
}

impl DimensionKind {
    pub const ALL: [DimensionKind; 5] = [
        DimensionKind::Littlestone,
        DimensionKind::IlBinary,
        DimensionKind::IlMulticlass,
        DimensionKind::Bil,
        DimensionKind::Wil,
    ];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DimensionKind::Littlestone => "littlestone",
            DimensionKind::IlBinary => "il-binary",
            DimensionKind::IlMulticlass => "il-multiclass",
            DimensionKind::Bil => "bil",
            DimensionKind::Wil => "wil",
        }
    }

    /// Whether the kind is defined on the instance's label space.
    pub fn applies_to(self, inst: &Instance) -> bool {
        !matches!(self, DimensionKind::IlBinary) || inst.is_binary()
    }
}

impl fmt::Display for DimensionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DimensionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DimensionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown dimension kind {s:?}")))
    }
}

const UNBOUNDED: i32 = i32::MAX / 2;

/// Largest value `m` such that two distinct entries are both `>= m`;
/// -1 when fewer than two entries exist.
fn second_largest(vals: impl IntoIterator<Item = i32>) -> i32 {
    let (mut a, mut b) = (-1, -1);
    for v in vals {
        if v > a {
            b = a;
            a = v;
        } else if v > b {
            b = v;
        }
    }
    b
}

/// Memoized dimension calculator for one instance. One cache per kind,
/// keyed on the member mask. Cheap to share behind an `Arc`; lookups take
/// a short lock and recursion never holds it.
#[derive(Debug)]
pub struct Dimensions {
    inst: Arc<Instance>,
    caches: [Mutex<HashMap<Mask, i32>>; 5],
}

impl Dimensions {
    pub fn new(inst: Arc<Instance>) -> Self {
        Dimensions {
            inst,
            caches: Default::default(),
        }
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.inst
    }

    pub fn ensure_applies(&self, kind: DimensionKind) -> Result<()> {
        if kind.applies_to(&self.inst) {
            Ok(())
        } else {
            Err(Error::SettingMismatch(format!(
                "{kind} needs exactly two labels, instance has {}",
                self.inst.num_labels()
            )))
        }
    }

    pub fn cached_entries(&self, kind: DimensionKind) -> usize {
        self.caches[kind.slot()].lock().unwrap().len()
    }

    pub fn ldim(&self, vs: &VersionSpace) -> i32 {
        self.dim(DimensionKind::Littlestone, vs)
    }

    /// Requires two labels.
    pub fn ildim_binary(&self, vs: &VersionSpace) -> i32 {
        self.dim(DimensionKind::IlBinary, vs)
    }

    pub fn ildim_multiclass(&self, vs: &VersionSpace) -> i32 {
        self.dim(DimensionKind::IlMulticlass, vs)
    }

    pub fn bildim(&self, vs: &VersionSpace) -> i32 {
        self.dim(DimensionKind::Bil, vs)
    }

    pub fn wildim(&self, vs: &VersionSpace) -> i32 {
        self.dim(DimensionKind::Wil, vs)
    }

    pub fn dim(&self, kind: DimensionKind, vs: &VersionSpace) -> i32 {
        if vs.is_empty() {
            return -1;
        }
        if let Some(&d) = self.caches[kind.slot()].lock().unwrap().get(vs.mask()) {
            return d;
        }
        let mut best = 0;
        for x in 0..self.inst.num_nodes() {
            let v = self.value_at(kind, vs, x, best);
            best = best.max(1 + v.min(UNBOUNDED - 1));
        }
        self.caches[kind.slot()]
            .lock()
            .unwrap()
            .insert(vs.mask().clone(), best);
        best
    }

    /// A tree of depth `dim(kind, vs)` shattered by `vs`, read off the
    /// recursion. `None` for the empty space. The tree has one branch per
    /// required edge, so its size is exponential in the depth.
    pub fn witness(&self, kind: DimensionKind, vs: &VersionSpace) -> Option<ShatteredTree> {
        if vs.is_empty() {
            return None;
        }
        let d = self.dim(kind, vs);
        Some(self.build(kind, vs, d))
    }

    fn build(&self, kind: DimensionKind, vs: &VersionSpace, depth: i32) -> ShatteredTree {
        if depth <= 0 {
            return ShatteredTree::Leaf;
        }
        let need = depth - 1;
        let x = (0..self.inst.num_nodes())
            .find(|&x| self.value_at(kind, vs, x, need) >= need)
            .expect("dimension is attained at some root");
        let inst = &*self.inst;
        let k = inst.num_labels();
        let ok = |c: &VersionSpace| !c.is_empty() && self.child(kind, vs, c) >= need;
        let mut edges: Vec<(NodeId, LabelId, VersionSpace)> = Vec::new();
        let pair = |edges: &mut Vec<_>, u: NodeId, labels: &mut dyn Iterator<Item = LabelId>| {
            let picked: Vec<_> = labels
                .map(|y| (u, y, inst.restrict(vs, u, y)))
                .filter(|(_, _, c)| ok(c))
                .take(2)
                .collect();
            debug_assert_eq!(picked.len(), 2);
            edges.extend(picked);
        };
        match kind {
            DimensionKind::Littlestone => pair(&mut edges, x, &mut (0..k)),
            DimensionKind::IlBinary => {
                edges.push((x, 1, inst.restrict(vs, x, 1)));
                for v in inst.neighbors(x) {
                    edges.push((v, 0, inst.restrict(vs, v, 0)));
                }
            }
            DimensionKind::IlMulticlass | DimensionKind::Wil => {
                pair(&mut edges, x, &mut (0..k));
                for v in inst.neighbors(x).filter(|&v| v != x) {
                    let single: Vec<LabelId> = if kind == DimensionKind::Wil {
                        inst.discouraging_labels(x, v)
                    } else {
                        vec![BOTTOM]
                    };
                    let one = single
                        .iter()
                        .map(|&y| (v, y, inst.restrict(vs, v, y)))
                        .find(|(_, _, c)| ok(c));
                    match one {
                        Some(e) => edges.push(e),
                        None => pair(&mut edges, v, &mut (0..k).filter(|y| !single.contains(y))),
                    }
                }
            }
            DimensionKind::Bil => {
                for y in 0..k {
                    edges.push((x, y, inst.restrict_not(vs, x, y)));
                }
                for v in inst.neighbors(x).filter(|&v| v != x) {
                    for y in 1..k {
                        edges.push((v, y, inst.restrict_not(vs, v, y)));
                    }
                }
            }
        }
        let edges = edges
            .into_iter()
            .map(|(point, label, c)| TreeEdge {
                point,
                label,
                child: self.build(kind, &c, need),
            })
            .collect();
        ShatteredTree::Node { x, edges }
    }

    /// Dimension of a child, unbounded if it is the parent itself.
    fn child(&self, kind: DimensionKind, parent: &VersionSpace, child: &VersionSpace) -> i32 {
        if child == parent {
            UNBOUNDED
        } else {
            self.dim(kind, child)
        }
    }

    /// Two distinct labels on `x` drawn from `labels`, both children at
    /// least the returned value.
    fn pair_value(
        &self,
        kind: DimensionKind,
        vs: &VersionSpace,
        x: NodeId,
        labels: impl Iterator<Item = LabelId>,
    ) -> i32 {
        let children: Vec<VersionSpace> = labels
            .map(|y| self.inst.restrict(vs, x, y))
            .filter(|c| !c.is_empty())
            .collect();
        if children.len() < 2 {
            return -1;
        }
        second_largest(children.iter().map(|c| self.dim(kind, c)))
    }

    /// Best achievable minimum child depth for a root at `x`. Returns early
    /// with any value `<= floor - 1` once the root cannot beat `floor`.
    fn value_at(&self, kind: DimensionKind, vs: &VersionSpace, x: NodeId, floor: i32) -> i32 {
        let inst = &*self.inst;
        let k = inst.num_labels();
        let beaten = |m: i32| m < floor;
        match kind {
            DimensionKind::Littlestone => self.pair_value(kind, vs, x, 0..k),
            DimensionKind::IlBinary => {
                let mut m = self.child(kind, vs, &inst.restrict(vs, x, 1));
                for v in inst.neighbors(x) {
                    if beaten(m) {
                        return m;
                    }
                    m = m.min(self.child(kind, vs, &inst.restrict(vs, v, 0)));
                }
                m
            }
            DimensionKind::IlMulticlass | DimensionKind::Wil => {
                let mut m = self.pair_value(kind, vs, x, 0..k);
                for v in inst.neighbors(x).filter(|&v| v != x) {
                    if beaten(m) {
                        return m;
                    }
                    let single: Vec<LabelId> = if kind == DimensionKind::Wil {
                        inst.discouraging_labels(x, v)
                    } else {
                        vec![BOTTOM]
                    };
                    let single_best = single
                        .iter()
                        .map(|&y| self.child(kind, vs, &inst.restrict(vs, v, y)))
                        .max()
                        .unwrap_or(-1);
                    let pair = self.pair_value(kind, vs, v, (0..k).filter(|y| !single.contains(y)));
                    m = m.min(single_best.max(pair));
                }
                m
            }
            DimensionKind::Bil => {
                let mut m = UNBOUNDED;
                for y in 0..k {
                    m = m.min(self.child(kind, vs, &inst.restrict_not(vs, x, y)));
                    if beaten(m) {
                        return m;
                    }
                }
                for v in inst.neighbors(x).filter(|&v| v != x) {
                    for y in 1..k {
                        m = m.min(self.child(kind, vs, &inst.restrict_not(vs, v, y)));
                        if beaten(m) {
                            return m;
                        }
                    }
                }
                m
            }
        }
    }
}
