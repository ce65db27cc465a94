//! Agent best response to a published hypothesis.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, LabelId, NodeId, BOTTOM, GAIN_EPS};

/// Anything that assigns a label to every node.
pub trait Labeling {
    fn label_at(&self, v: NodeId) -> LabelId;
}

impl Labeling for [LabelId] {
    fn label_at(&self, v: NodeId) -> LabelId {
        self[v]
    }
}

impl Labeling for Vec<LabelId> {
    fn label_at(&self, v: NodeId) -> LabelId {
        self[v]
    }
}

/// A hypothesis materialized on `Δ(x)` only; every other node reads as
/// the bottom label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Publication {
    pub x: NodeId,
    pub labels: Vec<(NodeId, LabelId)>,
}

impl Publication {
    /// Bottom label on the whole neighborhood.
    pub fn bottom(inst: &Instance, x: NodeId) -> Self {
        Publication {
            x,
            labels: inst.neighbors(x).map(|v| (v, BOTTOM)).collect(),
        }
    }

    /// Bottom everywhere on `Δ(x)` except `y` at `at`.
    pub fn single(inst: &Instance, x: NodeId, at: NodeId, y: LabelId) -> Self {
        Publication {
            x,
            labels: inst
                .neighbors(x)
                .map(|v| (v, if v == at { y } else { BOTTOM }))
                .collect(),
        }
    }

    /// Restriction of a full labeling to `Δ(x)`.
    pub fn restrict(inst: &Instance, x: NodeId, h: &(impl Labeling + ?Sized)) -> Self {
        Publication {
            x,
            labels: inst.neighbors(x).map(|v| (v, h.label_at(v))).collect(),
        }
    }

    pub fn set(&mut self, v: NodeId, y: LabelId) {
        if let Some(slot) = self.labels.iter_mut().find(|(u, _)| *u == v) {
            slot.1 = y;
        }
    }

    /// Nodes of the neighborhood carrying a label above the bottom.
    pub fn raised(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.labels
            .iter()
            .filter(|(_, y)| *y != BOTTOM)
            .map(|(v, _)| *v)
    }
}

impl Labeling for Publication {
    fn label_at(&self, v: NodeId) -> LabelId {
        self.labels
            .iter()
            .find(|(u, _)| *u == v)
            .map_or(BOTTOM, |(_, y)| *y)
    }
}

/// `val(h(v)) - val(h(x)) - cost(x, v)`.
pub fn gain(inst: &Instance, h: &(impl Labeling + ?Sized), x: NodeId, v: NodeId) -> Result<f64> {
    let cost = inst.cost(x, v).ok_or(Error::NotANeighbor { x, v })?;
    let vals = inst.labels();
    Ok(vals.value(h.label_at(v)) - vals.value(h.label_at(x)) - cost)
}

/// All gain-maximizing destinations, or `[x]` if no move has strictly
/// positive gain.
pub fn maximizers(inst: &Instance, h: &(impl Labeling + ?Sized), x: NodeId) -> Vec<NodeId> {
    let vals = inst.labels();
    let base = vals.value(h.label_at(x));
    let gains: Vec<(NodeId, f64)> = inst
        .graph()
        .edges(x)
        .iter()
        .map(|e| (e.to, vals.value(h.label_at(e.to)) - base - e.cost))
        .collect();
    let best = gains.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
    if best <= GAIN_EPS {
        return vec![x];
    }
    gains
        .into_iter()
        .filter(|&(_, g)| g >= best - GAIN_EPS)
        .map(|(v, _)| v)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Every maximizer is returned; the caller branches over them.
    Adversarial,
    #[default]
    LexicographicMin,
    SeededRandom(u64),
}

/// Resolves ties among maximizers according to a [`TiePolicy`].
#[derive(Debug, Clone)]
pub struct TieBreaker {
    policy: TiePolicy,
    rng: Option<ChaCha8Rng>,
}

impl TieBreaker {
    pub fn new(policy: TiePolicy) -> Self {
        let rng = match policy {
            TiePolicy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        TieBreaker { policy, rng }
    }

    pub fn policy(&self) -> TiePolicy {
        self.policy
    }

    pub fn resolve(&mut self, mut tied: Vec<NodeId>) -> Vec<NodeId> {
        match self.policy {
            TiePolicy::Adversarial => tied,
            TiePolicy::LexicographicMin => {
                tied.sort_unstable();
                tied.truncate(1);
                tied
            }
            TiePolicy::SeededRandom(_) => {
                let rng = self.rng.as_mut().expect("seeded policy has an rng");
                vec![*tied.choose(rng).expect("maximizer set is nonempty")]
            }
        }
    }
}

/// Best response of the agent at `x`. A single node for the deterministic
/// policies; the full maximizer set under [`TiePolicy::Adversarial`].
pub fn best_response(
    inst: &Instance,
    h: &(impl Labeling + ?Sized),
    x: NodeId,
    ties: &mut TieBreaker,
) -> Vec<NodeId> {
    ties.resolve(maximizers(inst, h, x))
}

/// `Δ⁺(h, x)` and `Δ⁻(h, x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImprovementTargets {
    pub positive: Vec<NodeId>,
    pub negative: Vec<NodeId>,
}

pub fn improvement_targets(
    inst: &Instance,
    h: &(impl Labeling + ?Sized),
    x: NodeId,
) -> ImprovementTargets {
    let (negative, positive) = inst.neighbors(x).partition(|&v| h.label_at(v) == BOTTOM);
    ImprovementTargets { positive, negative }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn gain_examples() {
        let f1 = fixtures::f1();
        let h = vec![0, 1];
        assert_eq!(gain(&f1, &h, 0, 0).unwrap(), 0.0);
        assert_eq!(gain(&f1, &h, 0, 1).unwrap(), 1.0);
        assert!(matches!(
            gain(&f1, &h, 1, 0),
            Err(Error::NotANeighbor { .. })
        ));

        let f4 = fixtures::f4();
        assert!((gain(&f4, &vec![0, 1], 0, 1).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn best_response_examples() {
        let f1 = fixtures::f1();
        let mut lex = TieBreaker::new(TiePolicy::LexicographicMin);
        assert_eq!(best_response(&f1, &vec![0, 0], 0, &mut lex), vec![0]);
        assert_eq!(best_response(&f1, &vec![0, 1], 0, &mut lex), vec![1]);
        // already on the top label: no strictly positive gain
        assert_eq!(best_response(&f1, &vec![1, 1], 0, &mut lex), vec![0]);

        let f4 = fixtures::f4();
        assert_eq!(best_response(&f4, &vec![0, 1], 0, &mut lex), vec![0]);
        assert_eq!(best_response(&f4, &vec![0, 2], 0, &mut lex), vec![1]);
    }

    #[test]
    fn ties_follow_policy() {
        let g = crate::model::ImprovementGraph::unweighted(
            vec!["x".into(), "u".into(), "w".into()],
            &[(0, 1), (0, 2)],
        );
        let inst = Instance::new(
            g,
            crate::model::LabelSpace::binary(),
            vec![crate::model::Hypothesis::total("h", vec![0, 1, 1])],
        )
        .unwrap();
        let h = vec![0, 1, 1];
        let mut adv = TieBreaker::new(TiePolicy::Adversarial);
        assert_eq!(best_response(&inst, &h, 0, &mut adv), vec![1, 2]);
        let mut lex = TieBreaker::new(TiePolicy::LexicographicMin);
        assert_eq!(best_response(&inst, &h, 0, &mut lex), vec![1]);
        let picks = |seed| {
            let mut r = TieBreaker::new(TiePolicy::SeededRandom(seed));
            (0..16)
                .map(|_| best_response(&inst, &h, 0, &mut r)[0])
                .collect::<Vec<_>>()
        };
        assert_eq!(picks(7), picks(7));
        assert!(picks(7).iter().all(|v| [1, 2].contains(v)));
    }

    #[test]
    fn targets_examples() {
        let f1 = fixtures::f1();
        let t = improvement_targets(&f1, &vec![0, 1], 0);
        assert_eq!(t.positive, vec![1]);
        assert_eq!(t.negative, vec![0]);
        assert!(improvement_targets(&f1, &vec![0, 0], 0).positive.is_empty());
        assert_eq!(improvement_targets(&f1, &vec![0, 1], 1).positive, vec![1]);
    }

    #[test]
    fn publication_reads_bottom_outside_neighborhood() {
        let f1 = fixtures::f1();
        let p = Publication::single(&f1, 1, 1, 1);
        assert_eq!(p.label_at(1), 1);
        assert_eq!(p.label_at(0), BOTTOM);
    }

    /// Binary unweighted best response against the two-case definition.
    fn reference_moves(inst: &Instance, h: &[usize], x: NodeId) -> Vec<NodeId> {
        let plus: Vec<NodeId> = inst.neighbors(x).filter(|&v| h[v] == 1).collect();
        if h[x] == 0 && !plus.is_empty() {
            plus
        } else {
            vec![x]
        }
    }

    fn small_binary_instance() -> impl Strategy<Value = (Instance, Vec<usize>)> {
        (2usize..7)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec((0..n, 0..n), 0..12),
                    proptest::collection::vec(0usize..2, n),
                )
            })
            .prop_map(|(n, arcs, h)| {
                let names = (0..n).map(|i| format!("n{i}")).collect();
                let arcs: Vec<_> = {
                    let mut a: Vec<_> = arcs.into_iter().filter(|(u, v)| u != v).collect();
                    a.sort_unstable();
                    a.dedup();
                    a
                };
                let g = crate::model::ImprovementGraph::unweighted(names, &arcs);
                let inst = Instance::new(
                    g,
                    crate::model::LabelSpace::binary(),
                    vec![crate::model::Hypothesis::total("h", h.clone())],
                )
                .unwrap();
                (inst, h)
            })
    }

    proptest! {
        #[test]
        fn binary_best_response_matches_definition((inst, h) in small_binary_instance()) {
            for x in 0..inst.num_nodes() {
                let mut got = maximizers(&inst, &h, x);
                got.sort_unstable();
                prop_assert_eq!(got.clone(), reference_moves(&inst, &h, x));
                for &v in &got {
                    let gv = gain(&inst, &h, x, v).unwrap();
                    for u in inst.neighbors(x) {
                        prop_assert!(gv >= gain(&inst, &h, x, u).unwrap() - 1e-12);
                    }
                    if v != x { prop_assert!(gv > 0.0); }
                }
                let constant = vec![h[x]; inst.num_nodes()];
                prop_assert_eq!(maximizers(&inst, &constant, x), vec![x]);
            }
        }
    }
}
