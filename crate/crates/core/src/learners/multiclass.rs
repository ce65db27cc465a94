use std::sync::Arc;

use super::reduction::Expert;
use super::{label_from, last_publication, Feedback, FeedbackMode, Learner};
use crate::dimensions::{DimensionKind, Dimensions};
use crate::error::{Error, Result};
use crate::model::{LabelId, NodeId, VersionSpace, BOTTOM};
use crate::response::{Labeling, Publication};

/// Which branch of the three-way rule produced a publication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PublishCase {
    /// Some point's best restriction already loses dimension: it gets the
    /// top label.
    LowMax(NodeId),
    /// The best label at the original point is unique.
    UniqueAtOrigin(LabelId),
    /// A neighbor has a unique best label that pays for the move.
    UniqueAtNeighbor(NodeId, LabelId),
}

/// Full-feedback multiclass learner, unweighted (ILdim) or weighted
/// (WILdim). At most one point of the neighborhood is raised above the
/// bottom label, so the agent's destination is always known.
#[derive(Debug, Clone)]
pub struct MulticlassIsoa {
    dims: Arc<Dimensions>,
    kind: DimensionKind,
    vs: VersionSpace,
    last: Option<Publication>,
    last_case: Option<PublishCase>,
}

impl MulticlassIsoa {
    pub fn new(dims: Arc<Dimensions>) -> Self {
        Self::with_kind(dims, DimensionKind::IlMulticlass)
    }

    pub fn weighted(dims: Arc<Dimensions>) -> Self {
        Self::with_kind(dims, DimensionKind::Wil)
    }

    fn with_kind(dims: Arc<Dimensions>, kind: DimensionKind) -> Self {
        let vs = dims.instance().full();
        MulticlassIsoa {
            dims,
            kind,
            vs,
            last: None,
            last_case: None,
        }
    }

    pub fn with_version_space(mut self, vs: VersionSpace) -> Self {
        self.vs = vs;
        self
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.vs
    }

    pub fn kind(&self) -> DimensionKind {
        self.kind
    }

    pub fn last_case(&self) -> Option<PublishCase> {
        self.last_case
    }

    /// Labels attaining `max_y dim(V_{u,y})`, and that maximum.
    fn best_labels(&self, u: NodeId) -> (i32, Vec<LabelId>) {
        let inst = self.dims.instance();
        let vals: Vec<i32> = (0..inst.num_labels())
            .map(|y| self.dims.dim(self.kind, &inst.restrict(&self.vs, u, y)))
            .collect();
        let best = *vals.iter().max().expect("at least two labels");
        let arg = (0..vals.len()).filter(|&y| vals[y] == best).collect();
        (best, arg)
    }

    fn step(&self, x: NodeId) -> Result<(Publication, PublishCase)> {
        if self.vs.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        let inst = self.dims.instance();
        let d = self.dims.dim(self.kind, &self.vs);
        let nbrs: Vec<NodeId> = inst.neighbors(x).collect();
        let best: Vec<(NodeId, i32, Vec<LabelId>)> = nbrs
            .iter()
            .map(|&u| {
                let (m, arg) = self.best_labels(u);
                (u, m, arg)
            })
            .collect();

        if let Some((u, _, _)) = best.iter().find(|(_, m, _)| *m < d) {
            let top = inst.labels().top();
            return Ok((
                Publication::single(inst, x, *u, top),
                PublishCase::LowMax(*u),
            ));
        }
        let (_, _, at_x) = best.iter().find(|(u, _, _)| *u == x).expect("self-loop");
        if let [y] = at_x[..] {
            return Ok((
                Publication::single(inst, x, x, y),
                PublishCase::UniqueAtOrigin(y),
            ));
        }
        for (u, _, arg) in &best {
            if *u == x {
                continue;
            }
            if let [y] = arg[..] {
                let pays = match self.kind {
                    DimensionKind::Wil => !inst.discourages_move(x, *u, y),
                    _ => y != BOTTOM,
                };
                if pays {
                    return Ok((
                        Publication::single(inst, x, *u, y),
                        PublishCase::UniqueAtNeighbor(*u, y),
                    ));
                }
            }
        }
        Err(Error::Invariant(format!(
            "no publication rule applies at node {x} (dimension {d}, {} hypotheses); \
             the {} recursion and the learner disagree",
            self.vs.count(),
            self.kind
        )))
    }
}

impl Learner for MulticlassIsoa {
    fn name(&self) -> &'static str {
        match self.kind {
            DimensionKind::Wil => "weighted-isoa",
            _ => "multiclass-isoa",
        }
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Full
    }

    fn publish(&mut self, x: NodeId) -> Result<Publication> {
        let (p, case) = self.step(x)?;
        self.last = Some(p.clone());
        self.last_case = Some(case);
        Ok(p)
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<()> {
        let v = feedback.point();
        let predicted = last_publication(&self.last)?.label_at(v);
        let y = label_from(feedback, predicted, self.dims.instance().num_labels())?;
        if y != predicted {
            let next = self.dims.instance().restrict(&self.vs, v, y);
            if next.is_empty() {
                return Err(Error::EmptyVersionSpace);
            }
            self.vs = next;
        }
        Ok(())
    }

    fn dimension(&self) -> Option<i32> {
        Some(self.dims.dim(self.kind, &self.vs))
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        Some(self.vs.words().to_vec())
    }
}

impl Expert for MulticlassIsoa {
    fn vote(&mut self, x: NodeId) -> Result<Publication> {
        self.publish(x)
    }

    fn learn(&mut self, u: NodeId, y: LabelId) {
        self.vs = self.dims.instance().restrict(&self.vs, u, y);
    }

    fn is_consistent(&self) -> bool {
        !self.vs.is_empty()
    }

    fn expert_dimension(&self) -> i32 {
        self.dims.dim(self.kind, &self.vs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Instance;
    use crate::response::maximizers;

    fn learner(inst: Instance, weighted: bool) -> MulticlassIsoa {
        let dims = Arc::new(Dimensions::new(Arc::new(inst)));
        if weighted {
            MulticlassIsoa::weighted(dims)
        } else {
            MulticlassIsoa::new(dims)
        }
    }

    #[test]
    fn singleton_uses_unique_label_at_origin() {
        let inst = fixtures::f3();
        for h in 0..inst.num_hypotheses() {
            let mut l = learner(inst.clone(), false).with_version_space(inst.space_of([h]));
            for x in 0..inst.num_nodes() {
                let p = l.publish(x).unwrap();
                let v = maximizers(&inst, &p, x)[0];
                assert_eq!(p.label_at(v), inst.label_of(h, v));
            }
        }
    }

    #[test]
    fn low_max_at_origin_keeps_agent_in_place() {
        // two members that differ only on b: dimension 1, each split has 0
        let inst = fixtures::f3();
        let b = inst.node_index("b").unwrap();
        let vs = inst.space_of([0, 1]); // h00, h01: a fixed to z1, b varies
        let mut l = learner(inst.clone(), false).with_version_space(vs);
        let p = l.publish(b).unwrap();
        match l.last_case().unwrap() {
            PublishCase::LowMax(u) => {
                assert_eq!(u, b);
                assert_eq!(p.label_at(b), inst.labels().top());
                assert_eq!(maximizers(&inst, &p, b), vec![b]);
            }
            other => panic!("expected the low-max case, got {other:?}"),
        }
    }

    #[test]
    fn at_most_one_raised_point() {
        let inst = fixtures::f3();
        let mut l = learner(inst.clone(), false);
        for x in 0..inst.num_nodes() {
            let p = l.publish(x).unwrap();
            assert!(p.raised().count() <= 1);
        }
        let f4 = fixtures::f4();
        let mut w = learner(f4.clone(), true);
        for x in 0..f4.num_nodes() {
            let p = w.publish(x).unwrap();
            assert!(p.raised().count() <= 1);
        }
    }

    #[test]
    fn mistake_reduces_dimension() {
        let inst = fixtures::f3();
        let mut l = learner(inst.clone(), false);
        let d0 = l.dimension().unwrap();
        let a = inst.node_index("a").unwrap();
        let p = l.publish(a).unwrap();
        let v = maximizers(&inst, &p, a)[0];
        let wrong = (p.label_at(v) + 1) % 3;
        l.observe(&Feedback::Full { v, label: wrong }).unwrap();
        assert!(l.dimension().unwrap() < d0);
    }

    #[test]
    fn bandit_feedback_rejected_for_three_labels() {
        let inst = fixtures::f3();
        let mut l = learner(inst, false);
        l.publish(0).unwrap();
        assert!(matches!(
            l.observe(&Feedback::Bandit {
                v: 0,
                mistake: true
            }),
            Err(Error::SettingMismatch(_))
        ));
    }
}
