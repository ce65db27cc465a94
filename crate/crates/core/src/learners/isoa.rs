use std::sync::Arc;

use super::{label_from, last_publication, Feedback, FeedbackMode, Learner};
use crate::dimensions::{DimensionKind, Dimensions};
use crate::error::{Error, Result};
use crate::model::{NodeId, VersionSpace};
use crate::response::{Labeling, Publication};

/// Binary improvement learner.
///
/// Predicts 1 exactly on the points whose 0-restriction loses dimension.
/// When the agent could move to several such points, all but the smallest
/// are lowered to 0 so the destination is known.
#[derive(Debug, Clone)]
pub struct Isoa {
    dims: Arc<Dimensions>,
    vs: VersionSpace,
    last: Option<Publication>,
}

impl Isoa {
    pub fn new(dims: Arc<Dimensions>) -> Result<Self> {
        dims.ensure_applies(DimensionKind::IlBinary)?;
        let vs = dims.instance().full();
        Ok(Isoa {
            dims,
            vs,
            last: None,
        })
    }

    pub fn with_version_space(mut self, vs: VersionSpace) -> Self {
        self.vs = vs;
        self
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.vs
    }

    fn step(&self, x: NodeId) -> Result<Publication> {
        if self.vs.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        let inst = self.dims.instance();
        let d = self.dims.ildim_binary(&self.vs);
        let mut publ = Publication {
            x,
            labels: inst
                .neighbors(x)
                .map(|u| {
                    let lowered = self.dims.ildim_binary(&inst.restrict(&self.vs, u, 0));
                    (u, usize::from(lowered < d))
                })
                .collect(),
        };
        if publ.label_at(x) == 0 {
            let positive: Vec<NodeId> = publ.raised().collect();
            if let Some((&keep, rest)) = positive.split_first() {
                for &u in rest {
                    publ.set(u, 0);
                }
                debug_assert_eq!(publ.raised().collect::<Vec<_>>(), vec![keep]);
            }
        }
        Ok(publ)
    }
}

impl Learner for Isoa {
    fn name(&self) -> &'static str {
        "isoa"
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Full
    }

    fn publish(&mut self, x: NodeId) -> Result<Publication> {
        let p = self.step(x)?;
        self.last = Some(p.clone());
        Ok(p)
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<()> {
        let v = feedback.point();
        let predicted = last_publication(&self.last)?.label_at(v);
        let y = label_from(feedback, predicted, 2)?;
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
        Some(self.dims.ildim_binary(&self.vs))
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        Some(self.vs.words().to_vec())
    }
}
