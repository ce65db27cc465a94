use std::sync::Arc;

use super::{label_from, last_publication, Feedback, FeedbackMode, Learner};
use crate::dimensions::Dimensions;
use crate::error::{Error, Result};
use crate::model::{Instance, LabelId, NodeId, VersionSpace};
use crate::response::{Labeling, Publication};

/// Online learner for the classic protocol where points never move.
pub trait PlainLearner {
    fn name(&self) -> &'static str;

    fn predict(&mut self, x: NodeId) -> Result<LabelId>;

    /// True label of `x`, revealed after every prediction.
    fn update(&mut self, x: NodeId, y: LabelId) -> Result<()>;

    fn dimension(&self) -> Option<i32> {
        None
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        None
    }
}

/// Standard optimal algorithm: predict the label whose restriction keeps
/// the largest Littlestone dimension.
#[derive(Debug, Clone)]
pub struct Soa {
    dims: Arc<Dimensions>,
    vs: VersionSpace,
}

impl Soa {
    pub fn new(dims: Arc<Dimensions>) -> Self {
        let vs = dims.instance().full();
        Soa { dims, vs }
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.vs
    }
}

impl PlainLearner for Soa {
    fn name(&self) -> &'static str {
        "soa"
    }

    fn predict(&mut self, x: NodeId) -> Result<LabelId> {
        if self.vs.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        let inst = self.dims.instance();
        let best = (0..inst.num_labels())
            .map(|y| (self.dims.ldim(&inst.restrict(&self.vs, x, y)), y))
            // largest dimension, then smallest label
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .expect("nonempty label space");
        Ok(best.1)
    }

    fn update(&mut self, x: NodeId, y: LabelId) -> Result<()> {
        let next = self.dims.instance().restrict(&self.vs, x, y);
        if next.is_empty() {
            return Err(Error::EmptyVersionSpace);
        }
        self.vs = next;
        Ok(())
    }

    fn dimension(&self) -> Option<i32> {
        Some(self.dims.ldim(&self.vs))
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        Some(self.vs.words().to_vec())
    }
}

/// Predicts one label everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub LabelId);

impl PlainLearner for ConstantPredictor {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn predict(&mut self, _x: NodeId) -> Result<LabelId> {
        Ok(self.0)
    }

    fn update(&mut self, _x: NodeId, _y: LabelId) -> Result<()> {
        Ok(())
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        Some(Vec::new())
    }
}

/// Runs a plain learner under improvements by publishing its prediction at
/// the original point and the bottom label on every other neighbor. Moving
/// never pays, so the agent stays and the plain learner sees its usual game.
#[derive(Debug, Clone)]
pub struct BaselineWrapper<A> {
    inst: Arc<Instance>,
    inner: A,
    last: Option<Publication>,
}

impl<A: PlainLearner> BaselineWrapper<A> {
    pub fn new(inst: Arc<Instance>, inner: A) -> Self {
        BaselineWrapper {
            inst,
            inner,
            last: None,
        }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: PlainLearner> Learner for BaselineWrapper<A> {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Full
    }

    fn publish(&mut self, x: NodeId) -> Result<Publication> {
        let y = self.inner.predict(x)?;
        let p = Publication::single(&self.inst, x, x, y);
        self.last = Some(p.clone());
        Ok(p)
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<()> {
        let v = feedback.point();
        let published = last_publication(&self.last)?;
        if v != published.x {
            return Err(Error::Invariant(format!(
                "agent moved from {} to {v} under the baseline publication",
                published.x
            )));
        }
        let y = label_from(feedback, published.label_at(v), self.inst.num_labels())?;
        self.inner.update(v, y)
    }

    fn dimension(&self) -> Option<i32> {
        self.inner.dimension()
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        self.inner.state_key()
    }
}
