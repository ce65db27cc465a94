//! Online learners for the improvement protocol.
//!
//! Every learner receives the agent's original point, publishes a
//! hypothesis on its improvement set and then observes feedback. Full
//! feedback carries the true label of the agent's final point; bandit
//! feedback carries only the mistake bit.

mod baseline;
mod bisoa;
mod isoa;
mod multiclass;
mod reduction;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use baseline::{BaselineWrapper, ConstantPredictor, PlainLearner, Soa};
pub use bisoa::Bisoa;
pub use isoa::Isoa;
pub use multiclass::{MulticlassIsoa, PublishCase};
pub use reduction::{Expert, MistakeType, Reduction, WeightUpdate, DEFAULT_MAX_EXPERTS};

use crate::dimensions::Dimensions;
use crate::error::{Error, Result};
use crate::model::{Instance, LabelId, NodeId};
use crate::response::{Labeling, Publication};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackMode {
    Full,
    Bandit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    /// Final point of the agent and its true label.
    Full { v: NodeId, label: LabelId },
    /// Final point of the agent and whether the prediction there was wrong.
    Bandit { v: NodeId, mistake: bool },
}

impl Feedback {
    pub fn point(&self) -> NodeId {
        match *self {
            Feedback::Full { v, .. } | Feedback::Bandit { v, .. } => v,
        }
    }
}

pub trait Learner {
    fn name(&self) -> &'static str;

    fn feedback_mode(&self) -> FeedbackMode;

    fn publish(&mut self, x: NodeId) -> Result<Publication>;

    fn observe(&mut self, feedback: &Feedback) -> Result<()>;

    /// Dimension of the current version space, for learners that keep one.
    fn dimension(&self) -> Option<i32> {
        None
    }

    /// Summary of everything that influences future publications. Two
    /// learners of the same type with equal keys behave identically.
    fn state_key(&self) -> Option<Vec<u64>> {
        None
    }
}

/// Reads the true label out of feedback for a learner that predicted
/// `predicted` at the feedback point. A mistake bit only resolves the
/// label for two-label spaces.
fn label_from(feedback: &Feedback, predicted: LabelId, k: usize) -> Result<LabelId> {
    match *feedback {
        Feedback::Full { label, .. } => Ok(label),
        Feedback::Bandit { mistake: false, .. } => Ok(predicted),
        Feedback::Bandit { .. } if k == 2 => Ok(1 - predicted),
        Feedback::Bandit { .. } => Err(Error::SettingMismatch(
            "full-feedback learner received only a mistake bit".into(),
        )),
    }
}

fn last_publication(last: &Option<Publication>) -> Result<&Publication> {
    last.as_ref()
        .ok_or_else(|| Error::Invariant("feedback before any publication".into()))
}

/// Publishes a fixed hypothesis on every neighborhood and never learns.
#[derive(Debug, Clone)]
pub struct FixedLearner {
    inst: Arc<Instance>,
    labeling: Vec<LabelId>,
}

impl FixedLearner {
    pub fn new(inst: Arc<Instance>, labeling: Vec<LabelId>) -> Self {
        FixedLearner { inst, labeling }
    }

    /// Bottom label everywhere: the agent never moves.
    pub fn bottom(inst: Arc<Instance>) -> Self {
        let n = inst.num_nodes();
        FixedLearner::new(inst, vec![crate::model::BOTTOM; n])
    }
}

impl Learner for FixedLearner {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Full
    }

    fn publish(&mut self, x: NodeId) -> Result<Publication> {
        Ok(Publication::restrict(&self.inst, x, &self.labeling))
    }

    fn observe(&mut self, _feedback: &Feedback) -> Result<()> {
        Ok(())
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        Some(Vec::new())
    }
}

impl Labeling for FixedLearner {
    fn label_at(&self, v: NodeId) -> LabelId {
        self.labeling[v]
    }
}

/// Learners selectable by name, for the CLI and bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Isoa,
    MulticlassIsoa,
    WeightedIsoa,
    Bisoa,
    Reduction,
    BaselineSoa,
    Bottom,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::Isoa,
        LearnerKind::MulticlassIsoa,
        LearnerKind::WeightedIsoa,
        LearnerKind::Bisoa,
        LearnerKind::Reduction,
        LearnerKind::BaselineSoa,
        LearnerKind::Bottom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Isoa => "isoa",
            LearnerKind::MulticlassIsoa => "multiclass-isoa",
            LearnerKind::WeightedIsoa => "weighted-isoa",
            LearnerKind::Bisoa => "bisoa",
            LearnerKind::Reduction => "reduction",
            LearnerKind::BaselineSoa => "baseline-soa",
            LearnerKind::Bottom => "bottom",
        }
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown learner {s:?}")))
    }
}

/// Options that only some learners read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct LearnerOptions {
    /// Apply the reduction's second update branch at the original point
    /// instead of the agent's final point.
    pub reduction_update_at_origin: bool,
    pub max_experts: usize,
}

impl Default for LearnerOptions {
    fn default() -> Self {
        LearnerOptions {
            reduction_update_at_origin: false,
            max_experts: DEFAULT_MAX_EXPERTS,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AnyLearner {
    Isoa(Isoa),
    Multiclass(MulticlassIsoa),
    Bisoa(Bisoa),
    Reduction(Reduction<MulticlassIsoa>),
    Baseline(BaselineWrapper<Soa>),
    Fixed(FixedLearner),
}

impl AnyLearner {
    pub fn build(kind: LearnerKind, dims: Arc<Dimensions>, opts: LearnerOptions) -> Result<Self> {
        let inst = dims.instance().clone();
        Ok(match kind {
            LearnerKind::Isoa => AnyLearner::Isoa(Isoa::new(dims)?),
            LearnerKind::MulticlassIsoa => AnyLearner::Multiclass(MulticlassIsoa::new(dims)),
            LearnerKind::WeightedIsoa => AnyLearner::Multiclass(MulticlassIsoa::weighted(dims)),
            LearnerKind::Bisoa => AnyLearner::Bisoa(Bisoa::new(dims)),
            LearnerKind::Reduction => AnyLearner::Reduction(
                Reduction::new(inst, MulticlassIsoa::new(dims))
                    .update_at_origin(opts.reduction_update_at_origin)
                    .max_experts(opts.max_experts),
            ),
            LearnerKind::BaselineSoa => {
                AnyLearner::Baseline(BaselineWrapper::new(inst, Soa::new(dims)))
            }
            LearnerKind::Bottom => AnyLearner::Fixed(FixedLearner::bottom(inst)),
        })
    }

    fn inner(&self) -> &dyn Learner {
        match self {
            AnyLearner::Isoa(l) => l,
            AnyLearner::Multiclass(l) => l,
            AnyLearner::Bisoa(l) => l,
            AnyLearner::Reduction(l) => l,
            AnyLearner::Baseline(l) => l,
            AnyLearner::Fixed(l) => l,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Learner {
        match self {
            AnyLearner::Isoa(l) => l,
            AnyLearner::Multiclass(l) => l,
            AnyLearner::Bisoa(l) => l,
            AnyLearner::Reduction(l) => l,
            AnyLearner::Baseline(l) => l,
            AnyLearner::Fixed(l) => l,
        }
    }
}

impl Learner for AnyLearner {
    fn name(&self) -> &'static str {
        self.inner().name()
    }

    fn feedback_mode(&self) -> FeedbackMode {
        self.inner().feedback_mode()
    }

    fn publish(&mut self, x: NodeId) -> Result<Publication> {
        self.inner_mut().publish(x)
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<()> {
        self.inner_mut().observe(feedback)
    }

    fn dimension(&self) -> Option<i32> {
        self.inner().dimension()
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        self.inner().state_key()
    }
}
