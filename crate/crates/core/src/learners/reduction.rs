//! Bandit-to-full-feedback reduction: a weighted pool of full-feedback
//! experts, each branch guessing one possible true label per mistake.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Feedback, FeedbackMode, Learner};
use crate::error::{Error, Result};
use crate::model::{Instance, LabelId, NodeId, BOTTOM};
use crate::response::{Labeling, Publication};

/// Upper bound on the number of live experts before the reduction gives up.
pub const DEFAULT_MAX_EXPERTS: usize = 100_000;

/// A full-feedback learner that can be cloned into the pool and told a
/// (point, true label) pair directly.
pub trait Expert: Learner + Clone {
    /// Publication this expert would make on `x`.
    fn vote(&mut self, x: NodeId) -> Result<Publication>;

    /// Incorporate `y` as the true label of `u`.
    fn learn(&mut self, u: NodeId, y: LabelId);

    /// False once the expert's guesses contradict every hypothesis.
    fn is_consistent(&self) -> bool;

    fn expert_dimension(&self) -> i32;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MistakeType {
    /// All-bottom publication and the agent stayed.
    Stationary,
    /// Some point was raised, or the agent moved.
    Raised,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightUpdate {
    pub kind: MistakeType,
    pub before: f64,
    pub after: f64,
}

impl WeightUpdate {
    pub fn factor(&self) -> f64 {
        self.after / self.before
    }
}

#[derive(Debug, Clone)]
struct Member<E> {
    expert: E,
    weight: f64,
    history: Vec<(NodeId, LabelId)>,
}

#[derive(Debug, Clone)]
pub struct Reduction<E: Expert> {
    inst: Arc<Instance>,
    pool: Vec<Member<E>>,
    /// Votes of each member in the current round, aligned with `pool`.
    votes: Vec<Publication>,
    last: Option<Publication>,
    update_at_origin: bool,
    max_experts: usize,
    updates: Vec<WeightUpdate>,
}

impl<E: Expert> Reduction<E> {
    pub fn new(inst: Arc<Instance>, expert: E) -> Self {
        Reduction {
            inst,
            pool: vec![Member {
                expert,
                weight: 1.0,
                history: Vec::new(),
            }],
            votes: Vec::new(),
            last: None,
            update_at_origin: false,
            max_experts: DEFAULT_MAX_EXPERTS,
            updates: Vec::new(),
        }
    }

    /// Spawn children of the second mistake type from the original point
    /// rather than the agent's final point, as the pseudocode literally reads.
    pub fn update_at_origin(mut self, on: bool) -> Self {
        self.update_at_origin = on;
        self
    }

    pub fn max_experts(mut self, n: usize) -> Self {
        self.max_experts = n;
        self
    }

    pub fn total_weight(&self) -> f64 {
        self.pool.iter().map(|m| m.weight).sum()
    }

    pub fn num_experts(&self) -> usize {
        self.pool.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.pool.iter().map(|m| m.weight)
    }

    pub fn histories(&self) -> impl Iterator<Item = &[(NodeId, LabelId)]> {
        self.pool.iter().map(|m| m.history.as_slice())
    }

    pub fn weight_updates(&self) -> &[WeightUpdate] {
        &self.updates
    }

    /// `w(E) / (k (Δ_G + 1))`.
    pub fn threshold(&self) -> f64 {
        let k = self.inst.num_labels() as f64;
        let deg = self.inst.max_degree() as f64;
        self.total_weight() / (k * (deg + 1.0))
    }

    fn step(&mut self, x: NodeId) -> Result<Publication> {
        if self.pool.is_empty() {
            return Err(Error::Invariant("reduction expert pool is empty".into()));
        }
        self.votes = self
            .pool
            .iter_mut()
            .map(|m| m.expert.vote(x))
            .collect::<Result<_>>()?;
        let k = self.inst.num_labels();
        let threshold = self.threshold();
        for u in self.inst.neighbors(x) {
            let mut mass = vec![0.0; k];
            for (m, vote) in self.pool.iter().zip(&self.votes) {
                mass[vote.label_at(u)] += m.weight;
            }
            // lowest label wins among equal weights
            let (y, w) = (1..k).fold((BOTTOM, f64::NEG_INFINITY), |best, y| {
                if mass[y] > best.1 {
                    (y, mass[y])
                } else {
                    best
                }
            });
            if w >= threshold {
                return Ok(Publication::single(&self.inst, x, u, y));
            }
        }
        Ok(Publication::bottom(&self.inst, x))
    }

    fn update(&mut self, published: &Publication, v: NodeId) -> Result<()> {
        let x = published.x;
        let before = self.total_weight();
        let predicted = published.label_at(v);
        let stationary = v == x && published.raised().next().is_none();
        let (kind, at, excluded): (_, NodeId, LabelId) = if stationary {
            (MistakeType::Stationary, x, BOTTOM)
        } else if self.update_at_origin {
            (MistakeType::Raised, x, predicted)
        } else {
            (MistakeType::Raised, v, predicted)
        };
        let k = self.inst.num_labels();
        let child_weight = |w: f64| w / (2.0 * (k as f64 - 1.0));

        let old = std::mem::take(&mut self.pool);
        let votes = std::mem::take(&mut self.votes);
        let mut next: Vec<Member<E>> = Vec::with_capacity(old.len());
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut push = |next: &mut Vec<Member<E>>, m: Member<E>| {
            if !m.expert.is_consistent() {
                return;
            }
            // experts in the same state behave identically; pool them
            if let Some(key) = m.expert.state_key() {
                if let Some(&i) = index.get(&key) {
                    next[i].weight += m.weight;
                    return;
                }
                index.insert(key, next.len());
            }
            next.push(m);
        };
        for (m, vote) in old.into_iter().zip(votes) {
            let matches = if stationary {
                vote.raised().next().is_none()
            } else {
                vote.label_at(v) == predicted
            };
            if !matches {
                push(&mut next, m);
                continue;
            }
            for y in (0..k).filter(|&y| y != excluded) {
                let mut child = m.clone();
                child.expert.learn(at, y);
                child.weight = child_weight(m.weight);
                child.history.push((at, y));
                push(&mut next, child);
            }
        }
        if next.len() > self.max_experts {
            return Err(Error::ResourceLimit(format!(
                "reduction pool grew to {} experts (limit {})",
                next.len(),
                self.max_experts
            )));
        }
        self.pool = next;
        self.updates.push(WeightUpdate {
            kind,
            before,
            after: self.total_weight(),
        });
        Ok(())
    }
}

impl<E: Expert> Learner for Reduction<E> {
    fn name(&self) -> &'static str {
        "reduction"
    }

    fn feedback_mode(&self) -> FeedbackMode {
        FeedbackMode::Bandit
    }

    fn publish(&mut self, x: NodeId) -> Result<Publication> {
        let p = self.step(x)?;
        self.last = Some(p.clone());
        Ok(p)
    }

    fn observe(&mut self, feedback: &Feedback) -> Result<()> {
        let Feedback::Bandit { v, mistake } = *feedback else {
            return Err(Error::SettingMismatch(
                "bandit learner was handed a true label".into(),
            ));
        };
        let published = super::last_publication(&self.last)?.clone();
        if mistake {
            self.update(&published, v)?;
        }
        Ok(())
    }

    fn state_key(&self) -> Option<Vec<u64>> {
        let mut parts: Vec<Vec<u64>> = Vec::with_capacity(self.pool.len());
        for m in &self.pool {
            let mut part = m.expert.state_key()?;
            part.push(m.weight.to_bits());
            parts.push(part);
        }
        parts.sort();
        let mut key = Vec::new();
        for p in parts {
            key.push(p.len() as u64);
            key.extend(p);
        }
        Some(key)
    }
}
