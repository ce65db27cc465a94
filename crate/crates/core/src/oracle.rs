//! Exact game values by brute force.
//!
//! The solver plays every deterministic learner at once: at each version
//! space it lets the environment pick the point, the learner pick any
//! labeling of the improvement set, the agent break ties against the
//! learner, and the environment pick any realizable answer. It shares no
//! code with the dimension recursions, so agreement between the two is an
//! independent check of the characterization.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dimensions::Dimensions;
use crate::engine::Setting;
use crate::error::{Error, Result};
use crate::learners::FeedbackMode;
use crate::mask::Mask;
use crate::model::{HypId, Instance, NodeId, VersionSpace};
use crate::response::{maximizers, Labeling, Publication};

/// Memo entries allowed before the solver gives up. Overridable through
/// the `IMPROVE_MEMO_LIMIT` environment variable.
pub const DEFAULT_MEMO_LIMIT: usize = 2_000_000;

/// Largest number of publications enumerated at one point.
pub const MAX_PUBLICATIONS: usize = 1 << 16;

const INF: u32 = u32::MAX;

fn memo_limit() -> usize {
    std::env::var("IMPROVE_MEMO_LIMIT")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_MEMO_LIMIT)
}

pub struct GameSolver<'a> {
    inst: &'a Instance,
    mode: FeedbackMode,
    memo: HashMap<Mask, u32>,
    limit: usize,
}

impl<'a> GameSolver<'a> {
    pub fn new(inst: &'a Instance, setting: Setting) -> Result<Self> {
        setting.check(inst)?;
        Ok(GameSolver {
            inst,
            mode: setting.feedback_mode(),
            memo: HashMap::new(),
            limit: memo_limit(),
        })
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    /// Mistakes an optimal environment forces on an optimal learner that
    /// starts from `vs`; -1 for the empty space.
    pub fn value(&mut self, vs: &VersionSpace) -> Result<i32> {
        if vs.is_empty() {
            return Ok(-1);
        }
        Ok(self.solve(vs)? as i32)
    }

    /// Every version space solved so far with its value.
    pub fn solved(&self) -> impl Iterator<Item = (&Mask, u32)> {
        self.memo.iter().map(|(m, &v)| (m, v))
    }

    fn child_value(
        &mut self,
        parent: &VersionSpace,
        child: VersionSpace,
        mistake: bool,
    ) -> Result<u32> {
        if child == *parent {
            // the answer teaches nothing: repeating it forever is free
            // for the environment, so a mistake here is unbounded
            return Ok(if mistake { INF } else { 0 });
        }
        Ok(u32::from(mistake) + self.solve(&child)?)
    }

    /// Worst case over the agent's tied destinations and the answers,
    /// stopping once `cutoff` is reached.
    fn publication_value(
        &mut self,
        vs: &VersionSpace,
        p: &Publication,
        cutoff: u32,
    ) -> Result<u32> {
        let inst = self.inst;
        let mut worst = 0;
        for v in maximizers(inst, p, p.x) {
            let pred = p.label_at(v);
            let answers: Vec<(VersionSpace, bool)> = match self.mode {
                FeedbackMode::Full => (0..inst.num_labels())
                    .map(|y| (inst.restrict(vs, v, y), y != pred))
                    .collect(),
                FeedbackMode::Bandit => vec![
                    (inst.restrict_not(vs, v, pred), true),
                    (inst.restrict(vs, v, pred), false),
                ],
            };
            for (child, mistake) in answers {
                if child.is_empty() {
                    continue;
                }
                worst = worst.max(self.child_value(vs, child, mistake)?);
                if worst >= cutoff {
                    return Ok(worst);
                }
            }
        }
        Ok(worst)
    }

    fn point_value(&mut self, vs: &VersionSpace, x: NodeId, floor: u32) -> Result<u32> {
        let inst = self.inst;
        let nbrs: Vec<NodeId> = inst.neighbors(x).collect();
        let k = inst.num_labels();
        let total = (k as u128).pow(nbrs.len() as u32);
        if total > MAX_PUBLICATIONS as u128 {
            return Err(Error::ResourceLimit(format!(
                "{total} publications at node {} (limit {MAX_PUBLICATIONS})",
                inst.node_name(x)
            )));
        }
        let mut best = INF;
        for code in 0..total as usize {
            let mut c = code;
            let labels = nbrs
                .iter()
                .map(|&u| {
                    let y = c % k;
                    c /= k;
                    (u, y)
                })
                .collect();
            let p = Publication { x, labels };
            best = best.min(self.publication_value(vs, &p, best)?);
            if best <= floor {
                break;
            }
        }
        Ok(best)
    }

    fn solve(&mut self, vs: &VersionSpace) -> Result<u32> {
        if let Some(&v) = self.memo.get(vs.mask()) {
            return Ok(v);
        }
        let mut best = 0;
        for x in 0..self.inst.num_nodes() {
            best = best.max(self.point_value(vs, x, best)?);
        }
        if self.memo.len() >= self.limit {
            return Err(Error::ResourceLimit(format!(
                "game solver memo reached {} entries; raise IMPROVE_MEMO_LIMIT",
                self.limit
            )));
        }
        self.memo.insert(vs.mask().clone(), best);
        Ok(best)
    }
}

/// Game value of the whole class.
pub fn minimax_value(inst: &Instance, setting: Setting) -> Result<i32> {
    GameSolver::new(inst, setting)?.value(&inst.full())
}

/// Smallest solved version space whose game value and dimension differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub members: Vec<HypId>,
    pub value: i32,
    pub dim: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub setting: Setting,
    pub value: i32,
    pub dim: i32,
    pub counterexample: Option<Counterexample>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.value == self.dim
    }
}

/// Compares the game value with the setting's dimension on the whole
/// class and, on disagreement, on every version space the solver visited.
pub fn certify_dimension(dims: &Dimensions, setting: Setting) -> Result<Certificate> {
    let inst = &**dims.instance();
    let kind = setting.dimension_kind();
    dims.ensure_applies(kind)?;
    let mut solver = GameSolver::new(inst, setting)?;
    let full = inst.full();
    let value = solver.value(&full)?;
    let dim = dims.dim(kind, &full);
    let counterexample = if value == dim {
        None
    } else {
        solver
            .solved()
            .filter_map(|(m, w)| {
                let vs = VersionSpace::from_mask(m.clone());
                let d = dims.dim(kind, &vs);
                (w as i32 != d).then(|| Counterexample {
                    members: vs.iter().collect(),
                    value: w as i32,
                    dim: d,
                })
            })
            .min_by(|a, b| {
                a.members
                    .len()
                    .cmp(&b.members.len())
                    .then(a.members.cmp(&b.members))
            })
    };
    Ok(Certificate {
        setting,
        value,
        dim,
        counterexample,
    })
}
