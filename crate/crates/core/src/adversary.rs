//! Environments that pick instances and labels: a shattered-tree follower
//! for lower bounds, a seeded random labeler for fuzzing, and an exhaustive
//! search that plays optimally against a known deterministic learner.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dimensions::tree::ShatteredTree;
use crate::dimensions::DimensionKind;
use crate::error::{Error, Result};
use crate::learners::{Feedback, FeedbackMode, Learner};
use crate::mask::Mask;
use crate::model::{Instance, LabelId, NodeId, VersionSpace, BOTTOM};
use crate::response::{maximizers, Labeling, Publication, TieBreaker, TiePolicy};

/// What the environment reveals about the agent's final point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Response {
    Label(LabelId),
    Mistake(bool),
}

pub trait Adversary {
    fn name(&self) -> &'static str;

    /// Original point of the next agent, or `None` to end the game.
    fn next_instance(&mut self) -> Result<Option<NodeId>>;

    /// Picks among equally good destinations when ties are adversarial.
    fn choose_destination(
        &mut self,
        _x: NodeId,
        _published: &Publication,
        tied: &[NodeId],
    ) -> Result<NodeId> {
        Ok(tied[0])
    }

    /// True label, or the mistake bit, at the agent's final point `v`.
    fn respond(&mut self, x: NodeId, published: &Publication, v: NodeId) -> Result<Response>;
}

/// Whether the tree's edges assert inequality.
fn negated(kind: DimensionKind) -> bool {
    kind == DimensionKind::Bil
}

/// Walks a shattered tree, always taking an edge on which the learner errs.
#[derive(Debug, Clone)]
pub struct TreeAdversary {
    inst: Arc<Instance>,
    kind: DimensionKind,
    tree: ShatteredTree,
    vs: VersionSpace,
}

impl TreeAdversary {
    pub fn new(inst: Arc<Instance>, kind: DimensionKind, tree: ShatteredTree) -> Self {
        let vs = inst.full();
        TreeAdversary {
            inst,
            kind,
            tree,
            vs,
        }
    }

    pub fn remaining_depth(&self) -> usize {
        self.tree.depth()
    }

    /// The edge the adversary follows when the agent starting at `x` ends at `v`.
    fn pick_edge(&self, x: NodeId, h: &Publication, v: NodeId) -> Option<usize> {
        let edges = self.tree.edges();
        let hv = h.label_at(v);
        let at_v = |pred: &dyn Fn(LabelId) -> bool| {
            edges.iter().position(|e| e.point == v && pred(e.label))
        };
        match self.kind {
            DimensionKind::Bil => at_v(&|y| y == hv),
            _ if v == x => at_v(&|y| y != hv),
            DimensionKind::Littlestone => None,
            DimensionKind::IlBinary => at_v(&|y| y == 0 && y != hv),
            DimensionKind::IlMulticlass => {
                at_v(&|y| y == BOTTOM && y != hv).or_else(|| at_v(&|y| y != hv))
            }
            DimensionKind::Wil => at_v(&|y| self.inst.discourages_move(x, v, y) && y != hv)
                .or_else(|| at_v(&|y| y != hv)),
        }
    }
}

impl Adversary for TreeAdversary {
    fn name(&self) -> &'static str {
        "tree"
    }

    fn next_instance(&mut self) -> Result<Option<NodeId>> {
        Ok(self.tree.root())
    }

    fn respond(&mut self, x: NodeId, published: &Publication, v: NodeId) -> Result<Response> {
        let Some(i) = self.pick_edge(x, published, v) else {
            if self.kind == DimensionKind::Littlestone {
                // the agent left the tree: answer consistently and stop
                let h = self.vs.first().ok_or(Error::EmptyVersionSpace)?;
                self.tree = ShatteredTree::Leaf;
                return Ok(Response::Label(self.inst.label_of(h, v)));
            }
            return Err(Error::Invariant(format!(
                "{} tree at node {x} has no mistake edge for final point {v}",
                self.kind
            )));
        };
        let edge = self.tree.edges()[i].clone();
        let response = if negated(self.kind) {
            self.vs = self.inst.restrict_not(&self.vs, edge.point, edge.label);
            Response::Mistake(true)
        } else {
            self.vs = self.inst.restrict(&self.vs, edge.point, edge.label);
            Response::Label(edge.label)
        };
        self.tree = edge.child;
        Ok(response)
    }
}

/// Uniformly random instances and uniformly random realizable answers.
#[derive(Debug, Clone)]
pub struct RandomAdversary {
    inst: Arc<Instance>,
    mode: FeedbackMode,
    rng: ChaCha8Rng,
    vs: VersionSpace,
    rounds_left: usize,
}

impl RandomAdversary {
    pub fn new(inst: Arc<Instance>, mode: FeedbackMode, seed: u64, rounds: usize) -> Self {
        let vs = inst.full();
        RandomAdversary {
            inst,
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            vs,
            rounds_left: rounds,
        }
    }

    pub fn version_space(&self) -> &VersionSpace {
        &self.vs
    }
}

impl Adversary for RandomAdversary {
    fn name(&self) -> &'static str {
        "random"
    }

    fn next_instance(&mut self) -> Result<Option<NodeId>> {
        if self.rounds_left == 0 {
            return Ok(None);
        }
        self.rounds_left -= 1;
        Ok(Some(self.rng.gen_range(0..self.inst.num_nodes())))
    }

    fn choose_destination(
        &mut self,
        _: NodeId,
        _: &Publication,
        tied: &[NodeId],
    ) -> Result<NodeId> {
        Ok(*tied.choose(&mut self.rng).expect("nonempty"))
    }

    fn respond(&mut self, _x: NodeId, published: &Publication, v: NodeId) -> Result<Response> {
        let inst = &self.inst;
        let p = published.label_at(v);
        let options: Vec<(Response, VersionSpace)> = match self.mode {
            FeedbackMode::Full => (0..inst.num_labels())
                .map(|y| (Response::Label(y), inst.restrict(&self.vs, v, y)))
                .collect(),
            FeedbackMode::Bandit => vec![
                (Response::Mistake(true), inst.restrict_not(&self.vs, v, p)),
                (Response::Mistake(false), inst.restrict(&self.vs, v, p)),
            ],
        };
        let options: Vec<_> = options.into_iter().filter(|(_, c)| !c.is_empty()).collect();
        let (r, next) = options
            .choose(&mut self.rng)
            .cloned()
            .ok_or(Error::EmptyVersionSpace)?;
        self.vs = next;
        Ok(r)
    }
}

/// Default cap on memoized search states.
pub const DEFAULT_MAX_STATES: usize = 2_000_000;

type StateKey = (Vec<u64>, Mask);

/// One answer available to the adversary at a final point.
#[derive(Debug, Clone)]
struct Move {
    response: Response,
    feedback: Feedback,
    child: VersionSpace,
    mistake: bool,
}

/// Plays optimally against a deterministic learner by searching the game
/// tree on a private copy of it. Game states are memoized on the learner's
/// state key and the version space.
#[derive(Debug, Clone)]
pub struct ExhaustiveAdversary<L: Learner + Clone> {
    inst: Arc<Instance>,
    mode: FeedbackMode,
    ties: TiePolicy,
    shadow: L,
    vs: VersionSpace,
    memo: HashMap<StateKey, u32>,
    active: HashSet<StateKey>,
    max_states: usize,
    cap: u32,
    pending: Option<(NodeId, Publication)>,
}

impl<L: Learner + Clone> ExhaustiveAdversary<L> {
    /// `learner` must be an untouched copy of the learner being played.
    pub fn new(inst: Arc<Instance>, learner: L, ties: TiePolicy) -> Result<Self> {
        if matches!(ties, TiePolicy::SeededRandom(_)) {
            return Err(Error::SettingMismatch(
                "exhaustive search needs a deterministic tie policy".into(),
            ));
        }
        if learner.state_key().is_none() {
            return Err(Error::SettingMismatch(format!(
                "learner {} does not expose its state",
                learner.name()
            )));
        }
        let vs = inst.full();
        let cap = (inst.num_hypotheses() * (inst.num_nodes() + 1)) as u32;
        Ok(ExhaustiveAdversary {
            mode: learner.feedback_mode(),
            inst,
            ties,
            shadow: learner,
            vs,
            memo: HashMap::new(),
            active: HashSet::new(),
            max_states: DEFAULT_MAX_STATES,
            cap,
            pending: None,
        })
    }

    pub fn max_states(mut self, n: usize) -> Self {
        self.max_states = n;
        self
    }

    /// Most mistakes the adversary can still force.
    pub fn value(&mut self) -> Result<u32> {
        let (l, vs) = (self.shadow.clone(), self.vs.clone());
        self.search(&l, &vs)
    }

    fn key(l: &L, vs: &VersionSpace) -> StateKey {
        (l.state_key().unwrap_or_default(), vs.mask().clone())
    }

    fn destinations(&self, p: &Publication, x: NodeId) -> Vec<NodeId> {
        TieBreaker::new(self.ties).resolve(maximizers(&self.inst, p, x))
    }

    fn moves(&self, vs: &VersionSpace, p: &Publication, v: NodeId) -> Vec<Move> {
        let inst = &self.inst;
        let pred = p.label_at(v);
        let all: Vec<Move> = match self.mode {
            FeedbackMode::Full => (0..inst.num_labels())
                .map(|y| Move {
                    response: Response::Label(y),
                    feedback: Feedback::Full { v, label: y },
                    child: inst.restrict(vs, v, y),
                    mistake: y != pred,
                })
                .collect(),
            FeedbackMode::Bandit => [true, false]
                .into_iter()
                .map(|mistake| Move {
                    response: Response::Mistake(mistake),
                    feedback: Feedback::Bandit { v, mistake },
                    child: if mistake {
                        inst.restrict_not(vs, v, pred)
                    } else {
                        inst.restrict(vs, v, pred)
                    },
                    mistake,
                })
                .collect(),
        };
        all.into_iter().filter(|m| !m.child.is_empty()).collect()
    }

    /// Value of one answer given the learner after publishing.
    fn move_value(&mut self, published: &L, vs: &VersionSpace, m: &Move) -> Result<u32> {
        let mut next = published.clone();
        next.observe(&m.feedback)?;
        let gain = u32::from(m.mistake);
        if Self::key(&next, &m.child) == Self::key(published, vs) {
            // nothing changes: a repeatable mistake is unbounded
            return Ok(if m.mistake { self.cap } else { 0 });
        }
        Ok((gain + self.search(&next, &m.child)?).min(self.cap))
    }

    fn dest_value(
        &mut self,
        published: &L,
        vs: &VersionSpace,
        p: &Publication,
        v: NodeId,
    ) -> Result<u32> {
        let mut best = 0;
        for m in self.moves(vs, p, v) {
            best = best.max(self.move_value(published, vs, &m)?);
        }
        Ok(best)
    }

    fn point_value(
        &mut self,
        l: &L,
        vs: &VersionSpace,
        x: NodeId,
    ) -> Result<(u32, L, Publication)> {
        let mut published = l.clone();
        let p = published.publish(x)?;
        let mut best = 0;
        for v in self.destinations(&p, x) {
            best = best.max(self.dest_value(&published, vs, &p, v)?);
        }
        Ok((best, published, p))
    }

    fn search(&mut self, l: &L, vs: &VersionSpace) -> Result<u32> {
        let key = Self::key(l, vs);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        if !self.active.insert(key.clone()) {
            return Err(Error::Invariant(format!(
                "learner {} revisits a state along a game path",
                l.name()
            )));
        }
        let mut best = 0;
        for x in 0..self.inst.num_nodes() {
            best = best.max(self.point_value(l, vs, x)?.0);
            if best >= self.cap {
                break;
            }
        }
        self.active.remove(&key);
        if self.memo.len() >= self.max_states {
            return Err(Error::ResourceLimit(format!(
                "exhaustive adversary explored {} states",
                self.memo.len()
            )));
        }
        self.memo.insert(key, best);
        Ok(best)
    }
}

impl<L: Learner + Clone> Adversary for ExhaustiveAdversary<L> {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn next_instance(&mut self) -> Result<Option<NodeId>> {
        let target = self.value()?;
        if target == 0 {
            return Ok(None);
        }
        let (l, vs) = (self.shadow.clone(), self.vs.clone());
        for x in 0..self.inst.num_nodes() {
            let (val, published, p) = self.point_value(&l, &vs, x)?;
            if val == target {
                self.shadow = published;
                self.pending = Some((x, p));
                return Ok(Some(x));
            }
        }
        Err(Error::Invariant("search value is not attained".into()))
    }

    fn choose_destination(
        &mut self,
        _x: NodeId,
        published: &Publication,
        tied: &[NodeId],
    ) -> Result<NodeId> {
        let (l, vs) = (self.shadow.clone(), self.vs.clone());
        let mut best = (0, tied[0]);
        for &v in tied {
            let val = self.dest_value(&l, &vs, published, v)?;
            if val > best.0 {
                best = (val, v);
            }
        }
        Ok(best.1)
    }

    fn respond(&mut self, x: NodeId, published: &Publication, v: NodeId) -> Result<Response> {
        match &self.pending {
            Some((px, p)) if *px == x && p == published => {}
            _ => {
                return Err(Error::Invariant(
                    "learner published something its copy did not; is it deterministic?".into(),
                ))
            }
        }
        let (l, vs) = (self.shadow.clone(), self.vs.clone());
        let mut best: Option<(u32, Move)> = None;
        for m in self.moves(&vs, published, v) {
            let val = self.move_value(&l, &vs, &m)?;
            if best.as_ref().is_none_or(|(b, _)| val > *b) {
                best = Some((val, m));
            }
        }
        let (_, m) = best.ok_or(Error::EmptyVersionSpace)?;
        self.shadow.observe(&m.feedback)?;
        self.vs = m.child;
        self.pending = None;
        Ok(m.response)
    }
}
