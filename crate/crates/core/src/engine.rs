//! The round loop: the environment picks a point, the learner publishes a
//! hypothesis on its improvement set, the agent best responds, and the
//! learner is charged and informed at the agent's final point.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversary::{Adversary, ExhaustiveAdversary, RandomAdversary, Response, TreeAdversary};
use crate::dimensions::{DimensionKind, Dimensions};
use crate::error::{Error, Result};
use crate::learners::{
    AnyLearner, Feedback, FeedbackMode, Learner, LearnerKind, LearnerOptions, PlainLearner,
};
use crate::model::{HypId, Instance, LabelId, NodeId, VersionSpace};
use crate::response::{best_response, maximizers, Labeling, Publication, TieBreaker, TiePolicy};

/// Label space, move costs and feedback type of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    #[default]
    BinaryFull,
    MulticlassFull,
    MulticlassBandit,
    WeightedFull,
}

impl Setting {
    pub const ALL: [Setting; 4] = [
        Setting::BinaryFull,
        Setting::MulticlassFull,
        Setting::MulticlassBandit,
        Setting::WeightedFull,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::BinaryFull => "binary-full",
            Setting::MulticlassFull => "multiclass-full",
            Setting::MulticlassBandit => "multiclass-bandit",
            Setting::WeightedFull => "weighted-full",
        }
    }

    pub fn feedback_mode(self) -> FeedbackMode {
        match self {
            Setting::MulticlassBandit => FeedbackMode::Bandit,
            _ => FeedbackMode::Full,
        }
    }

    /// The dimension that characterizes optimal mistakes in this setting.
    pub fn dimension_kind(self) -> DimensionKind {
        match self {
            Setting::BinaryFull => DimensionKind::IlBinary,
            Setting::MulticlassFull => DimensionKind::IlMulticlass,
            Setting::MulticlassBandit => DimensionKind::Bil,
            Setting::WeightedFull => DimensionKind::Wil,
        }
    }

    pub fn default_learner(self) -> LearnerKind {
        match self {
            Setting::BinaryFull => LearnerKind::Isoa,
            Setting::MulticlassFull => LearnerKind::MulticlassIsoa,
            Setting::MulticlassBandit => LearnerKind::Bisoa,
            Setting::WeightedFull => LearnerKind::WeightedIsoa,
        }
    }

    /// Rejects instances the setting's theory does not cover.
    pub fn check(self, inst: &Instance) -> Result<()> {
        match self {
            Setting::BinaryFull if !inst.is_binary() => Err(Error::SettingMismatch(format!(
                "binary setting needs two labels, instance has {}",
                inst.num_labels()
            ))),
            Setting::MulticlassFull | Setting::MulticlassBandit if !inst.is_unweighted() => {
                Err(Error::SettingMismatch(format!(
                    "{} needs zero move costs; use weighted-full",
                    self.as_str()
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown setting {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// Follows a maximum-depth tree of the setting's dimension.
    #[default]
    Tree,
    /// Follows a maximum-depth Littlestone tree.
    LdimTree,
    Random,
    Exhaustive,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 4] = [
        AdversaryKind::Tree,
        AdversaryKind::LdimTree,
        AdversaryKind::Random,
        AdversaryKind::Exhaustive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AdversaryKind::Tree => "tree",
            AdversaryKind::LdimTree => "ldim-tree",
            AdversaryKind::Random => "random",
            AdversaryKind::Exhaustive => "exhaustive",
        }
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown adversary {s:?}")))
    }
}

/// Everything needed to set up a game, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct GameConfig {
    pub setting: Setting,
    /// Defaults to the setting's own learner.
    pub learner: Option<LearnerKind>,
    pub adversary: AdversaryKind,
    pub tie_policy: TiePolicy,
    pub horizon: Option<usize>,
    /// Seed of the random adversary.
    pub seed: u64,
    /// Rounds played by the random adversary; defaults to the horizon and
    /// stands in for it when no horizon is given.
    pub rounds: Option<usize>,
    pub learner_options: LearnerOptions,
}

impl GameConfig {
    pub fn for_setting(setting: Setting) -> Self {
        GameConfig {
            setting,
            ..GameConfig::default()
        }
    }

    pub fn learner_kind(&self) -> LearnerKind {
        self.learner.unwrap_or(self.setting.default_learner())
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            setting: self.setting,
            tie_policy: self.tie_policy,
            horizon: self.horizon.or(self.rounds),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub setting: Setting,
    pub tie_policy: TiePolicy,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub x: NodeId,
    pub published: Publication,
    pub v: NodeId,
    pub prediction: LabelId,
    /// What the learner was told: the label, or only the mistake bit.
    pub feedback: Response,
    pub mistake: bool,
    /// Dimension of the learner's version space after the round.
    pub dim: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub rounds: Vec<Round>,
    pub mistakes: usize,
    /// A hypothesis consistent with everything revealed.
    pub witness: HypId,
    /// Dimension before the first round, when known.
    pub initial_dim: Option<i32>,
}

impl Transcript {
    /// Mistake rounds after which the dimension did not strictly drop.
    pub fn mistakes_without_progress(&self) -> Vec<usize> {
        let mut prev = self.initial_dim;
        let mut bad = Vec::new();
        for (r, round) in self.rounds.iter().enumerate() {
            if round.mistake && prev.is_some_and(|p| round.dim >= p) {
                bad.push(r);
            }
            prev = Some(round.dim);
        }
        bad
    }
}

/// Default number of rounds: `|H| (d + 1)`.
pub fn default_horizon(inst: &Instance, dim: i32) -> usize {
    inst.num_hypotheses() * (dim.max(0) as usize + 1)
}

fn revealed(
    inst: &Instance,
    mode: FeedbackMode,
    vs: &VersionSpace,
    v: NodeId,
    prediction: LabelId,
    response: Response,
) -> Result<(bool, Feedback, Response, VersionSpace)> {
    Ok(match (mode, response) {
        (FeedbackMode::Full, Response::Label(y)) => (
            y != prediction,
            Feedback::Full { v, label: y },
            response,
            inst.restrict(vs, v, y),
        ),
        (FeedbackMode::Bandit, Response::Label(y)) => {
            let mistake = y != prediction;
            (
                mistake,
                Feedback::Bandit { v, mistake },
                Response::Mistake(mistake),
                inst.restrict(vs, v, y),
            )
        }
        (FeedbackMode::Bandit, Response::Mistake(mistake)) => (
            mistake,
            Feedback::Bandit { v, mistake },
            response,
            if mistake {
                inst.restrict_not(vs, v, prediction)
            } else {
                inst.restrict(vs, v, prediction)
            },
        ),
        (FeedbackMode::Full, Response::Mistake(_)) => {
            return Err(Error::SettingMismatch(
                "adversary answered with a mistake bit in a full-feedback game".into(),
            ))
        }
    })
}

/// Plays until the adversary yields or the horizon is reached.
pub fn run_game(
    dims: &Dimensions,
    learner: &mut dyn Learner,
    adversary: &mut dyn Adversary,
    opts: &RunOptions,
) -> Result<Transcript> {
    let inst = &**dims.instance();
    let setting = opts.setting;
    setting.check(inst)?;
    let mode = setting.feedback_mode();
    if learner.feedback_mode() != mode {
        return Err(Error::SettingMismatch(format!(
            "learner {} expects {:?} feedback, setting {setting} gives {mode:?}",
            learner.name(),
            learner.feedback_mode()
        )));
    }
    let kind = setting.dimension_kind();
    let mut vs = inst.full();
    let learner_dim =
        |l: &dyn Learner, vs: &VersionSpace| l.dimension().unwrap_or_else(|| dims.dim(kind, vs));
    let initial_dim = learner_dim(learner, &vs);
    let horizon = opts
        .horizon
        .unwrap_or_else(|| default_horizon(inst, initial_dim));
    let mut ties = TieBreaker::new(opts.tie_policy);
    let mut rounds = Vec::new();
    let mut mistakes = 0;

    for r in 0..horizon {
        let Some(x) = adversary.next_instance()? else {
            break;
        };
        if x >= inst.num_nodes() {
            return Err(Error::Invariant(format!(
                "adversary presented unknown node {x}"
            )));
        }
        let published = learner.publish(x)?;
        if published.x != x
            || published
                .labels
                .iter()
                .any(|&(u, _)| !inst.graph().contains_edge(x, u))
        {
            return Err(Error::Invariant(format!(
                "learner {} published outside the improvement set of {x}",
                learner.name()
            )));
        }
        let tied = best_response(inst, &published, x, &mut ties);
        let v = match tied[..] {
            [v] => v,
            _ => {
                let v = adversary.choose_destination(x, &published, &tied)?;
                if !tied.contains(&v) {
                    return Err(Error::Invariant(format!(
                        "adversary sent the agent to {v}, not a best response"
                    )));
                }
                v
            }
        };
        let prediction = published.label_at(v);
        let response = adversary.respond(x, &published, v)?;
        let (mistake, feedback, shown, next) = revealed(inst, mode, &vs, v, prediction, response)?;
        if next.is_empty() {
            return Err(Error::NonRealizable {
                round: r,
                detail: format!(
                    "answer {response:?} at {} leaves no consistent hypothesis",
                    inst.node_name(v)
                ),
            });
        }
        vs = next;
        learner.observe(&feedback)?;
        mistakes += usize::from(mistake);
        rounds.push(Round {
            x,
            published,
            v,
            prediction,
            feedback: shown,
            mistake,
            dim: learner_dim(learner, &vs),
        });
    }
    Ok(Transcript {
        rounds,
        mistakes,
        witness: vs.first().ok_or(Error::EmptyVersionSpace)?,
        initial_dim: Some(initial_dim),
    })
}

/// Plays a learner for the classic protocol: the agent never moves and
/// the label of the presented point is always revealed.
pub fn run_without_improvement(
    inst: &Instance,
    learner: &mut dyn PlainLearner,
    adversary: &mut dyn Adversary,
    horizon: usize,
) -> Result<Transcript> {
    let mut vs = inst.full();
    let initial_dim = learner.dimension();
    let mut rounds = Vec::new();
    let mut mistakes = 0;
    for r in 0..horizon {
        let Some(x) = adversary.next_instance()? else {
            break;
        };
        let prediction = learner.predict(x)?;
        let published = Publication::single(inst, x, x, prediction);
        let response = adversary.respond(x, &published, x)?;
        let (mistake, _, shown, next) =
            revealed(inst, FeedbackMode::Full, &vs, x, prediction, response)?;
        if next.is_empty() {
            return Err(Error::NonRealizable {
                round: r,
                detail: format!("answer {response:?} at {}", inst.node_name(x)),
            });
        }
        vs = next;
        let Response::Label(y) = shown else {
            unreachable!("full feedback reveals labels")
        };
        learner.update(x, y)?;
        mistakes += usize::from(mistake);
        rounds.push(Round {
            x,
            published,
            v: x,
            prediction,
            feedback: shown,
            mistake,
            dim: learner.dimension().unwrap_or(-1),
        });
    }
    Ok(Transcript {
        rounds,
        mistakes,
        witness: vs.first().ok_or(Error::EmptyVersionSpace)?,
        initial_dim,
    })
}

/// Problems found when replaying a transcript.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptReport {
    pub violations: Vec<String>,
}

impl TranscriptReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-verifies every round of a transcript against the instance: best
/// responses, predictions, mistake flags, dimension monotonicity, the mistake
/// total and the consistency of the witness hypothesis.
pub fn check_transcript(inst: &Instance, t: &Transcript) -> TranscriptReport {
    let mut out = Vec::new();
    let mut prev_dim = t.initial_dim;
    let h = t.witness;
    if h >= inst.num_hypotheses() {
        out.push(format!("witness hypothesis {h} does not exist"));
    }
    for (r, round) in t.rounds.iter().enumerate() {
        let x = round.x;
        if x >= inst.num_nodes() || round.v >= inst.num_nodes() {
            out.push(format!("round {r}: unknown node"));
            continue;
        }
        if round.published.x != x {
            out.push(format!("round {r}: publication is for another point"));
        }
        if round
            .published
            .labels
            .iter()
            .any(|&(u, _)| !inst.graph().contains_edge(x, u))
        {
            out.push(format!("round {r}: publication leaves the improvement set"));
        }
        if !maximizers(inst, &round.published, x).contains(&round.v) {
            out.push(format!(
                "round {r}: {} is not a best response from {}",
                inst.node_name(round.v),
                inst.node_name(x)
            ));
        }
        if round.prediction != round.published.label_at(round.v) {
            out.push(format!(
                "round {r}: prediction differs from the published label"
            ));
        }
        let flagged = match round.feedback {
            Response::Label(y) => y != round.prediction,
            Response::Mistake(b) => b,
        };
        if flagged != round.mistake {
            out.push(format!(
                "round {r}: mistake flag disagrees with the feedback"
            ));
        }
        if let Some(p) = prev_dim {
            if round.dim > p {
                out.push(format!(
                    "round {r}: dimension rose from {p} to {}",
                    round.dim
                ));
            }
        }
        prev_dim = Some(round.dim);
        if h < inst.num_hypotheses() {
            let truth = inst.label_of(h, round.v);
            let consistent = match round.feedback {
                Response::Label(y) => truth == y,
                Response::Mistake(b) => (truth != round.prediction) == b,
            };
            if !consistent {
                out.push(format!(
                    "round {r}: witness {} contradicts the feedback",
                    inst.hypothesis_name(h)
                ));
            }
        }
    }
    let counted = t.rounds.iter().filter(|r| r.mistake).count();
    if counted != t.mistakes {
        out.push(format!(
            "mistake total {} but {counted} mistake rounds",
            t.mistakes
        ));
    }
    TranscriptReport { violations: out }
}

/// Adversaries selectable by name.
#[derive(Debug, Clone)]
pub enum AnyAdversary {
    Tree(TreeAdversary),
    Random(Box<RandomAdversary>),
    Exhaustive(Box<ExhaustiveAdversary<AnyLearner>>),
}

impl AnyAdversary {
    /// `learner` must be the fresh learner the game will be played with.
    pub fn build(
        dims: &Arc<Dimensions>,
        config: &GameConfig,
        learner: &AnyLearner,
    ) -> Result<Self> {
        let inst = dims.instance().clone();
        let full = inst.full();
        let tree = |kind: DimensionKind| -> Result<Self> {
            dims.ensure_applies(kind)?;
            let witness = dims.witness(kind, &full).ok_or(Error::EmptyVersionSpace)?;
            Ok(AnyAdversary::Tree(TreeAdversary::new(
                inst.clone(),
                kind,
                witness,
            )))
        };
        match config.adversary {
            AdversaryKind::Tree => tree(config.setting.dimension_kind()),
            AdversaryKind::LdimTree => tree(DimensionKind::Littlestone),
            AdversaryKind::Random => {
                let rounds = config.rounds.or(config.horizon).unwrap_or_else(|| {
                    default_horizon(&inst, dims.dim(config.setting.dimension_kind(), &full))
                });
                Ok(AnyAdversary::Random(Box::new(RandomAdversary::new(
                    inst.clone(),
                    config.setting.feedback_mode(),
                    config.seed,
                    rounds,
                ))))
            }
            AdversaryKind::Exhaustive => Ok(AnyAdversary::Exhaustive(Box::new(
                ExhaustiveAdversary::new(inst.clone(), learner.clone(), config.tie_policy)?,
            ))),
        }
    }

    fn inner(&mut self) -> &mut dyn Adversary {
        match self {
            AnyAdversary::Tree(a) => a,
            AnyAdversary::Random(a) => a.as_mut(),
            AnyAdversary::Exhaustive(a) => a.as_mut(),
        }
    }
}

impl Adversary for AnyAdversary {
    fn name(&self) -> &'static str {
        match self {
            AnyAdversary::Tree(a) => a.name(),
            AnyAdversary::Random(a) => a.name(),
            AnyAdversary::Exhaustive(a) => a.name(),
        }
    }

    fn next_instance(&mut self) -> Result<Option<NodeId>> {
        self.inner().next_instance()
    }

    fn choose_destination(
        &mut self,
        x: NodeId,
        published: &Publication,
        tied: &[NodeId],
    ) -> Result<NodeId> {
        self.inner().choose_destination(x, published, tied)
    }

    fn respond(&mut self, x: NodeId, published: &Publication, v: NodeId) -> Result<Response> {
        self.inner().respond(x, published, v)
    }
}

/// Builds the configured learner and adversary and plays one game.
pub fn play(dims: &Arc<Dimensions>, config: &GameConfig) -> Result<Transcript> {
    config.setting.check(dims.instance())?;
    let mut learner =
        AnyLearner::build(config.learner_kind(), dims.clone(), config.learner_options)?;
    let mut adversary = AnyAdversary::build(dims, config, &learner)?;
    run_game(dims, &mut learner, &mut adversary, &config.run_options())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn dims(inst: Instance) -> Arc<Dimensions> {
        Arc::new(Dimensions::new(Arc::new(inst)))
    }

    fn config(setting: Setting, learner: LearnerKind, adversary: AdversaryKind) -> GameConfig {
        GameConfig {
            learner: Some(learner),
            adversary,
            ..GameConfig::for_setting(setting)
        }
    }

    #[test]
    fn isoa_vs_tree_on_f1_and_f2() {
        let d1 = dims(fixtures::f1());
        let t = play(&d1, &GameConfig::default()).unwrap();
        assert_eq!(t.mistakes, 2);
        assert!(check_transcript(d1.instance(), &t).is_clean());
        let d2 = dims(fixtures::f2());
        let t = play(&d2, &GameConfig::default()).unwrap();
        assert_eq!(t.mistakes, 0);
    }

    #[test]
    fn baseline_pays_littlestone_on_f2() {
        let d = dims(fixtures::f2());
        let cfg = config(
            Setting::BinaryFull,
            LearnerKind::BaselineSoa,
            AdversaryKind::LdimTree,
        );
        let t = play(&d, &cfg).unwrap();
        assert_eq!(t.mistakes, 2);
        assert!(t.rounds.iter().all(|r| r.v == r.x));
    }

    #[test]
    fn tampering_is_reported() {
        let d = dims(fixtures::f1());
        let t = play(&d, &GameConfig::default()).unwrap();
        let mut flag = t.clone();
        flag.rounds[0].mistake = !flag.rounds[0].mistake;
        assert!(!check_transcript(d.instance(), &flag).is_clean());

        let inst = d.instance();
        let mut moved = t.clone();
        let r = &mut moved.rounds[1];
        let best = maximizers(inst, &r.published, r.x);
        r.v = (0..inst.num_nodes()).find(|v| !best.contains(v)).unwrap();
        let report = check_transcript(inst, &moved);
        assert!(
            report.violations.iter().any(|v| v.starts_with("round 1:")),
            "{report:?}"
        );
    }

    #[test]
    fn setting_mismatches_rejected() {
        let d = dims(fixtures::f3());
        assert!(matches!(
            play(&d, &GameConfig::default()),
            Err(Error::SettingMismatch(_))
        ));
        let w = dims(fixtures::f4());
        assert!(play(&w, &GameConfig::for_setting(Setting::MulticlassFull)).is_err());
        let cfg = config(
            Setting::MulticlassBandit,
            LearnerKind::MulticlassIsoa,
            AdversaryKind::Tree,
        );
        assert!(play(&d, &cfg).is_err());
    }

    #[test]
    fn lying_adversary_is_caught() {
        /// Answers 0 and then 1 at the same point.
        struct Liar(usize);
        impl Adversary for Liar {
            fn name(&self) -> &'static str {
                "liar"
            }
            fn next_instance(&mut self) -> Result<Option<NodeId>> {
                Ok(Some(0))
            }
            fn respond(&mut self, _: NodeId, _: &Publication, _: NodeId) -> Result<Response> {
                self.0 += 1;
                Ok(Response::Label(self.0 - 1))
            }
        }
        let d = dims(fixtures::f1());
        let mut l =
            AnyLearner::build(LearnerKind::Bottom, d.clone(), LearnerOptions::default()).unwrap();
        match run_game(&d, &mut l, &mut Liar(0), &RunOptions::default()) {
            Err(Error::NonRealizable { round, .. }) => assert_eq!(round, 1),
            other => panic!("expected a realizability error, got {other:?}"),
        }
    }

    #[test]
    fn every_setting_plays_its_learner() {
        for (inst, setting) in [
            (fixtures::f1(), Setting::BinaryFull),
            (fixtures::f3(), Setting::MulticlassFull),
            (fixtures::f3(), Setting::MulticlassBandit),
            (fixtures::f4(), Setting::WeightedFull),
        ] {
            let d = dims(inst);
            for adversary in [
                AdversaryKind::Tree,
                AdversaryKind::Random,
                AdversaryKind::Exhaustive,
            ] {
                let cfg = GameConfig {
                    adversary,
                    ..GameConfig::for_setting(setting)
                };
                let t = play(&d, &cfg).unwrap();
                let bound = d.dim(setting.dimension_kind(), &d.instance().full()) as usize;
                assert!(t.mistakes <= bound, "{setting} {adversary:?}");
                if adversary != AdversaryKind::Random {
                    assert_eq!(t.mistakes, bound, "{setting} {adversary:?}");
                }
                assert!(t.mistakes_without_progress().is_empty());
                assert!(check_transcript(d.instance(), &t).is_clean());
            }
        }
    }
}
