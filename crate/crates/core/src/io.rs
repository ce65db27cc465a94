//! JSON formats for instances, transcripts and shattered trees. Everything
//! is written with names; indices never leave the process.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adversary::Response;
use crate::dimensions::tree::ShatteredTree;
use crate::engine::{Round, Transcript};
use crate::error::{Error, Result};
use crate::model::{Edge, Hypothesis, ImprovementGraph, Instance, LabelSpace};
use crate::response::Publication;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeEntry>,
    pub labels: Vec<LabelEntry>,
    pub hypotheses: Vec<HypothesisEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisEntry {
    pub name: String,
    pub labeling: BTreeMap<String, String>,
}

fn index_of(names: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(Error::Parse(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(map)
}

impl InstanceFile {
    /// Resolves names, adds missing self-loops, validates and prunes.
    pub fn into_instance(self) -> Result<Instance> {
        let nodes = index_of(&self.nodes, "node")?;
        let label_names: Vec<String> = self.labels.iter().map(|l| l.name.clone()).collect();
        let labels = index_of(&label_names, "label")?;
        let node = |n: &str| {
            nodes
                .get(n)
                .copied()
                .ok_or_else(|| Error::Parse(format!("unknown node {n:?}")))
        };
        let mut edges = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            edges[node(&e.from)?].push(Edge {
                to: node(&e.to)?,
                cost: e.cost,
            });
        }
        let graph = ImprovementGraph::new(self.nodes.clone(), edges).with_self_loops();
        let space = LabelSpace::new(label_names, self.labels.iter().map(|l| l.value).collect());
        let mut class = Vec::with_capacity(self.hypotheses.len());
        for h in self.hypotheses {
            let mut labeling = vec![None; self.nodes.len()];
            for (n, y) in &h.labeling {
                let y = labels.get(y).copied().ok_or_else(|| {
                    Error::Parse(format!("hypothesis {:?}: unknown label {y:?}", h.name))
                })?;
                labeling[node(n)?] = Some(y);
            }
            class.push(Hypothesis {
                name: h.name,
                labeling,
            });
        }
        Instance::new(graph, space, class)
    }

    pub fn from_instance(inst: &Instance) -> Self {
        let g = inst.graph();
        let names = g.names();
        InstanceFile {
            nodes: names.to_vec(),
            edges: (0..g.len())
                .flat_map(|x| {
                    g.edges(x).iter().map(move |e| EdgeEntry {
                        from: names[x].clone(),
                        to: names[e.to].clone(),
                        cost: e.cost,
                    })
                })
                .collect(),
            labels: (0..inst.num_labels())
                .map(|y| LabelEntry {
                    name: inst.label_name(y).to_string(),
                    value: inst.labels().value(y),
                })
                .collect(),
            hypotheses: (0..inst.num_hypotheses())
                .map(|h| HypothesisEntry {
                    name: inst.hypothesis_name(h).to_string(),
                    labeling: inst
                        .hypothesis(h)
                        .iter()
                        .enumerate()
                        .map(|(x, &y)| (names[x].clone(), inst.label_name(y).to_string()))
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    serde_json::from_str::<InstanceFile>(text)
        .map_err(|e| Error::Parse(e.to_string()))?
        .into_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from_instance(inst))
        .expect("instance serializes");
    s.push('\n');
    s
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<()> {
    fs::write(path, instance_to_json(inst))?;
    Ok(())
}

fn published_json(inst: &Instance, p: &Publication) -> Value {
    let map: BTreeMap<&str, &str> = p
        .labels
        .iter()
        .map(|&(u, y)| (inst.node_name(u), inst.label_name(y)))
        .collect();
    json!(map)
}

pub fn transcript_to_json(inst: &Instance, t: &Transcript) -> Value {
    let rounds: Vec<Value> = t
        .rounds
        .iter()
        .map(|r| {
            let feedback = match r.feedback {
                Response::Label(y) => json!(inst.label_name(y)),
                Response::Mistake(b) => json!(b),
            };
            json!({
                "x": inst.node_name(r.x),
                "published": published_json(inst, &r.published),
                "v": inst.node_name(r.v),
                "prediction": inst.label_name(r.prediction),
                "feedback": feedback,
                "mistake": r.mistake,
                "dim": r.dim,
            })
        })
        .collect();
    json!({
        "rounds": rounds,
        "mistakes": t.mistakes,
        "witness_hypothesis": inst.hypothesis_name(t.witness),
    })
}

#[derive(Deserialize)]
struct RoundFile {
    x: String,
    published: BTreeMap<String, String>,
    v: String,
    prediction: String,
    feedback: Value,
    mistake: bool,
    dim: i32,
}

#[derive(Deserialize)]
struct TranscriptFile {
    rounds: Vec<RoundFile>,
    mistakes: usize,
    witness_hypothesis: String,
}

/// Parses a transcript written by [`transcript_to_json`]. The starting
/// dimension is not part of the format and is left unknown.
pub fn transcript_from_json(inst: &Instance, text: &str) -> Result<Transcript> {
    let file: TranscriptFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let node = |n: &str| {
        inst.node_index(n)
            .ok_or_else(|| Error::Parse(format!("unknown node {n:?}")))
    };
    let label = |n: &str| {
        inst.label_index(n)
            .ok_or_else(|| Error::Parse(format!("unknown label {n:?}")))
    };
    let mut rounds = Vec::with_capacity(file.rounds.len());
    for r in file.rounds {
        let x = node(&r.x)?;
        let mut labels = Vec::with_capacity(r.published.len());
        for (u, y) in &r.published {
            labels.push((node(u)?, label(y)?));
        }
        labels.sort_unstable();
        let feedback = match &r.feedback {
            Value::Bool(b) => Response::Mistake(*b),
            Value::String(s) => Response::Label(label(s)?),
            other => return Err(Error::Parse(format!("bad feedback {other}"))),
        };
        rounds.push(Round {
            x,
            published: Publication { x, labels },
            v: node(&r.v)?,
            prediction: label(&r.prediction)?,
            feedback,
            mistake: r.mistake,
            dim: r.dim,
        });
    }
    Ok(Transcript {
        rounds,
        mistakes: file.mistakes,
        witness: inst
            .hypothesis_index(&file.witness_hypothesis)
            .ok_or_else(|| {
                Error::Parse(format!("unknown hypothesis {:?}", file.witness_hypothesis))
            })?,
        initial_dim: None,
    })
}

/// `null` for a leaf, otherwise `{"x": node, "edges": [{"point", "label", "child"}]}`.
pub fn tree_to_json(inst: &Instance, tree: &ShatteredTree) -> Value {
    match tree {
        ShatteredTree::Leaf => Value::Null,
        ShatteredTree::Node { x, edges } => json!({
            "x": inst.node_name(*x),
            "edges": edges
                .iter()
                .map(|e| json!({
                    "point": inst.node_name(e.point),
                    "label": inst.label_name(e.label),
                    "child": tree_to_json(inst, &e.child),
                }))
                .collect::<Vec<_>>(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimensions::{DimensionKind, Dimensions};
    use crate::engine::{check_transcript, play, GameConfig, Setting};
    use crate::fixtures;
    use std::sync::Arc;

    #[test]
    fn instance_round_trip() {
        for inst in [
            fixtures::f1(),
            fixtures::f2(),
            fixtures::f3(),
            fixtures::f4(),
        ] {
            let text = instance_to_json(&inst);
            assert_eq!(instance_from_json(&text).unwrap(), inst);
        }
    }

    #[test]
    fn self_loops_added_and_names_checked() {
        let text = r#"{"nodes":["a","b"],"edges":[{"from":"a","to":"b","cost":0}],
            "labels":[{"name":"0","value":0},{"name":"1","value":1}],
            "hypotheses":[{"name":"h","labeling":{"a":"0","b":"1"}}]}"#;
        let inst = instance_from_json(text).unwrap();
        assert!(inst.graph().contains_edge(1, 1));
        assert!(instance_from_json(&text.replace("\"to\":\"b\"", "\"to\":\"c\"")).is_err());
        assert!(instance_from_json(&text.replace("\"b\":\"1\"", "\"b\":\"2\"")).is_err());
        let partial = text.replace(",\"b\":\"1\"", "");
        assert!(matches!(
            instance_from_json(&partial),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn transcript_round_trip() {
        for (inst, setting) in [
            (fixtures::f1(), Setting::BinaryFull),
            (fixtures::f3(), Setting::MulticlassBandit),
        ] {
            let dims = Arc::new(Dimensions::new(Arc::new(inst)));
            let t = play(&dims, &GameConfig::for_setting(setting)).unwrap();
            let inst = dims.instance();
            let text = transcript_to_json(inst, &t).to_string();
            let back = transcript_from_json(inst, &text).unwrap();
            assert_eq!(back.rounds, t.rounds);
            assert_eq!(back.mistakes, t.mistakes);
            assert!(check_transcript(inst, &back).is_clean());
        }
    }

    #[test]
    fn tree_json_shape() {
        let inst = fixtures::f1();
        let dims = Dimensions::new(Arc::new(inst.clone()));
        let t = dims.witness(DimensionKind::IlBinary, &inst.full()).unwrap();
        let v = tree_to_json(&inst, &t);
        assert!(v["x"].is_string());
        assert_eq!(v["edges"].as_array().unwrap().len(), t.edges().len());
    }
}
