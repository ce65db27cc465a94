//! Small named instances used throughout the tests, the CLI corpus and the
//! Python smoke script.

use crate::model::{Edge, Hypothesis, HypothesisClass, ImprovementGraph, Instance, LabelSpace};

/// Every labeling of `n` nodes with `k` labels, node 0 varying slowest.
pub fn all_labelings(n: usize, k: usize) -> Vec<Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut lab = vec![0; n];
            for slot in lab.iter_mut().rev() {
                *slot = code % k;
                code /= k;
            }
            lab
        })
        .collect()
}

fn labeling_name(lab: &[usize]) -> String {
    let digits: String = lab.iter().map(|y| y.to_string()).collect();
    format!("h{digits}")
}

fn two_node_graph(cost: f64) -> ImprovementGraph {
    ImprovementGraph::new(
        vec!["a".into(), "b".into()],
        vec![vec![Edge { to: 1, cost }], vec![]],
    )
    .with_self_loops()
}

fn full_class(n: usize, k: usize) -> HypothesisClass {
    all_labelings(n, k)
        .into_iter()
        .map(|lab| Hypothesis::total(labeling_name(&lab), lab))
        .collect()
}

/// Two points `a -> b`, binary labels, all four labelings.
pub fn f1() -> Instance {
    Instance::new(two_node_graph(0.0), LabelSpace::binary(), full_class(2, 2)).unwrap()
}

/// Two improvement pairs where every hypothesis labels the targets 1.
pub fn f2() -> Instance {
    pairs(2)
}

/// Two points `a -> b`, three labels, all nine labelings.
pub fn f3() -> Instance {
    Instance::new(two_node_graph(0.0), LabelSpace::graded(3), full_class(2, 3)).unwrap()
}

/// `f3` with the move `a -> b` costing 1.5.
pub fn f4() -> Instance {
    Instance::new(two_node_graph(1.5), LabelSpace::graded(3), full_class(2, 3)).unwrap()
}

/// `n` pairs `x_i -> x_i'`; every hypothesis labels each `x_i'` with 1 and
/// the class realizes every labeling of `x_1 … x_n`.
pub fn pairs(n: usize) -> Instance {
    let mut names = Vec::with_capacity(2 * n);
    let mut arcs = Vec::with_capacity(n);
    for i in 1..=n {
        names.push(format!("x{i}"));
        names.push(format!("x{i}p"));
        arcs.push((2 * (i - 1), 2 * (i - 1) + 1));
    }
    let graph = ImprovementGraph::unweighted(names, &arcs);
    let class = all_labelings(n, 2)
        .into_iter()
        .map(|lab| {
            let full: Vec<usize> = lab.iter().flat_map(|&y| [y, 1]).collect();
            Hypothesis::total(labeling_name(&lab), full)
        })
        .collect();
    Instance::new(graph, LabelSpace::binary(), class).unwrap()
}

/// Same instance with only self-loops.
pub fn without_improvements(inst: &Instance) -> Instance {
    let g = ImprovementGraph::new(inst.graph().names().to_vec(), Vec::new()).with_self_loops();
    Instance::new(g, inst.labels().clone(), class_of(inst)).unwrap()
}

/// Recovers the hypothesis class of a validated instance.
pub fn class_of(inst: &Instance) -> HypothesisClass {
    (0..inst.num_hypotheses())
        .map(|h| Hypothesis::total(inst.hypothesis_name(h), inst.hypothesis(h).to_vec()))
        .collect()
}
