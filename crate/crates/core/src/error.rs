use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("node {v} is not in the improvement set of {x}")]
    NotANeighbor { x: usize, v: usize },

    #[error("non-realizable input at round {round}: {detail}")]
    NonRealizable { round: usize, detail: String },

    #[error("empty version space: the revealed labels are not realizable by the class")]
    EmptyVersionSpace,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("setting mismatch: {0}")]
    SettingMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
