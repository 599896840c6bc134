use thiserror::Error;

use crate::format::ParseError;
use crate::graph_game::BadClass;
use crate::unfold::Axiom;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed net: {0}")]
    MalformedNet(String),

    #[error("unknown transition `{0}`")]
    UnknownTransition(String),

    #[error("unknown place `{0}`")]
    UnknownPlace(String),

    #[error("transition `{transition}` is not enabled in {marking}")]
    NotEnabled { transition: String, marking: String },

    #[error("net is not {bound}-bounded: place `{place}` holds {count} tokens in {marking}")]
    BoundExceeded {
        bound: u32,
        place: String,
        count: u32,
        marking: String,
    },

    #[error("reachable marking {marking} carries {count} system tokens, expected exactly one")]
    NotOneSystemPlayer { marking: String, count: u32 },

    #[error("graph game exceeds the vertex cap of {cap}")]
    VertexCapExceeded { cap: usize },

    #[error("reachable marking {marking} carries {count} environment tokens; the 2SAT path handles at most two")]
    TooManyEnvironmentTokens { marking: String, count: u32 },

    #[error("strategy has no commitment for reachable marking {0}")]
    MissingChoice(String),

    #[error("strategy loses: play reaches a {class} vertex after {} steps", path.len().saturating_sub(1))]
    CounterexamplePlay { class: BadClass, path: Vec<String> },

    #[error("{axiom} violated at cut {cut}")]
    AxiomViolation { axiom: Axiom, cut: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}
