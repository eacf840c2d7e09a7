//! Horn-clause domain theories, scenario facts and explanation trees.

mod parse;
mod prove;
mod term;
mod theory;
mod tree;

use thiserror::Error;

pub use prove::{explain, explain_all, Limits, ProveError, DEFAULT_DEPTH, DEFAULT_SOLUTIONS};
pub use term::{unify, Atom, Substitution, Term};
pub use theory::{natural_cmp, Fact, FactSet, Rule, Theory};
pub use tree::{unused_facts, verify_explanation, ExplanationTree, ProofStep, VerifyFailure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EbgError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("duplicate clause id `{0}`")]
    DuplicateId(String),
    #[error("`{pred}` used with {found} arguments, elsewhere with {expected}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("fact `{0}` contains a variable")]
    NonGroundFact(String),
}
