//! From one explained scenario to a personalizable program: generalize the
//! proof, decide which part stays fixed, and compile the rest into tests.

mod assess;
mod cut;
mod generalize;
mod generate;

use thiserror::Error;

pub use assess::{assess_operationality, OperationalityRow};
pub use cut::{cut, FixedNode, FrontierSpec, OperationalizedExplanation};
pub use generalize::{generalize, instantiate, IDENTITY_VAR};
pub use generate::{
    generate_model, generate_model_with, normalize_value, selection_key, Binding, ContentBinding,
    GenerateOptions, GeneratedModel, EXPLANATION_KEY, PLACEHOLDER_PREFIX,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperationalizeError {
    #[error("malformed explanation tree {0}")]
    MalformedTree(String),
    #[error("tree rooted at {0} still names its scenario; generalize it first")]
    NotGeneralized(String),
    #[error("frontier `{0}` names no node of the tree")]
    FrontierMiss(String),
    #[error("no rule or selection expands {0}")]
    UnboundSubgoal(String),
    #[error("no binding gives a value for `{0}`")]
    EmptyDomain(String),
    #[error("binding for `{0}` is reached by no path")]
    UnreachableBinding(String),
    #[error("expansion of {0} exceeds the depth limit")]
    RecursionLimit(String),
    #[error("model would exceed {0} paths")]
    TooLarge(usize),
    #[error("explanation id `{0}` used twice")]
    DuplicateExplanation(String),
    #[error("invalid binding: {0}")]
    InvalidBinding(String),
    #[error("{0}")]
    Invalid(String),
}
