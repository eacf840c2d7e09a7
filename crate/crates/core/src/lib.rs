//! Personalizing information spaces by partial evaluation.
//!
//! * [`ispace`]: programs over variable tests, their surface syntax, JSON
//!   form and site-map ingestion.
//! * [`specializer`]: partial evaluation against partial input, and the
//!   specialization order between programs.
//! * [`factorization`]: whether a program supports an activity through
//!   partial input.
//! * [`ebg`]: Horn-clause theories and explanation trees.
//! * [`operationalizer`]: generalizing explanations, cutting them, and
//!   compiling the result into programs.
//! * [`service`]: mixed-initiative browsing sessions.

pub mod ebg;
pub mod factorization;
pub mod ispace;
pub mod operationalizer;
pub mod service;
pub mod specializer;

pub use ispace::{parse, serialize, Assignment, Decision, Node, Program, Test};
pub use ebg::{explain, explain_all, unused_facts, verify_explanation, Atom, ExplanationTree, FactSet, Limits, Theory};
pub use factorization::{classify, evaluate_coverage, Activity, CoverageReport, Verdict};
pub use ispace::{ingest_sitemap, IspaceError, SiteNode};
pub use operationalizer::{
    assess_operationality, cut, generalize, generate_model, ContentBinding, FrontierSpec,
    OperationalizedExplanation,
};
pub use service::{ServiceError, SessionStore, View};
pub use specializer::{specialize, specializes_to, SpecializationResult, SpecializeError};
