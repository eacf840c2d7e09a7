//! Is a representation well-factored for an activity?
//!
//! An activity is *personable* when its input can be expressed as partial
//! input and leaves something to browse; *under-factored* when it demands a
//! top-down order the program cannot present; *over-factored* when the
//! input decides everything, so only a complete evaluation serves it.

use serde::{Deserialize, Serialize};

use crate::ispace::{Assignment, Node, Program};
use crate::specializer::{specialize, SpecializeError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub id: String,
    #[serde(default)]
    pub given: Assignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_root_order: Option<Vec<String>>,
    pub expects_interaction: bool,
    /// Free text; how the scenario was translated into this record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Activity {
    pub fn new(id: impl Into<String>, given: Assignment, expects_interaction: bool) -> Self {
        Activity {
            id: id.into(),
            given,
            required_root_order: None,
            expects_interaction,
            note: None,
        }
    }

    pub fn with_order(mut self, order: &[&str]) -> Self {
        self.required_root_order = Some(order.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(order) = &self.required_root_order {
            let mut seen = std::collections::HashSet::new();
            for k in order {
                if !seen.insert(k) {
                    return Err(format!("activity `{}` repeats `{k}` in its order", self.id));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Personable,
    UnderFactored,
    OverFactored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// The residual the activity leaves to browse (or the complete result).
    Residual(Program),
    /// The ordering demand the residual cannot meet.
    Key(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorizationVerdict {
    pub activity: String,
    pub verdict: Verdict,
    pub witness: Witness,
}

/// First order demand not met by `node` at `depth`, if any. Every chain met
/// at nesting level k must range over `order[k]`; a path that ends before
/// the order is exhausted cannot present the remaining levels either.
fn order_violation<'a>(p: &Program, node: &Node, order: &'a [String], depth: usize) -> Option<&'a str> {
    if depth >= order.len() {
        return None;
    }
    match node {
        Node::Content { .. } => Some(&order[depth]),
        Node::Seq { children } => children
            .iter()
            .find_map(|c| order_violation(p, c, order, depth)),
        Node::Chain { arms } => {
            if p.chain_key(arms).as_deref() != Some(order[depth].as_str()) {
                return Some(&order[depth]);
            }
            arms.iter()
                .find_map(|a| order_violation(p, &a.body, order, depth + 1))
        }
    }
}

pub fn classify(p: &Program, act: &Activity) -> Result<FactorizationVerdict, SpecializeError> {
    let residual = specialize(p, &act.given)?.residual;
    let verdict = |verdict, witness| FactorizationVerdict {
        activity: act.id.clone(),
        verdict,
        witness,
    };
    if let Some(order) = &act.required_root_order {
        if let Some(key) = order_violation(&residual, residual.root(), order, 0) {
            return Ok(verdict(Verdict::UnderFactored, Witness::Key(key.to_string())));
        }
    }
    if residual.is_complete() {
        return Ok(verdict(Verdict::OverFactored, Witness::Residual(residual)));
    }
    Ok(verdict(Verdict::Personable, Witness::Residual(residual)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageEntry {
    pub activity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub total: usize,
    pub personable: usize,
    pub complete_only: usize,
    pub unsupported: usize,
    pub activities: Vec<CoverageEntry>,
}

impl CoverageReport {
    fn ratio(&self, n: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            n as f64 / self.total as f64
        }
    }

    pub fn personable_ratio(&self) -> f64 {
        self.ratio(self.personable)
    }

    pub fn complete_only_ratio(&self) -> f64 {
        self.ratio(self.complete_only)
    }

    pub fn unsupported_ratio(&self) -> f64 {
        self.ratio(self.unsupported)
    }
}

/// Classifies every activity. Activities that fail to specialize count as
/// unsupported and keep their error text.
pub fn evaluate_coverage(p: &Program, acts: &[Activity]) -> CoverageReport {
    let mut report = CoverageReport {
        total: acts.len(),
        personable: 0,
        complete_only: 0,
        unsupported: 0,
        activities: Vec::with_capacity(acts.len()),
    };
    for act in acts {
        let outcome = act
            .validate()
            .and_then(|_| classify(p, act).map_err(|e| e.to_string()));
        let entry = match outcome {
            Ok(v) => {
                match v.verdict {
                    Verdict::Personable => report.personable += 1,
                    Verdict::OverFactored => report.complete_only += 1,
                    Verdict::UnderFactored => report.unsupported += 1,
                }
                CoverageEntry {
                    activity: act.id.clone(),
                    verdict: Some(v.verdict),
                    witness_key: match v.witness {
                        Witness::Key(k) => Some(k),
                        Witness::Residual(_) => None,
                    },
                    error: None,
                }
            }
            Err(e) => {
                report.unsupported += 1;
                CoverageEntry {
                    activity: act.id.clone(),
                    verdict: None,
                    witness_key: None,
                    error: Some(e),
                }
            }
        };
        report.activities.push(entry);
    }
    report
}
