//! Depth-first SLD resolution that records the proof it finds.
//!
//! For each goal the search tries facts (in id order) before rules (in id
//! order), so results are deterministic and independent of input order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::term::{Atom, Substitution, Term};
use super::theory::{FactSet, Theory};
use super::tree::{ExplanationTree, ProofStep};

pub const DEFAULT_DEPTH: usize = 64;
pub const DEFAULT_SOLUTIONS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Longest root-to-leaf chain of rule applications.
    pub depth: usize,
    /// Stop after this many proofs.
    pub solutions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            depth: DEFAULT_DEPTH,
            solutions: DEFAULT_SOLUTIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProveError {
    #[error("predicate `{0}` is defined by neither the theory nor the facts")]
    UnknownPredicate(String),
    #[error("`{pred}` used with {found} arguments, declared with {expected}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    /// The search was cut off by the depth limit. Proofs found before the
    /// cut are kept; others may exist.
    #[error("depth limit {limit} reached; {} proofs found before the cut", partial.len())]
    DepthExceeded {
        limit: usize,
        partial: Vec<ExplanationTree>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Go,
    Stop,
}

/// A proof under construction. Atoms still contain search variables; they
/// are resolved once the whole proof succeeds.
#[derive(Clone)]
enum Partial {
    Fact {
        goal: Atom,
        id: String,
    },
    Rule {
        goal: Atom,
        id: String,
        renaming: BTreeMap<String, String>,
        children: Vec<Partial>,
    },
}

impl Partial {
    fn finish(&self, s: &Substitution) -> ExplanationTree {
        match self {
            Partial::Fact { goal, id } => ExplanationTree::fact(s.apply(goal), id.clone()),
            Partial::Rule { goal, id, renaming, children } => {
                let mut subst = Substitution::new();
                for (orig, fresh) in renaming {
                    subst.insert(orig.clone(), s.resolve(&Term::var(fresh.clone())));
                }
                ExplanationTree {
                    atom: s.apply(goal),
                    step: ProofStep::Rule {
                        rule: id.clone(),
                        subst,
                        children: children.iter().map(|c| c.finish(s)).collect(),
                    },
                }
            }
        }
    }
}

type Cont<'k, T> = dyn FnMut(&mut Search<'_>, &Substitution, T) -> Flow + 'k;

struct Search<'a> {
    theory: &'a Theory,
    facts: &'a FactSet,
    limits: Limits,
    fresh: usize,
    cut: bool,
}

impl Search<'_> {
    fn goal(&mut self, goal: &Atom, s: &Substitution, depth: usize, k: &mut Cont<'_, Partial>) -> Flow {
        let facts = self.facts;
        for f in facts.facts() {
            let mut s2 = s.clone();
            if s2.unify_atoms(goal, &f.atom) {
                let p = Partial::Fact { goal: goal.clone(), id: f.id.clone() };
                if k(self, &s2, p) == Flow::Stop {
                    return Flow::Stop;
                }
            }
        }
        let theory = self.theory;
        for rule in theory.defining(&goal.pred) {
            self.fresh += 1;
            let (r, renaming) = rule.rename(self.fresh);
            let mut s2 = s.clone();
            if !s2.unify_atoms(goal, &r.head) {
                continue;
            }
            if depth >= self.limits.depth {
                self.cut = true;
                continue;
            }
            let flow = self.conj(&r.body, &s2, depth + 1, Vec::new(), &mut |this, s3, children| {
                let p = Partial::Rule {
                    goal: goal.clone(),
                    id: r.id.clone(),
                    renaming: renaming.clone(),
                    children,
                };
                k(this, s3, p)
            });
            if flow == Flow::Stop {
                return Flow::Stop;
            }
        }
        Flow::Go
    }

    fn conj(
        &mut self,
        goals: &[Atom],
        s: &Substitution,
        depth: usize,
        done: Vec<Partial>,
        k: &mut Cont<'_, Vec<Partial>>,
    ) -> Flow {
        match goals.split_first() {
            None => k(self, s, done),
            Some((g, rest)) => self.goal(g, s, depth, &mut |this, s2, p| {
                let mut done = done.clone();
                done.push(p);
                this.conj(rest, s2, depth, done, k)
            }),
        }
    }
}

fn check_goal(theory: &Theory, facts: &FactSet, goal: &Atom) -> Result<(), ProveError> {
    let declared = theory.arity(&goal.pred).or_else(|| {
        facts
            .facts()
            .iter()
            .find(|f| f.atom.pred == goal.pred)
            .map(|f| f.atom.arity())
    });
    match declared {
        None => Err(ProveError::UnknownPredicate(goal.pred.clone())),
        Some(n) if n != goal.arity() => Err(ProveError::ArityMismatch {
            pred: goal.pred.clone(),
            expected: n,
            found: goal.arity(),
        }),
        Some(_) => Ok(()),
    }
}

fn search(
    theory: &Theory,
    facts: &FactSet,
    goal: &Atom,
    limits: Limits,
    max: usize,
) -> Result<Vec<ExplanationTree>, ProveError> {
    check_goal(theory, facts, goal)?;
    let mut found = Vec::new();
    let mut st = Search {
        theory,
        facts,
        limits,
        fresh: 0,
        cut: false,
    };
    if max > 0 {
        st.goal(goal, &Substitution::new(), 0, &mut |_, s, p| {
            found.push(p.finish(s));
            if found.len() >= max {
                Flow::Stop
            } else {
                Flow::Go
            }
        });
    }
    // A cut that happened after the requested proofs were found did not
    // hide anything the caller asked for.
    if st.cut && found.len() < max {
        return Err(ProveError::DepthExceeded {
            limit: limits.depth,
            partial: found,
        });
    }
    Ok(found)
}

/// The first proof of `goal` in search order, if one exists.
pub fn explain(
    theory: &Theory,
    facts: &FactSet,
    goal: &Atom,
    limits: Limits,
) -> Result<Option<ExplanationTree>, ProveError> {
    match search(theory, facts, goal, limits, 1) {
        Ok(mut v) => Ok(v.pop()),
        Err(ProveError::DepthExceeded { partial, .. }) if !partial.is_empty() => {
            Ok(partial.into_iter().next())
        }
        Err(e) => Err(e),
    }
}

/// Every proof of `goal`, up to `limits.solutions`, in search order.
pub fn explain_all(
    theory: &Theory,
    facts: &FactSet,
    goal: &Atom,
    limits: Limits,
) -> Result<Vec<ExplanationTree>, ProveError> {
    search(theory, facts, goal, limits, limits.solutions)
}
