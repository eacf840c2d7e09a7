use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::term::{Atom, Substitution};
use super::theory::{FactSet, Theory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProofStep {
    Fact {
        fact: String,
    },
    Rule {
        rule: String,
        /// Rule variables to the terms they took at this node.
        subst: Substitution,
        children: Vec<ExplanationTree>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationTree {
    pub atom: Atom,
    #[serde(flatten)]
    pub step: ProofStep,
}

impl ExplanationTree {
    pub fn fact(atom: Atom, id: impl Into<String>) -> Self {
        ExplanationTree {
            atom,
            step: ProofStep::Fact { fact: id.into() },
        }
    }

    pub fn children(&self) -> &[ExplanationTree] {
        match &self.step {
            ProofStep::Fact { .. } => &[],
            ProofStep::Rule { children, .. } => children,
        }
    }

    /// Fact ids at the leaves, left to right.
    pub fn fact_leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let ProofStep::Fact { fact } = &t.step {
                out.push(fact.as_str());
            }
        });
        out
    }

    /// Rule ids in preorder.
    pub fn rule_ids(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let ProofStep::Rule { rule, .. } = &t.step {
                out.push(rule.as_str());
            }
        });
        out
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a ExplanationTree)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&ExplanationTree> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i)?.at(rest),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut ExplanationTree> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => match &mut self.step {
                ProofStep::Fact { .. } => None,
                ProofStep::Rule { children, .. } => children.get_mut(i)?.at_mut(rest),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }
}

/// Why a tree failed verification, and where: `path` lists child indices
/// from the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyFailure {
    pub path: Vec<usize>,
    pub reason: String,
}

impl std::fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "at {:?}: {}", self.path, self.reason)
    }
}

/// Checks every node against `theory` and `facts`: rule heads and bodies
/// must match under each node's substitution, and every leaf must be a
/// fact verbatim.
pub fn verify_explanation(
    theory: &Theory,
    facts: &FactSet,
    tree: &ExplanationTree,
) -> Result<(), VerifyFailure> {
    let mut path = Vec::new();
    verify_at(theory, facts, tree, &mut path)
}

fn verify_at(
    theory: &Theory,
    facts: &FactSet,
    tree: &ExplanationTree,
    path: &mut Vec<usize>,
) -> Result<(), VerifyFailure> {
    let fail = |path: &Vec<usize>, reason: String| {
        Err(VerifyFailure {
            path: path.clone(),
            reason,
        })
    };
    match &tree.step {
        ProofStep::Fact { fact } => match facts.get(fact) {
            None => fail(path, format!("unknown fact `{fact}`")),
            Some(f) if f.atom != tree.atom => fail(
                path,
                format!("fact `{fact}` is {} but the node claims {}", f.atom, tree.atom),
            ),
            Some(_) => Ok(()),
        },
        ProofStep::Rule { rule, subst, children } => {
            let Some(r) = theory.rule(rule) else {
                return fail(path, format!("unknown rule `{rule}`"));
            };
            let head = subst.apply(&r.head);
            if head != tree.atom {
                return fail(path, format!("rule `{rule}` concludes {head}, not {}", tree.atom));
            }
            if children.len() != r.body.len() {
                return fail(
                    path,
                    format!("rule `{rule}` has {} premises, node has {}", r.body.len(), children.len()),
                );
            }
            for (i, (lit, child)) in r.body.iter().zip(children).enumerate() {
                let want = subst.apply(lit);
                path.push(i);
                if want != child.atom {
                    return fail(path, format!("expected {want}, found {}", child.atom));
                }
                verify_at(theory, facts, child, path)?;
                path.pop();
            }
            Ok(())
        }
    }
}

/// Facts the explanation never uses.
pub fn unused_facts(tree: &ExplanationTree, facts: &FactSet) -> BTreeSet<String> {
    let used: BTreeSet<&str> = tree.fact_leaves().into_iter().collect();
    facts
        .ids()
        .filter(|id| !used.contains(id))
        .map(str::to_string)
        .collect()
}
