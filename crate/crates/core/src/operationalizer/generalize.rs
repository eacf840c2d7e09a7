use std::collections::{BTreeMap, BTreeSet};

use crate::ebg::{Atom, ExplanationTree, FactSet, ProofStep, Substitution, Term, Theory};

use super::OperationalizeError;

/// The identity variable every generalized goal is rooted at.
pub const IDENTITY_VAR: &str = "x";

/// Regression skeleton: atoms still over search variables.
enum Skel {
    Fact {
        atom: Atom,
        id: String,
    },
    Rule {
        atom: Atom,
        id: String,
        renaming: BTreeMap<String, String>,
        children: Vec<Skel>,
    },
}

fn malformed(path: &[usize], why: impl std::fmt::Display) -> OperationalizeError {
    OperationalizeError::MalformedTree(format!("at {path:?}: {why}"))
}

fn regress(
    node: &ExplanationTree,
    pattern: Atom,
    theory: &Theory,
    s: &mut Substitution,
    fresh: &mut usize,
    path: &mut Vec<usize>,
) -> Result<Skel, OperationalizeError> {
    match &node.step {
        ProofStep::Fact { fact } => Ok(Skel::Fact {
            atom: pattern,
            id: fact.clone(),
        }),
        ProofStep::Rule { rule, children, .. } => {
            let r = theory
                .rule(rule)
                .ok_or_else(|| malformed(path, format!("unknown rule `{rule}`")))?;
            *fresh += 1;
            let (r, renaming) = r.rename(*fresh);
            if !s.unify_atoms(&pattern, &r.head) {
                return Err(malformed(path, format!("{pattern} does not match the head of `{rule}`")));
            }
            if children.len() != r.body.len() {
                return Err(malformed(path, format!("`{rule}` has {} premises", r.body.len())));
            }
            let mut out = Vec::with_capacity(children.len());
            for (i, (child, lit)) in children.iter().zip(&r.body).enumerate() {
                path.push(i);
                out.push(regress(child, lit.clone(), theory, s, fresh, path)?);
                path.pop();
            }
            Ok(Skel::Rule {
                atom: pattern,
                id: r.id,
                renaming,
                children: out,
            })
        }
    }
}

/// Gives search variables readable names: the root's first argument becomes
/// `x`, the rest keep their rule names, numbered when two would clash.
struct Namer {
    names: BTreeMap<String, String>,
    taken: BTreeSet<String>,
}

impl Namer {
    fn name(&mut self, var: &str) -> String {
        if let Some(n) = self.names.get(var) {
            return n.clone();
        }
        let base = var.split('#').next().unwrap_or(var);
        let mut name = base.to_string();
        let mut i = 2;
        while self.taken.contains(&name) {
            name = format!("{base}{i}");
            i += 1;
        }
        self.taken.insert(name.clone());
        self.names.insert(var.to_string(), name.clone());
        name
    }

    fn term(&mut self, s: &Substitution, t: &Term) -> Term {
        match s.resolve(t) {
            Term::Var(v) => Term::Var(self.name(&v)),
            c => c,
        }
    }

    fn atom(&mut self, s: &Substitution, a: &Atom) -> Atom {
        a.map_terms(|t| self.term(s, t))
    }
}

fn finish(skel: &Skel, s: &Substitution, namer: &mut Namer) -> ExplanationTree {
    match skel {
        Skel::Fact { atom, id } => ExplanationTree::fact(namer.atom(s, atom), id.clone()),
        Skel::Rule { atom, id, renaming, children } => {
            let atom = namer.atom(s, atom);
            let mut subst = Substitution::new();
            for (orig, fresh) in renaming {
                subst.insert(orig.clone(), namer.term(s, &Term::var(fresh.clone())));
            }
            ExplanationTree {
                atom,
                step: ProofStep::Rule {
                    rule: id.clone(),
                    subst,
                    children: children.iter().map(|c| finish(c, s, namer)).collect(),
                },
            }
        }
    }
}

/// Identity elimination followed by regression: rebuilds the proof from
/// fresh copies of its rules so that only constants the rules themselves
/// impose survive. Fact leaves keep the shape their parent rule requires.
pub fn generalize(tree: &ExplanationTree, theory: &Theory) -> Result<ExplanationTree, OperationalizeError> {
    if let ProofStep::Fact { fact } = &tree.step {
        // Nothing to regress through; only the identity goes.
        let identity = tree.atom.args.first().cloned();
        let atom = tree.atom.map_terms(|t| {
            if Some(t) == identity.as_ref() {
                Term::var(IDENTITY_VAR)
            } else {
                t.clone()
            }
        });
        return Ok(ExplanationTree::fact(atom, fact.clone()));
    }
    let pattern = Atom::new(
        tree.atom.pred.clone(),
        (0..tree.atom.arity()).map(|i| Term::var(format!("a{i}#0"))).collect(),
    );
    let mut s = Substitution::new();
    let mut fresh = 0;
    let skel = regress(tree, pattern.clone(), theory, &mut s, &mut fresh, &mut Vec::new())?;
    let mut namer = Namer {
        names: BTreeMap::new(),
        taken: BTreeSet::new(),
    };
    if let Some(Term::Var(v)) = pattern.args.first().map(|t| s.resolve(t)) {
        namer.taken.insert(IDENTITY_VAR.to_string());
        namer.names.insert(v, IDENTITY_VAR.to_string());
    }
    Ok(finish(&skel, &s, &mut namer))
}

fn apply_tree(tree: &ExplanationTree, s: &Substitution) -> ExplanationTree {
    ExplanationTree {
        atom: s.apply(&tree.atom),
        step: match &tree.step {
            ProofStep::Fact { fact } => ProofStep::Fact { fact: fact.clone() },
            ProofStep::Rule { rule, subst, children } => {
                let mut out = Substitution::new();
                for (v, t) in subst.iter() {
                    out.insert(v.clone(), s.resolve(t));
                }
                ProofStep::Rule {
                    rule: rule.clone(),
                    subst: out,
                    children: children.iter().map(|c| apply_tree(c, s)).collect(),
                }
            }
        },
    }
}

/// Binds a generalized tree to a scenario by matching each fact leaf with
/// the fact it names. `None` if some leaf cannot match.
pub fn instantiate(tree: &ExplanationTree, facts: &FactSet) -> Option<ExplanationTree> {
    let mut s = Substitution::new();
    let mut ok = true;
    tree.walk(&mut |n| {
        if let ProofStep::Fact { fact } = &n.step {
            ok &= facts
                .get(fact)
                .is_some_and(|f| s.unify_atoms(&n.atom, &f.atom));
        }
    });
    ok.then(|| apply_tree(tree, &s))
}
