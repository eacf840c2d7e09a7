use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::parse::{Mode, Parser};
use super::term::{Atom, Term};
use super::EbgError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub head: Atom,
    #[serde(default)]
    pub body: Vec<Atom>,
}

impl Rule {
    /// Variables in head-then-body order of first appearance.
    pub fn vars(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        for a in std::iter::once(&self.head).chain(&self.body) {
            for v in a.vars() {
                if !seen.iter().any(|s| s == v) {
                    seen.push(v.to_string());
                }
            }
        }
        seen
    }

    /// A copy whose variables carry the suffix `#n`. Returns the copy and
    /// the original-to-fresh renaming.
    pub fn rename(&self, n: usize) -> (Rule, BTreeMap<String, String>) {
        let renaming: BTreeMap<String, String> = self
            .vars()
            .into_iter()
            .map(|v| {
                let base = v.split('#').next().unwrap_or(&v).to_string();
                (v, format!("{base}#{n}"))
            })
            .collect();
        let ren = |a: &Atom| {
            a.map_terms(|t| match t {
                Term::Var(v) => Term::Var(renaming[v].clone()),
                c => c.clone(),
            })
        };
        let rule = Rule {
            id: self.id.clone(),
            head: ren(&self.head),
            body: self.body.iter().map(ren).collect(),
        };
        (rule, renaming)
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.id, self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " <= " } else { " & " })?;
            write!(f, "{b}")?;
        }
        f.write_str(".")
    }
}

/// Orders ids like `R2 < R25 < S1`: digit runs compare numerically.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            ((true, x), (true, y)) => {
                let (x, y) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
                x.len().cmp(&y.len()).then_with(|| x.cmp(y))
            }
            ((_, x), (_, y)) => x.cmp(y),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

fn check_arity(
    arities: &mut BTreeMap<String, usize>,
    a: &Atom,
) -> Result<(), EbgError> {
    match arities.get(&a.pred) {
        Some(&n) if n != a.arity() => Err(EbgError::ArityMismatch {
            pred: a.pred.clone(),
            expected: n,
            found: a.arity(),
        }),
        Some(_) => Ok(()),
        None => {
            arities.insert(a.pred.clone(), a.arity());
            Ok(())
        }
    }
}

/// A set of definite clauses kept in natural id order, which is the order
/// proof search tries them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Theory {
    rules: Vec<Rule>,
    #[serde(skip)]
    arities: BTreeMap<String, usize>,
}

impl Theory {
    pub fn new(rules: Vec<Rule>) -> Result<Self, EbgError> {
        let mut ids = HashSet::new();
        let mut arities = BTreeMap::new();
        for r in &rules {
            if !ids.insert(r.id.clone()) {
                return Err(EbgError::DuplicateId(r.id.clone()));
            }
            for a in std::iter::once(&r.head).chain(&r.body) {
                check_arity(&mut arities, a)?;
            }
        }
        let mut rules = rules;
        rules.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        Ok(Theory { rules, arities })
    }

    pub fn parse(src: &str) -> Result<Self, EbgError> {
        let clauses = Parser::new(src, Mode::Rule)?.clauses()?;
        Theory::new(
            clauses
                .into_iter()
                .map(|c| Rule { id: c.id, head: c.head, body: c.body })
                .collect(),
        )
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Rules whose head predicate is `pred`, in search order.
    pub fn defining(&self, pred: &str) -> impl Iterator<Item = &Rule> {
        let pred = pred.to_string();
        self.rules.iter().filter(move |r| r.head.pred == pred)
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.arities.get(pred).copied()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl<'de> Deserialize<'de> for Theory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            rules: Vec<Rule>,
        }
        Theory::new(Raw::deserialize(d)?.rules).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for Theory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub id: String,
    pub atom: Atom,
}

/// Ground facts describing one scenario. Stored in natural id order so that
/// the order facts were observed in never changes a proof.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FactSet {
    facts: Vec<Fact>,
}

impl FactSet {
    pub fn new(facts: Vec<Fact>) -> Result<Self, EbgError> {
        let mut ids = HashSet::new();
        let mut arities = BTreeMap::new();
        for f in &facts {
            if !ids.insert(f.id.clone()) {
                return Err(EbgError::DuplicateId(f.id.clone()));
            }
            if !f.atom.is_ground() {
                return Err(EbgError::NonGroundFact(f.id.clone()));
            }
            check_arity(&mut arities, &f.atom)?;
        }
        let mut facts = facts;
        facts.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        Ok(FactSet { facts })
    }

    pub fn parse(src: &str) -> Result<Self, EbgError> {
        let clauses = Parser::new(src, Mode::Ground)?.clauses()?;
        let mut facts = Vec::with_capacity(clauses.len());
        for c in clauses {
            if !c.body.is_empty() {
                return Err(EbgError::Syntax {
                    line: c.line,
                    col: 1,
                    message: format!("fact `{}` has a body", c.id),
                });
            }
            facts.push(Fact { id: c.id, atom: c.head });
        }
        FactSet::new(facts)
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn get(&self, id: &str) -> Option<&Fact> {
        self.facts.iter().find(|f| f.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.facts.iter().map(|f| f.id.as_str())
    }

    pub fn mentions_pred(&self, pred: &str) -> bool {
        self.facts.iter().any(|f| f.atom.pred == pred)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

impl<'de> Deserialize<'de> for FactSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            facts: Vec<Fact>,
        }
        FactSet::new(Raw::deserialize(d)?.facts).map_err(serde::de::Error::custom)
    }
}
