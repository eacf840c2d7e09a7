use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ebg::{Atom, ExplanationTree, ProofStep};

use super::OperationalizeError;

/// Where the cutting plane goes. Nodes on the plane become subgoals the
/// user supplies; everything above stays fixed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", content = "arg", rename_all = "snake_case")]
pub enum FrontierSpec {
    /// Everything open: the goal itself is the only subgoal.
    AtRoot,
    /// Everything fixed: the whole proof is frozen.
    AtLeaves,
    /// The topmost nodes whose predicate is named.
    Predicates(BTreeSet<String>),
    /// Every node at this depth (the root is depth 0).
    Depth(usize),
}

impl FrontierSpec {
    pub fn predicates<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        FrontierSpec::Predicates(names.into_iter().map(str::to_string).collect())
    }
}

impl fmt::Display for FrontierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrontierSpec::AtRoot => f.write_str("root"),
            FrontierSpec::AtLeaves => f.write_str("leaves"),
            FrontierSpec::Predicates(ps) => {
                write!(f, "preds:{}", ps.iter().cloned().collect::<Vec<_>>().join(","))
            }
            FrontierSpec::Depth(k) => write!(f, "depth:{k}"),
        }
    }
}

impl FromStr for FrontierSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "root" => Ok(FrontierSpec::AtRoot),
            "leaves" => Ok(FrontierSpec::AtLeaves),
            other => {
                if let Some(ps) = other.strip_prefix("preds:") {
                    let set: BTreeSet<String> = ps
                        .split(',')
                        .map(str::trim)
                        .filter(|p| !p.is_empty())
                        .map(str::to_string)
                        .collect();
                    if set.is_empty() {
                        return Err("`preds:` needs at least one predicate".into());
                    }
                    Ok(FrontierSpec::Predicates(set))
                } else if let Some(k) = other.strip_prefix("depth:") {
                    k.parse()
                        .map(FrontierSpec::Depth)
                        .map_err(|_| format!("bad depth `{k}`"))
                } else {
                    Err(format!(
                        "unknown frontier `{other}` (expected root, leaves, preds:a,b or depth:k)"
                    ))
                }
            }
        }
    }
}

/// The part of a generalized proof above the cutting plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedNode {
    Rule {
        atom: Atom,
        rule: String,
        children: Vec<FixedNode>,
    },
    Fact {
        atom: Atom,
        fact: String,
    },
    /// A subgoal on the plane.
    Open { atom: Atom },
}

impl FixedNode {
    fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a FixedNode)) {
        f(self);
        if let FixedNode::Rule { children, .. } = self {
            for c in children {
                c.walk(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationalizedExplanation {
    pub id: String,
    pub generalized_goal: Atom,
    /// `None` when the plane passes through the root.
    pub fixed: Option<FixedNode>,
    pub open_subgoals: Vec<Atom>,
}

impl OperationalizedExplanation {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Rule ids in the fixed region, preorder.
    pub fn fixed_rules(&self) -> Vec<&str> {
        let mut out = Vec::new();
        if let Some(f) = &self.fixed {
            f.walk(&mut |n| {
                if let FixedNode::Rule { rule, .. } = n {
                    out.push(rule.as_str());
                }
            });
        }
        out
    }

    /// Atoms of fixed fact leaves, left to right.
    pub fn fixed_leaves(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        if let Some(f) = &self.fixed {
            f.walk(&mut |n| {
                if let FixedNode::Fact { atom, .. } = n {
                    out.push(atom);
                }
            });
        }
        out
    }

    pub fn is_frozen(&self) -> bool {
        self.open_subgoals.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serializes")
    }
}

fn on_plane(spec: &FrontierSpec, node: &ExplanationTree, depth: usize) -> bool {
    match spec {
        FrontierSpec::AtRoot => depth == 0,
        FrontierSpec::AtLeaves => false,
        FrontierSpec::Predicates(ps) => ps.contains(&node.atom.pred),
        FrontierSpec::Depth(k) => depth == *k,
    }
}

fn build(spec: &FrontierSpec, node: &ExplanationTree, depth: usize, open: &mut Vec<Atom>) -> FixedNode {
    if on_plane(spec, node, depth) {
        open.push(node.atom.clone());
        return FixedNode::Open { atom: node.atom.clone() };
    }
    match &node.step {
        ProofStep::Fact { fact } => FixedNode::Fact {
            atom: node.atom.clone(),
            fact: fact.clone(),
        },
        ProofStep::Rule { rule, children, .. } => FixedNode::Rule {
            atom: node.atom.clone(),
            rule: rule.clone(),
            children: children.iter().map(|c| build(spec, c, depth + 1, open)).collect(),
        },
    }
}

/// Draws the cutting plane through a generalized tree.
pub fn cut(tree: &ExplanationTree, spec: &FrontierSpec) -> Result<OperationalizedExplanation, OperationalizeError> {
    if matches!(tree.atom.args.first(), Some(a) if !a.is_var()) {
        return Err(OperationalizeError::NotGeneralized(tree.atom.to_string()));
    }
    if let FrontierSpec::Predicates(ps) = spec {
        if ps.is_empty() {
            return Err(OperationalizeError::FrontierMiss(spec.to_string()));
        }
    }
    let mut open = Vec::new();
    let fixed = build(spec, tree, 0, &mut open);
    if matches!(spec, FrontierSpec::Predicates(_)) && open.is_empty() {
        return Err(OperationalizeError::FrontierMiss(spec.to_string()));
    }
    Ok(OperationalizedExplanation {
        id: tree.atom.pred.clone(),
        generalized_goal: tree.atom.clone(),
        fixed: match fixed {
            FixedNode::Open { .. } => None,
            f => Some(f),
        },
        open_subgoals: open,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ebg::{explain, FactSet, Limits, Theory};
    use crate::operationalizer::generalize;

    fn nancy_general() -> ExplanationTree {
        let t = Theory::parse(include_str!("../../fixtures/politicalinfo.theory")).unwrap();
        let f = FactSet::parse(include_str!("../../fixtures/nancy.facts")).unwrap();
        let tree = explain(&t, &f, &crate::ebg::Atom::parse_ground("politicalinfo(x47)").unwrap(), Limits::default())
            .unwrap()
            .unwrap();
        generalize(&tree, &t).unwrap()
    }

    fn strings(atoms: &[Atom]) -> Vec<String> {
        atoms.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn member_and_aspect() {
        let op = cut(&nancy_general(), &FrontierSpec::predicates(["member", "aspect"])).unwrap();
        assert_eq!(op.fixed_rules(), ["R1", "R2"]);
        assert_eq!(
            op.fixed_leaves().iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            [r#"officeselect(x, "Congress")"#]
        );
        assert_eq!(strings(&op.open_subgoals), ["member(x)", "aspect(x)"]);
    }

    #[test]
    fn extremes() {
        let g = nancy_general();
        let root = cut(&g, &FrontierSpec::AtRoot).unwrap();
        assert_eq!(strings(&root.open_subgoals), ["politicalinfo(x)"]);
        assert!(root.fixed.is_none());
        let leaves = cut(&g, &FrontierSpec::AtLeaves).unwrap();
        assert!(leaves.is_frozen());
        assert_eq!(leaves.fixed_rules(), ["R1", "R2", "R26", "R32", "R49"]);
        assert_eq!(cut(&g, &FrontierSpec::Depth(0)).unwrap(), root);
        assert_eq!(cut(&g, &FrontierSpec::Depth(99)).unwrap().fixed, leaves.fixed);
        let d2 = cut(&g, &FrontierSpec::Depth(2)).unwrap();
        assert_eq!(
            strings(&d2.open_subgoals),
            [r#"officeselect(x, "Congress")"#, "member(x)", "aspect(x)"]
        );
    }

    #[test]
    fn misses_and_ground_trees() {
        let g = nancy_general();
        assert!(matches!(
            cut(&g, &FrontierSpec::predicates(["nosuch"])),
            Err(OperationalizeError::FrontierMiss(_))
        ));
        let ground = ExplanationTree::fact(Atom::parse_ground("p(a)").unwrap(), "F1");
        assert!(matches!(
            cut(&ground, &FrontierSpec::AtLeaves),
            Err(OperationalizeError::NotGeneralized(_))
        ));
    }

    #[test]
    fn spec_syntax() {
        for s in ["root", "leaves", "preds:aspect,member", "depth:3"] {
            assert_eq!(s.parse::<FrontierSpec>().unwrap().to_string(), s);
        }
        assert!("preds:".parse::<FrontierSpec>().is_err());
        assert!("depth:x".parse::<FrontierSpec>().is_err());
        assert!("top".parse::<FrontierSpec>().is_err());
        let json = serde_json::to_string(&FrontierSpec::predicates(["member"])).unwrap();
        assert_eq!(json, r#"{"mode":"predicates","arg":["member"]}"#);
    }

    #[test]
    fn json_round_trip() {
        let op = cut(&nancy_general(), &FrontierSpec::predicates(["member", "aspect"])).unwrap();
        let back: OperationalizedExplanation = serde_json::from_str(&op.to_json()).unwrap();
        assert_eq!(back, op);
    }
}
