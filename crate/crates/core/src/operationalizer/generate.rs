//! Compiles operationalized explanations into programs.
//!
//! Each open subgoal expands into every way the theory can complete it.
//! A body literal `<key>select(x, V)` is a selection and becomes the test
//! `Key=V`. When a subgoal has several defining rules, a rule whose body
//! starts with another subgoal is labeled by a flag named after it
//! (`Senator`), and the flags of one subgoal form a mutex group named after
//! that subgoal (`Member`). Conjunctions nest in body order.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::ebg::{Atom, Substitution, Term, Theory, DEFAULT_DEPTH};
use crate::ispace::{Arm, Assignment, Decision, MutexGroup, Node, Program, Test};

use super::{OperationalizeError, OperationalizedExplanation};

/// Key of the top-level chain that joins several explanations.
pub const EXPLANATION_KEY: &str = "explanation";
/// Content refs of unbound leaves start with this.
pub const PLACEHOLDER_PREFIX: &str = "pending:";

/// Guard against theories whose expansion explodes.
const MAX_PATHS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub tuple: Assignment,
    pub page: String,
    #[serde(default)]
    pub payload: String,
}

/// Content for complete parameter tuples.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ContentBinding {
    bindings: Vec<Binding>,
    #[serde(skip)]
    tuples: Vec<BTreeSet<Test>>,
}

impl ContentBinding {
    pub fn new(bindings: Vec<Binding>) -> Result<Self, OperationalizeError> {
        let mut tuples = Vec::with_capacity(bindings.len());
        let mut pages = HashSet::new();
        for b in &bindings {
            let mut tuple = BTreeSet::new();
            for (k, d) in b.tuple.iter() {
                let Decision::Chosen(v) = d else {
                    return Err(OperationalizeError::InvalidBinding(format!(
                        "`{}` denies values of `{k}`; tuples only choose",
                        b.page
                    )));
                };
                let t = Test::new(k.as_str(), normalize_value(v))
                    .map_err(|e| OperationalizeError::InvalidBinding(e.to_string()))?;
                tuple.insert(t);
            }
            if tuples.contains(&tuple) {
                return Err(OperationalizeError::InvalidBinding(format!(
                    "two bindings for the tuple of `{}`",
                    b.page
                )));
            }
            if !pages.insert(b.page.as_str()) || b.page.is_empty() {
                return Err(OperationalizeError::InvalidBinding(format!("bad or repeated page `{}`", b.page)));
            }
            tuples.push(tuple);
        }
        Ok(ContentBinding { bindings, tuples })
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Values the tuples give `key`, sorted.
    pub fn domain(&self, key: &str) -> BTreeSet<String> {
        self.tuples
            .iter()
            .flatten()
            .filter(|t| t.key == key)
            .map(|t| t.value.clone())
            .collect()
    }
}

impl<'de> Deserialize<'de> for ContentBinding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ContentBinding::new(Vec::<Binding>::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateOptions {
    /// Fail on subgoals the theory cannot expand, selections without a
    /// domain, and bindings no path reaches, instead of leaving them open.
    pub strict: bool,
    pub depth: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            strict: false,
            depth: DEFAULT_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratedModel {
    pub program: Program,
    /// Content refs of placeholder leaves.
    pub placeholders: Vec<String>,
    /// Pages of bindings no path reaches.
    pub unreached: Vec<String>,
}

/// Test key for a selection predicate: `stateselect` gives `State`.
pub fn selection_key(a: &Atom) -> Option<String> {
    let stem = a.pred.strip_suffix("select")?;
    (a.arity() == 2 && !stem.is_empty()).then(|| capitalize(stem))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

/// Test values drop everything but letters and digits: `"Junior Seat"`
/// becomes `JuniorSeat`.
pub fn normalize_value(v: &str) -> String {
    let out: String = v.chars().filter(|c| c.is_alphanumeric()).collect();
    if out.is_empty() {
        v.to_string()
    } else {
        out
    }
}

#[derive(Clone)]
struct Alt {
    tests: Vec<Test>,
    s: Substitution,
}

struct Expander<'a> {
    theory: &'a Theory,
    bindings: &'a ContentBinding,
    opts: GenerateOptions,
    fresh: usize,
    groups: BTreeMap<String, BTreeSet<Test>>,
}

fn invalid(e: impl std::fmt::Display) -> OperationalizeError {
    OperationalizeError::Invalid(e.to_string())
}

impl Expander<'_> {
    fn goal(&mut self, atom: &Atom, s: &Substitution, depth: usize) -> Result<Vec<Alt>, OperationalizeError> {
        if let Some(key) = selection_key(atom) {
            return match s.resolve(&atom.args[1]) {
                Term::Const(c) => Ok(vec![Alt {
                    tests: vec![Test::new(key, normalize_value(&c)).map_err(invalid)?],
                    s: s.clone(),
                }]),
                Term::Var(v) => {
                    let domain = self.bindings.domain(&key);
                    if domain.is_empty() {
                        if self.opts.strict {
                            return Err(OperationalizeError::EmptyDomain(key));
                        }
                        return Ok(vec![Alt { tests: vec![], s: s.clone() }]);
                    }
                    domain
                        .into_iter()
                        .map(|value| {
                            let mut s2 = s.clone();
                            s2.insert(v.clone(), Term::Const(value.clone()));
                            Ok(Alt {
                                tests: vec![Test::new(key.as_str(), value).map_err(invalid)?],
                                s: s2,
                            })
                        })
                        .collect()
                }
            };
        }
        if depth >= self.opts.depth {
            return Err(OperationalizeError::RecursionLimit(s.apply(atom).to_string()));
        }
        let theory = self.theory;
        let mut matched = Vec::new();
        for rule in theory.defining(&atom.pred) {
            self.fresh += 1;
            let (r, _) = rule.rename(self.fresh);
            let mut s2 = s.clone();
            if s2.unify_atoms(atom, &r.head) {
                matched.push((r, s2));
            }
        }
        if matched.is_empty() {
            if self.opts.strict {
                return Err(OperationalizeError::UnboundSubgoal(s.apply(atom).to_string()));
            }
            return Ok(vec![Alt { tests: vec![], s: s.clone() }]);
        }
        let labeled = matched.len() > 1;
        let mut out = Vec::new();
        for (r, s2) in matched {
            let mut prefix = Vec::new();
            if let Some(first) = r.body.first().filter(|b| labeled && selection_key(b).is_none()) {
                let flag = Test::flag(capitalize(&first.pred)).map_err(invalid)?;
                self.groups
                    .entry(capitalize(&atom.pred))
                    .or_default()
                    .insert(flag.clone());
                prefix.push(flag);
            }
            for mut alt in self.conj(&r.body, &s2, depth + 1)? {
                let mut tests = prefix.clone();
                tests.append(&mut alt.tests);
                out.push(Alt { tests, s: alt.s });
            }
        }
        Ok(out)
    }

    fn conj(&mut self, goals: &[Atom], s: &Substitution, depth: usize) -> Result<Vec<Alt>, OperationalizeError> {
        let mut partial = vec![Alt { tests: vec![], s: s.clone() }];
        for g in goals {
            let mut next = Vec::new();
            for p in partial {
                for mut alt in self.goal(g, &p.s, depth)? {
                    let mut tests = p.tests.clone();
                    tests.append(&mut alt.tests);
                    next.push(Alt { tests, s: alt.s });
                    if next.len() > MAX_PATHS {
                        return Err(OperationalizeError::TooLarge(MAX_PATHS));
                    }
                }
            }
            partial = next;
        }
        Ok(partial)
    }
}

/// Drops repeated tests; `None` if the path needs two values for one key.
fn clean(tests: Vec<Test>) -> Option<Vec<Test>> {
    let mut by_key: BTreeMap<&str, &str> = BTreeMap::new();
    for t in &tests {
        match by_key.insert(&t.key, &t.value) {
            Some(v) if v != t.value => return None,
            _ => {}
        }
    }
    let mut seen = HashSet::new();
    Some(tests.iter().filter(|t| seen.insert((*t).clone())).cloned().collect())
}

#[derive(Default)]
struct Trie {
    arms: Vec<(Test, Trie)>,
    leaf: Option<Node>,
}

impl Trie {
    fn insert(&mut self, path: &[Test], leaf: Node) {
        match path.split_first() {
            None => self.leaf = Some(leaf),
            Some((t, rest)) => {
                let i = match self.arms.iter().position(|(a, _)| a == t) {
                    Some(i) => i,
                    None => {
                        self.arms.push((t.clone(), Trie::default()));
                        self.arms.len() - 1
                    }
                };
                self.arms[i].1.insert(rest, leaf);
            }
        }
    }

    fn into_node(self) -> Option<Node> {
        let chain = (!self.arms.is_empty()).then(|| Node::Chain {
            arms: self
                .arms
                .into_iter()
                .filter_map(|(test, t)| Some(Arm { test, body: t.into_node()? }))
                .collect(),
        });
        Node::seq(chain.into_iter().chain(self.leaf))
    }
}

/// The model with its placeholders and unreached bindings listed.
pub fn generate_model_with(
    theory: &Theory,
    ops: &[OperationalizedExplanation],
    bindings: &ContentBinding,
    opts: GenerateOptions,
) -> Result<GeneratedModel, OperationalizeError> {
    if ops.is_empty() {
        return Err(OperationalizeError::Invalid("no explanations to compile".into()));
    }
    let mut ids = HashSet::new();
    for op in ops {
        if !ids.insert(op.id.as_str()) {
            return Err(OperationalizeError::DuplicateExplanation(op.id.clone()));
        }
    }
    let joined = ops.len() > 1;
    let mut ex = Expander {
        theory,
        bindings,
        opts,
        fresh: 0,
        groups: BTreeMap::new(),
    };
    let mut trie = Trie::default();
    let mut used = vec![false; bindings.bindings.len()];
    let mut placeholders = Vec::new();
    let mut all_tests = BTreeSet::new();
    for op in ops {
        // A plane through the root leaves nothing to compile; a frozen
        // proof leaves nothing to ask.
        let alts = if op.fixed.is_none() || op.open_subgoals.is_empty() {
            vec![Alt { tests: vec![], s: Substitution::new() }]
        } else {
            ex.conj(&op.open_subgoals, &Substitution::new(), 0)?
        };
        let mut seen = HashSet::new();
        let mut paths = Vec::new();
        for alt in alts {
            if let Some(p) = clean(alt.tests) {
                if seen.insert(p.clone()) {
                    paths.push(p);
                }
            }
        }
        if paths.is_empty() {
            return Err(OperationalizeError::Invalid(format!(
                "explanation `{}` has no consistent completion",
                op.id
            )));
        }
        let prefix = if joined {
            vec![Test::new(EXPLANATION_KEY, op.id.as_str()).map_err(invalid)?]
        } else {
            vec![]
        };
        for path in paths {
            let tuple: BTreeSet<&Test> = path.iter().collect();
            let hit = bindings.tuples.iter().enumerate().position(|(i, t)| {
                !used[i]
                    && t.iter().filter(|x| x.key != EXPLANATION_KEY).collect::<BTreeSet<_>>() == tuple
                    && t.iter()
                        .filter(|x| x.key == EXPLANATION_KEY)
                        .all(|x| x.value == op.id)
            });
            let full: Vec<Test> = prefix.iter().chain(&path).cloned().collect();
            let leaf = match hit {
                Some(i) => {
                    used[i] = true;
                    let b = &bindings.bindings[i];
                    Node::content(b.page.clone(), b.payload.clone())
                }
                None => {
                    let label = if full.is_empty() {
                        op.id.clone()
                    } else {
                        full.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("/")
                    };
                    let page = format!("{PLACEHOLDER_PREFIX}{label}");
                    placeholders.push(page.clone());
                    Node::content(page, format!("No content bound for {}", op.generalized_goal))
                }
            };
            all_tests.extend(full.iter().cloned());
            trie.insert(&full, leaf);
        }
    }
    let unreached: Vec<String> = bindings
        .bindings
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(b, _)| b.page.clone())
        .collect();
    if opts.strict {
        if let Some(p) = unreached.first() {
            return Err(OperationalizeError::UnreachableBinding(p.clone()));
        }
    }
    let mut mutexes = Vec::new();
    for (name, members) in ex.groups {
        let members: BTreeSet<Test> = members.intersection(&all_tests).cloned().collect();
        if members.len() >= 2 {
            mutexes.push(MutexGroup::new(name, members).map_err(invalid)?);
        }
    }
    let root = trie.into_node().expect("at least one path");
    let program = Program::new(mutexes, root).map_err(invalid)?;
    Ok(GeneratedModel {
        program,
        placeholders,
        unreached,
    })
}

/// Compiles one or more operationalized explanations into a program.
pub fn generate_model(
    theory: &Theory,
    ops: &[OperationalizedExplanation],
    bindings: &ContentBinding,
    strict: bool,
) -> Result<Program, OperationalizeError> {
    let opts = GenerateOptions {
        strict,
        ..GenerateOptions::default()
    };
    generate_model_with(theory, ops, bindings, opts).map(|m| m.program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ebg::{explain, FactSet, Limits};
    use crate::operationalizer::{cut, generalize, FrontierSpec};
    use crate::specializer::specialize;

    fn political() -> Theory {
        Theory::parse(include_str!("../../fixtures/politicalinfo.theory")).unwrap()
    }

    fn op_for(facts: &str, goal: &str, spec: &FrontierSpec) -> OperationalizedExplanation {
        let t = political();
        let f = FactSet::parse(facts).unwrap();
        let tree = explain(&t, &f, &Atom::parse_ground(goal).unwrap(), Limits::default())
            .unwrap()
            .unwrap();
        cut(&generalize(&tree, &t).unwrap(), spec).unwrap()
    }

    fn nancy_op(spec: &FrontierSpec) -> OperationalizedExplanation {
        op_for(include_str!("../../fixtures/nancy.facts"), "politicalinfo(x47)", spec)
    }

    fn nancy_bindings() -> ContentBinding {
        serde_json::from_str(include_str!("../../fixtures/nancy.bindings.json")).unwrap()
    }

    fn t(s: &str) -> Test {
        s.parse().unwrap()
    }

    #[test]
    fn naming_conventions() {
        let a = Atom::parse_pattern(r#"seatselect(x, "Junior Seat")"#).unwrap();
        assert_eq!(selection_key(&a).as_deref(), Some("Seat"));
        assert_eq!(selection_key(&Atom::parse_pattern("select(x, y)").unwrap()), None);
        assert_eq!(selection_key(&Atom::parse_pattern("seatselect(x)").unwrap()), None);
        assert_eq!(normalize_value("North Carolina"), "NorthCarolina");
        assert_eq!(normalize_value("--"), "--");
    }

    #[test]
    fn nancy_model_shape() {
        let op = nancy_op(&FrontierSpec::predicates(["member", "aspect"]));
        let m = generate_model_with(&political(), &[op], &nancy_bindings(), GenerateOptions::default()).unwrap();
        let p = &m.program;
        assert!(m.unreached.is_empty());
        let group = p.group("Member").unwrap();
        assert_eq!(group.members, BTreeSet::from([t("Representative"), t("Senator")]));
        let root = p.root().root_chains();
        let tests: Vec<String> = root[0].iter().map(|a| a.test.to_string()).collect();
        assert_eq!(tests, ["Representative", "Senator"]);
        let paths = p.enumerate_paths();
        let nancy = paths
            .iter()
            .find(|path| path.page == "nc-junior-senator-committees")
            .unwrap();
        let want: Vec<Test> = ["Senator", "Branch=Senate", "State=NorthCarolina", "Seat=JuniorSeat", "Aspect=CommitteeMemberships"]
            .into_iter()
            .map(t)
            .collect();
        assert_eq!(nancy.tests, want);
        let aspects: BTreeSet<&str> = paths
            .iter()
            .flat_map(|p| &p.tests)
            .filter(|t| t.key == "Aspect")
            .map(|t| t.value.as_str())
            .collect();
        assert_eq!(aspects.len(), 4);
        // Representative: 2 states, senator: 2 states by 2 seats; 4 aspects each.
        assert_eq!(paths.len(), (2 + 4) * 4);
        assert_eq!(m.placeholders.len(), paths.len() - 2);
    }

    #[test]
    fn replay_reaches_bound_content() {
        let op = nancy_op(&FrontierSpec::predicates(["member", "aspect"]));
        let b = nancy_bindings();
        let p = generate_model(&political(), &[op], &b, true).unwrap();
        for binding in b.bindings() {
            let r = specialize(&p, &binding.tuple).unwrap().residual;
            assert_eq!(r.root(), &Node::content(binding.page.clone(), binding.payload.clone()));
        }
    }

    #[test]
    fn frozen_and_root_are_single_content() {
        let b = ContentBinding::default();
        for spec in [FrontierSpec::AtRoot, FrontierSpec::AtLeaves] {
            let p = generate_model(&political(), &[nancy_op(&spec)], &b, false).unwrap();
            assert!(p.is_complete());
            assert_eq!(p.size(), 1);
        }
    }

    #[test]
    fn frozen_explanations_join_into_a_switch() {
        let leaves = FrontierSpec::AtLeaves;
        let ops = vec![
            nancy_op(&leaves).with_id("nancy"),
            op_for(include_str!("../../fixtures/president.facts"), "politicalinfo(x12)", &leaves).with_id("president"),
            op_for(include_str!("../../fixtures/virginia.facts"), "politicalinfo(x52)", &leaves).with_id("virginia"),
        ];
        let b: ContentBinding = serde_json::from_str(include_str!("../../fixtures/frozen.bindings.json")).unwrap();
        let p = generate_model(&political(), &ops, &b, true).unwrap();
        let arms = &p.root().root_chains()[0];
        assert_eq!(arms.len(), 3);
        assert!(arms.iter().all(|a| matches!(a.body, Node::Content { .. })));
        assert_eq!(p.chain_key(arms).as_deref(), Some(EXPLANATION_KEY));
        assert!(matches!(
            generate_model(&political(), &[ops[0].clone(), ops[0].clone()], &b, false),
            Err(OperationalizeError::DuplicateExplanation(_))
        ));
    }

    #[test]
    fn strictness() {
        let theory = Theory::parse(
            r#"R1: g(x) <= h(x) & colorselect(x, c). R2: h(x) <= sizeselect(x, "Big")."#,
        )
        .unwrap();
        let goal = Atom::parse_pattern("g(x)").unwrap();
        let op = OperationalizedExplanation {
            id: "g".into(),
            generalized_goal: goal.clone(),
            fixed: Some(super::super::FixedNode::Open { atom: goal.clone() }),
            open_subgoals: vec![goal],
        };
        let empty = ContentBinding::default();
        assert_eq!(
            generate_model(&theory, std::slice::from_ref(&op), &empty, true),
            Err(OperationalizeError::EmptyDomain("Color".into()))
        );
        let lax = generate_model(&theory, std::slice::from_ref(&op), &empty, false).unwrap();
        assert_eq!(lax.enumerate_paths().len(), 1);

        let mut unbound = op.clone();
        unbound.open_subgoals = vec![Atom::parse_pattern("nosuch(x)").unwrap()];
        assert!(matches!(
            generate_model(&theory, &[unbound], &empty, true),
            Err(OperationalizeError::UnboundSubgoal(_))
        ));

        let stray: ContentBinding = serde_json::from_str(
            r#"[{"tuple": {"Size": "Small", "Color": "Red"}, "page": "small-red"}]"#,
        )
        .unwrap();
        assert_eq!(
            generate_model(&theory, std::slice::from_ref(&op), &stray, true),
            Err(OperationalizeError::UnreachableBinding("small-red".into()))
        );
    }

    #[test]
    fn recursive_theory_is_bounded() {
        let theory = Theory::parse("R1: p(x) <= p(x). R2: p(x) <= aselect(x, \"b\").").unwrap();
        let goal = Atom::parse_pattern("p(x)").unwrap();
        let op = OperationalizedExplanation {
            id: "p".into(),
            generalized_goal: goal.clone(),
            fixed: Some(super::super::FixedNode::Open { atom: goal.clone() }),
            open_subgoals: vec![goal],
        };
        let opts = GenerateOptions { strict: false, depth: 8 };
        assert!(matches!(
            generate_model_with(&theory, &[op], &ContentBinding::default(), opts),
            Err(OperationalizeError::RecursionLimit(_))
        ));
    }

    #[test]
    fn binding_validation() {
        let bad = r#"[{"tuple": {"State": "!CA"}, "page": "p"}]"#;
        assert!(serde_json::from_str::<ContentBinding>(bad).is_err());
        let dup = r#"[{"tuple": {"State": "CA"}, "page": "p"}, {"tuple": {"State": "CA"}, "page": "q"}]"#;
        assert!(serde_json::from_str::<ContentBinding>(dup).is_err());
        let b: ContentBinding =
            serde_json::from_str(r#"[{"tuple": {"State": "North Carolina"}, "page": "p"}]"#).unwrap();
        assert_eq!(b.domain("State"), BTreeSet::from(["NorthCarolina".to_string()]));
    }
}
