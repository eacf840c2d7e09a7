//! Generators and laws shared by the property suite and the acceptance run.

#![allow(dead_code)]

use std::collections::BTreeSet;

use pipe_core::ebg::{explain, explain_all, verify_explanation, Atom, Fact, FactSet, Limits, Rule, Term, Theory};
use pipe_core::factorization::{classify, evaluate_coverage, Activity, Verdict};
use pipe_core::ispace::{ingest_sitemap, Arm, MutexGroup, Path, SiteNode};
use pipe_core::service::SessionStore;
use pipe_core::specializer::{propagate_mutex, specialize, specializes_to, SpecializeError};
use pipe_core::{parse, serialize, Assignment, Decision, Node, Program, Test};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CASES: u32 = 1000;
pub const MAX_NODES: usize = 30;
/// Five keyed dimensions plus three exclusive flags: eight keys.
pub const KEYED: usize = 5;
pub const FLAGS: usize = 3;
const VALUES: [&str; 4] = ["a", "b", "c", "d"];

pub const CONGRESS: &str = include_str!("../../fixtures/congress.ispace");
pub const THEORY: &str = include_str!("../../fixtures/politicalinfo.theory");
pub const NANCY: &str = include_str!("../../fixtures/nancy.facts");

pub type Law = Result<(), TestCaseError>;

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        max_global_rejects: 100_000,
        ..ProptestConfig::default()
    }
}

pub fn test_for(dim: usize, val: usize) -> Test {
    if dim < KEYED {
        Test::new(format!("K{dim}"), VALUES[val % VALUES.len()]).unwrap()
    } else {
        Test::flag(format!("F{}", val % FLAGS)).unwrap()
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Leaf,
    Chain(usize, Vec<(usize, Shape)>),
    Seq(Vec<Shape>),
}

fn shape() -> impl Strategy<Value = Shape> {
    Just(Shape::Leaf).prop_recursive(5, 40, 4, |inner| {
        prop_oneof![
            4 => (0..=KEYED, prop::collection::vec((0..4usize, inner.clone()), 1..5))
                .prop_map(|(d, arms)| Shape::Chain(d, arms)),
            1 => prop::collection::vec(inner, 2..=2).prop_map(Shape::Seq),
        ]
    })
}

fn build(s: &Shape, pages: &mut usize) -> Node {
    match s {
        Shape::Leaf => {
            *pages += 1;
            Node::content(format!("p{pages}"), "")
        }
        Shape::Chain(dim, arms) => {
            let mut seen = BTreeSet::new();
            let arms = arms
                .iter()
                .filter(|(v, _)| seen.insert(test_for(*dim, *v)))
                .map(|(v, body)| Arm {
                    test: test_for(*dim, *v),
                    body: build(body, pages),
                })
                .collect();
            Node::Chain { arms }
        }
        Shape::Seq(children) => Node::Seq {
            children: children.iter().map(|c| build(c, pages)).collect(),
        },
    }
}

fn flag_group() -> MutexGroup {
    MutexGroup::new("Flags", (0..FLAGS).map(|i| test_for(KEYED, i))).unwrap()
}

/// Programs of at most [`MAX_NODES`] nodes over at most eight keys, rooted
/// at a chain so that most input has something to decide.
pub fn program() -> impl Strategy<Value = Program> {
    (0..=KEYED, prop::collection::vec((0..4usize, shape()), 2..5))
        .prop_map(|(d, arms)| Shape::Chain(d, arms))
        .prop_map(|s| Program::new(vec![flag_group()], build(&s, &mut 0)).unwrap())
        .prop_filter("node budget", |p| p.size() <= MAX_NODES)
}

/// (dimension, value, choose?) triples; conflicting ones are skipped.
pub fn assignment() -> impl Strategy<Value = Assignment> {
    prop::collection::vec((0..=KEYED, 0..4usize, any::<bool>()), 0..6).prop_map(|entries| {
        let mut a = Assignment::new();
        for (d, v, choose) in entries {
            let t = test_for(d, v);
            let _ = if choose { a.choose(&t) } else { a.deny(&t) };
        }
        a
    })
}

/// The part of `b` on keys `a` leaves open.
pub fn restrict_away(b: &Assignment, a: &Assignment) -> Assignment {
    let mut out = Assignment::new();
    for (k, d) in b.iter().filter(|(k, _)| a.get(k).is_none()) {
        match d {
            Decision::Chosen(v) => out.choose(&Test::new(k, v).unwrap()).unwrap(),
            Decision::Denied(vs) => {
                for v in vs {
                    out.deny(&Test::new(k, v).unwrap()).unwrap();
                }
            }
        }
    }
    out
}

pub fn residual(p: &Program, a: &Assignment) -> Result<Program, SpecializeError> {
    specialize(p, a).map(|r| r.residual)
}

/// Paths of `p` that `a` does not rule out, minus the tests `a` decides.
fn oracle_paths(p: &Program, a: &Assignment) -> Vec<Path> {
    p.enumerate_paths()
        .into_iter()
        .filter(|path| path.tests.iter().all(|t| a.truth(t) != Some(false)))
        .map(|path| Path {
            tests: path.tests.into_iter().filter(|t| a.truth(t) != Some(true)).collect(),
            page: path.page,
        })
        .collect()
}

pub fn round_trip(p: &Program) -> Law {
    prop_assert_eq!(&parse(&serialize(p)).unwrap(), p);
    prop_assert_eq!(&Program::from_json(&p.to_json()).unwrap(), p);
    Ok(())
}

pub fn closure(p: &Program, a: &Assignment) -> Law {
    if let Ok(r) = residual(p, a) {
        prop_assert_eq!(parse(&serialize(&r)).unwrap(), r.clone());
        prop_assert!(r.size() <= p.size());
    }
    Ok(())
}

pub fn identity(p: &Program) -> Law {
    prop_assert_eq!(&residual(p, &Assignment::new()).unwrap(), p);
    Ok(())
}

pub fn oracle(p: &Program, a: &Assignment) -> Law {
    let Ok(applied) = propagate_mutex(p, a) else {
        return Ok(());
    };
    let want = oracle_paths(p, &applied);
    match residual(p, a) {
        Ok(r) => prop_assert_eq!(r.enumerate_paths(), want),
        Err(e) => {
            prop_assert_eq!(e, SpecializeError::EmptyResidual);
            prop_assert!(want.is_empty());
        }
    }
    Ok(())
}

/// Specializing by `a` then by input on other keys equals one shot.
pub fn composition(p: &Program, a: &Assignment, b: &Assignment) -> Law {
    let b = restrict_away(b, a);
    let joint = a.merge(&b).unwrap();
    let Ok(combined) = residual(p, &joint) else {
        return Ok(());
    };
    let two_step = residual(p, a).and_then(|r| residual(&r, &b));
    prop_assert_eq!(two_step.unwrap(), combined);
    Ok(())
}

pub fn commutativity(p: &Program, a: &Assignment, b: &Assignment) -> Law {
    let Ok(joint) = a.merge(b) else { return Ok(()) };
    if propagate_mutex(p, &joint).is_err() {
        return Ok(());
    }
    let ab = residual(p, a).and_then(|r| residual(&r, b));
    let ba = residual(p, b).and_then(|r| residual(&r, a));
    prop_assert_eq!(ab.is_ok(), ba.is_ok());
    if let (Ok(x), Ok(y)) = (ab, ba) {
        prop_assert_eq!(x, y);
    }
    Ok(())
}

pub fn order_witness(p: &Program, a: &Assignment) -> Law {
    prop_assert_eq!(specializes_to(p, p, 10).unwrap(), Some(Assignment::new()));
    let Ok(r) = residual(p, a) else { return Ok(()) };
    match specializes_to(p, &r, 20_000) {
        Ok(Some(w)) => prop_assert!(residual(p, &w).unwrap().same_structure(&r)),
        Ok(None) => prop_assert!(false, "no witness for a residual of {}", a),
        Err(SpecializeError::BudgetExceeded(_)) => {}
        Err(e) => prop_assert!(false, "{e}"),
    }
    Ok(())
}

pub fn classify_laws(p: &Program, a: &Assignment) -> Law {
    let open = Activity::new("open", Assignment::new(), true);
    if p.root().has_chain() {
        prop_assert_eq!(classify(p, &open).unwrap().verdict, Verdict::Personable);
    }
    let acts = vec![open, Activity::new("a", a.clone(), true)];
    let r = evaluate_coverage(p, &acts);
    prop_assert_eq!(r.personable + r.complete_only + r.unsupported, r.total);
    if let Ok(res) = residual(p, a) {
        if res.is_complete() {
            prop_assert_eq!(classify(p, &acts[1]).unwrap().verdict, Verdict::OverFactored);
        }
    }
    Ok(())
}

pub fn sitemap() -> impl Strategy<Value = SiteNode> {
    let leaf = Just(Vec::<(usize, usize, SiteNode)>::new());
    let children = leaf.prop_recursive(3, 20, 3, |inner| {
        prop::collection::vec(
            (0..=KEYED, 0..4usize, inner).prop_map(|(d, v, kids)| {
                let node = SiteNode {
                    label: test_for(d, v).to_string(),
                    facet: None,
                    children: distinct(kids),
                    page: None,
                    payload: None,
                };
                (d, v, node)
            }),
            1..4,
        )
    });
    children.prop_map(|kids| {
        let children = distinct(kids);
        SiteNode {
            label: "Site".into(),
            facet: None,
            page: children.is_empty().then(|| "home".into()),
            children,
            payload: None,
        }
    })
}

/// Siblings with distinct labels, first wins.
fn distinct(kids: Vec<(usize, usize, SiteNode)>) -> Vec<SiteNode> {
    let mut seen = BTreeSet::new();
    kids.into_iter()
        .filter(|(d, v, _)| seen.insert(test_for(*d, *v)))
        .map(|(_, _, n)| n)
        .collect()
}

pub fn ingestion_fidelity(map: &SiteNode) -> Law {
    let p = ingest_sitemap(map).unwrap();
    let got: Vec<Vec<String>> = p
        .enumerate_paths()
        .into_iter()
        .map(|path| path.tests.iter().map(|t| t.to_string()).collect())
        .collect();
    prop_assert_eq!(got, map.label_paths());
    Ok(())
}

/// A random propositional theory: rule heads `p{i}` with bodies drawn from
/// higher-numbered predicates only, so it is acyclic.
#[derive(Debug, Clone)]
pub struct PropTheory {
    rules: Vec<(usize, Vec<usize>)>,
    facts: Vec<usize>,
}

const PREDS: usize = 7;

pub fn prop_theory() -> impl Strategy<Value = PropTheory> {
    let rule = (0..PREDS - 1).prop_flat_map(|h| (Just(h), prop::collection::vec(h + 1..PREDS, 0..3)));
    (
        prop::collection::vec(rule, 1..=15),
        prop::collection::vec(0..PREDS, 0..PREDS),
    )
        .prop_map(|(rules, facts)| PropTheory { rules, facts })
}

fn atom(i: usize) -> Atom {
    Atom::new(format!("p{i}"), vec![])
}

impl PropTheory {
    fn theory(&self) -> Theory {
        let rules = self
            .rules
            .iter()
            .enumerate()
            .map(|(n, (h, body))| Rule {
                id: format!("R{}", n + 1),
                head: atom(*h),
                body: body.iter().map(|&b| atom(b)).collect(),
            })
            .collect();
        Theory::new(rules).unwrap()
    }

    fn facts(&self) -> FactSet {
        let facts = self
            .facts
            .iter()
            .enumerate()
            .map(|(n, &p)| Fact { id: format!("F{}", n + 1), atom: atom(p) })
            .collect();
        FactSet::new(facts).unwrap()
    }

    /// Number of distinct proof trees of `p{goal}`, counted directly.
    pub fn proofs(&self, goal: usize) -> u64 {
        let facts = self.facts.iter().filter(|&&f| f == goal).count() as u64;
        let rules: u64 = self
            .rules
            .iter()
            .filter(|(h, _)| *h == goal)
            .map(|(_, body)| body.iter().map(|&b| self.proofs(b)).product::<u64>())
            .sum();
        facts + rules
    }

    fn mentions(&self, p: usize) -> bool {
        self.facts.contains(&p) || self.rules.iter().any(|(h, body)| *h == p || body.contains(&p))
    }
}

/// Every proof returned verifies, and their number equals the direct count.
pub fn proof_count(t: &PropTheory) -> Law {
    let (theory, facts) = (t.theory(), t.facts());
    let limits = Limits { depth: 64, solutions: 1_000_000 };
    let want = t.proofs(0);
    if want >= 5_000 {
        return Ok(());
    }
    match explain_all(&theory, &facts, &atom(0), limits) {
        Ok(trees) => {
            prop_assert_eq!(trees.len() as u64, want);
            for tree in &trees {
                prop_assert!(verify_explanation(&theory, &facts, tree).is_ok());
            }
            let first = explain(&theory, &facts, &atom(0), limits).unwrap();
            prop_assert_eq!(first.as_ref(), trees.first());
        }
        Err(_) => prop_assert!(!t.mentions(0)),
    }
    Ok(())
}

pub fn nancy_facts() -> Vec<Fact> {
    FactSet::parse(NANCY).unwrap().facts().to_vec()
}

/// Whatever subset of the scenario is observed, in whatever order, any
/// proof found verifies, is ground, and does not depend on the order.
pub fn scenario_soundness(mask: u8, order: Vec<Fact>) -> Law {
    let theory = Theory::parse(THEORY).unwrap();
    let chosen: Vec<Fact> = order
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, f)| f)
        .collect();
    let mut sorted = chosen.clone();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let facts = FactSet::new(chosen).unwrap();
    let goal = Atom::new("politicalinfo", vec![Term::constant("x47")]);
    let tree = explain(&theory, &facts, &goal, Limits::default()).unwrap();
    if let Some(tree) = &tree {
        prop_assert!(verify_explanation(&theory, &facts, tree).is_ok());
        let mut ground = true;
        tree.walk(&mut |n| ground &= n.atom.is_ground());
        prop_assert!(ground);
    }
    let again = explain(&theory, &FactSet::new(sorted).unwrap(), &goal, Limits::default()).unwrap();
    prop_assert_eq!(tree, again);
    Ok(())
}

#[derive(Debug, Clone)]
pub enum Step {
    Browse(usize),
    Input(usize, bool),
    Undo,
}

pub fn steps(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Step>> {
    prop::collection::vec(
        prop_oneof![
            3 => (0..4usize).prop_map(Step::Browse),
            3 => (0..6usize, any::<bool>()).prop_map(|(k, c)| Step::Input(k, c)),
            1 => Just(Step::Undo),
        ],
        len,
    )
}

/// Sessions always equal a fresh specialization of their accumulated
/// input, and how that input was reached never shows in the view.
pub fn session_replay(steps: &[Step]) -> Law {
    let keys = ["Sen", "Repr", "Dem", "Rep", "CA", "NY"];
    let store = SessionStore::new();
    store.upload_model(Some("c"), CONGRESS).unwrap();
    let model = store.model("c").unwrap();
    let id = store.create_session("c").unwrap().session;
    for step in steps {
        let view = store.view(&id).unwrap();
        let _ = match step {
            Step::Browse(i) => match view.available.get(i % view.available.len().max(1)) {
                Some(t) => store.browse(&id, t),
                None => continue,
            },
            Step::Input(k, choose) => {
                let entry = if *choose { keys[*k].to_string() } else { format!("!{}", keys[*k]) };
                store.apply_input(&id, Assignment::parse_entries([entry.as_str()]).unwrap())
            }
            Step::Undo => store.undo(&id),
        };
        let view = store.view(&id).unwrap();
        let mut acc = Assignment::new();
        for h in &view.breadcrumb {
            acc = acc.merge(&h.delta).unwrap();
        }
        prop_assert_eq!(&view.residual, &residual(&model, &acc).unwrap());
        let fresh = store.create_session("c").unwrap().session;
        let joint = store.apply_input(&fresh, acc).unwrap();
        prop_assert!(joint.same_state(&view));
    }
    Ok(())
}
