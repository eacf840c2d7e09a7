//! Programmatic representation of information spaces.
//!
//! An information space is a program of nested `if .. else if` chains over
//! variable tests, with content pages at the leaves. Each chain models one
//! dichotomy a navigator resolves by following a link; partial input about
//! those tests is what the [`crate::specializer`] consumes.

mod assignment;
mod parse;
mod print;
mod sitemap;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assignment::{Assignment, AssignmentConflict, Decision};
pub use parse::parse;
pub use print::serialize;
pub use sitemap::{ingest_sitemap, SiteNode};

/// Value carried by a bare-flag test such as `if (Dem)`.
pub const FLAG_VALUE: &str = "true";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IspaceError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("duplicate arm `{test}` in one chain{}", at(*line, *col))]
    DuplicateArm { test: String, line: usize, col: usize },
    #[error("duplicate content ref `{0}`")]
    DuplicateContentRef(String),
    #[error("invalid mutex group `{name}`: {reason}")]
    InvalidMutex { name: String, reason: String },
    #[error("invalid test `{0}`")]
    InvalidTest(String),
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("site map is empty")]
    EmptyMap,
    #[error("two sibling site-map nodes are labeled `{0}`")]
    LabelCollision(String),
    #[error("malformed JSON: {0}")]
    Json(String),
}

fn at(line: usize, col: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at {line}:{col}")
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A variable test `key=value`; `Dem` is sugar for `Dem=true`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Test {
    pub key: String,
    pub value: String,
}

impl Test {
    pub fn new(key: impl Into<String>, value: impl Into<String>) -> Result<Self, IspaceError> {
        let (key, value) = (key.into(), value.into());
        if !is_ident(&key) || value.is_empty() {
            return Err(IspaceError::InvalidTest(format!("{key}={value}")));
        }
        Ok(Test { key, value })
    }

    pub fn flag(key: impl Into<String>) -> Result<Self, IspaceError> {
        Test::new(key, FLAG_VALUE)
    }

    pub fn is_flag(&self) -> bool {
        self.value == FLAG_VALUE
    }

    fn validate(&self) -> Result<(), IspaceError> {
        Test::new(self.key.as_str(), self.value.as_str()).map(drop)
    }
}

impl std::str::FromStr for Test {
    type Err = IspaceError;

    /// Accepts `Dem`, `Party=Dem` and `Seat="Junior Seat"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.split_once('=') {
            None => Test::flag(s),
            Some((k, v)) => {
                let v = v.trim();
                let v = v
                    .strip_prefix('"')
                    .and_then(|v| v.strip_suffix('"'))
                    .unwrap_or(v);
                Test::new(k.trim(), v)
            }
        }
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_flag() {
            write!(f, "{}", self.key)
        } else if is_ident(&self.value) {
            write!(f, "{}={}", self.key, self.value)
        } else {
            write!(f, "{}={}", self.key, print::quote(&self.value))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arm {
    pub test: Test,
    pub body: Node,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// One `if .. else if ..` dichotomy.
    Chain { arms: Vec<Arm> },
    Content {
        page: String,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        payload: String,
    },
    Seq { children: Vec<Node> },
}

impl Node {
    pub fn content(page: impl Into<String>, payload: impl Into<String>) -> Node {
        Node::Content {
            page: page.into(),
            payload: payload.into(),
        }
    }

    /// Builds a sequence, flattening nested sequences. Returns `None` for no
    /// children and the child itself for exactly one.
    pub fn seq(children: impl IntoIterator<Item = Node>) -> Option<Node> {
        let mut flat = Vec::new();
        for child in children {
            match child {
                Node::Seq { children } => flat.extend(children),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => None,
            1 => flat.pop(),
            _ => Some(Node::Seq { children: flat }),
        }
    }

    pub fn has_chain(&self) -> bool {
        match self {
            Node::Chain { .. } => true,
            Node::Content { .. } => false,
            Node::Seq { children } => children.iter().any(Node::has_chain),
        }
    }

    /// Chains, arms and content pages, counted once each.
    pub fn size(&self) -> usize {
        match self {
            Node::Chain { arms } => 1 + arms.iter().map(|a| 1 + a.body.size()).sum::<usize>(),
            Node::Content { .. } => 1,
            Node::Seq { children } => children.iter().map(Node::size).sum(),
        }
    }

    /// Chains reachable without passing through an arm.
    pub fn root_chains(&self) -> Vec<&[Arm]> {
        match self {
            Node::Chain { arms } => vec![arms.as_slice()],
            Node::Content { .. } => Vec::new(),
            Node::Seq { children } => children.iter().flat_map(Node::root_chains).collect(),
        }
    }

    fn visit_tests<'a>(&'a self, out: &mut impl FnMut(&'a Test)) {
        match self {
            Node::Chain { arms } => {
                for arm in arms {
                    out(&arm.test);
                    arm.body.visit_tests(out);
                }
            }
            Node::Content { .. } => {}
            Node::Seq { children } => children.iter().for_each(|c| c.visit_tests(out)),
        }
    }

    fn visit_pages<'a>(&'a self, out: &mut impl FnMut(&'a str)) {
        match self {
            Node::Chain { arms } => arms.iter().for_each(|a| a.body.visit_pages(out)),
            Node::Content { page, .. } => out(page),
            Node::Seq { children } => children.iter().for_each(|c| c.visit_pages(out)),
        }
    }
}

/// Tests of which at most one may hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutexGroup {
    pub name: String,
    pub members: BTreeSet<Test>,
}

impl MutexGroup {
    pub fn new(
        name: impl Into<String>,
        members: impl IntoIterator<Item = Test>,
    ) -> Result<Self, IspaceError> {
        let group = MutexGroup {
            name: name.into(),
            members: members.into_iter().collect(),
        };
        group.validate()?;
        Ok(group)
    }

    fn validate(&self) -> Result<(), IspaceError> {
        let bad = |reason: &str| IspaceError::InvalidMutex {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if !is_ident(&self.name) {
            return Err(bad("group name is not an identifier"));
        }
        if self.members.len() < 2 {
            return Err(bad("a group needs at least two members"));
        }
        self.members.iter().try_for_each(Test::validate)
    }
}

/// One root-to-content path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Path {
    pub tests: Vec<Test>,
    pub page: String,
}

/// An information space. Mutex headers are kept sorted by name so that
/// derived equality ignores their declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Program {
    mutexes: Vec<MutexGroup>,
    root: Node,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct RawProgram {
    #[serde(default)]
    mutexes: Vec<MutexGroup>,
    root: Node,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

impl<'de> Deserialize<'de> for Program {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawProgram::deserialize(d)?;
        Program::with_meta(raw.mutexes, raw.root, raw.meta).map_err(serde::de::Error::custom)
    }
}

impl Program {
    pub fn new(mutexes: Vec<MutexGroup>, root: Node) -> Result<Self, IspaceError> {
        Program::with_meta(mutexes, root, BTreeMap::new())
    }

    pub fn with_meta(
        mut mutexes: Vec<MutexGroup>,
        root: Node,
        meta: BTreeMap<String, String>,
    ) -> Result<Self, IspaceError> {
        mutexes.sort_by(|a, b| a.name.cmp(&b.name));
        let root = normalize(root)?;
        let program = Program {
            mutexes,
            root,
            meta,
        };
        program.validate()?;
        Ok(program)
    }

    /// A program that is a single content page.
    pub fn page(page: impl Into<String>, payload: impl Into<String>) -> Self {
        Program {
            mutexes: Vec::new(),
            root: Node::content(page, payload),
            meta: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn mutexes(&self) -> &[MutexGroup] {
        &self.mutexes
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Same program with another root; headers and metadata are kept.
    pub fn with_root(&self, root: Node) -> Result<Self, IspaceError> {
        Program::with_meta(self.mutexes.clone(), root, self.meta.clone())
    }

    pub fn from_json(text: &str) -> Result<Self, IspaceError> {
        serde_json::from_str(text).map_err(|e| IspaceError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    /// Structural equality: root and the set of mutex groups; metadata ignored.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.root == other.root && self.mutexes == other.mutexes
    }

    pub fn tests(&self) -> BTreeSet<Test> {
        let mut out = BTreeSet::new();
        self.root.visit_tests(&mut |t| {
            out.insert(t.clone());
        });
        out
    }

    pub fn keys(&self) -> BTreeSet<String> {
        self.tests().into_iter().map(|t| t.key).collect()
    }

    pub fn values_by_key(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for t in self.tests() {
            out.entry(t.key).or_default().insert(t.value);
        }
        out
    }

    pub fn group(&self, name: &str) -> Option<&MutexGroup> {
        self.mutexes.iter().find(|g| g.name == name)
    }

    pub fn groups_containing<'a>(&'a self, test: &'a Test) -> impl Iterator<Item = &'a MutexGroup> {
        self.mutexes.iter().filter(move |g| g.members.contains(test))
    }

    /// The dimension a chain ranges over: the declared group holding all of
    /// its arm tests, else the key they share.
    pub fn chain_key(&self, arms: &[Arm]) -> Option<String> {
        if let Some(g) = self
            .mutexes
            .iter()
            .find(|g| arms.iter().all(|a| g.members.contains(&a.test)))
        {
            return Some(g.name.clone());
        }
        let first = &arms.first()?.test.key;
        arms.iter()
            .all(|a| &a.test.key == first)
            .then(|| first.clone())
    }

    pub fn is_complete(&self) -> bool {
        !self.root.has_chain()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn enumerate_paths(&self) -> Vec<Path> {
        fn walk(node: &Node, prefix: &mut Vec<Test>, out: &mut Vec<Path>) {
            match node {
                Node::Chain { arms } => {
                    for arm in arms {
                        prefix.push(arm.test.clone());
                        walk(&arm.body, prefix, out);
                        prefix.pop();
                    }
                }
                Node::Content { page, .. } => out.push(Path {
                    tests: prefix.clone(),
                    page: page.clone(),
                }),
                Node::Seq { children } => children.iter().for_each(|c| walk(c, prefix, out)),
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    fn validate(&self) -> Result<(), IspaceError> {
        let mut names = HashSet::new();
        let mut owner: BTreeMap<&Test, &str> = BTreeMap::new();
        for g in &self.mutexes {
            g.validate()?;
            if !names.insert(g.name.as_str()) {
                return Err(IspaceError::InvalidMutex {
                    name: g.name.clone(),
                    reason: "declared twice".into(),
                });
            }
            for m in &g.members {
                if let Some(other) = owner.insert(m, &g.name) {
                    return Err(IspaceError::InvalidMutex {
                        name: g.name.clone(),
                        reason: format!("`{m}` already belongs to group `{other}`"),
                    });
                }
            }
        }
        for key in self.meta.keys() {
            if !is_ident(key) {
                return Err(IspaceError::Invalid(format!("meta key `{key}`")));
            }
        }
        let mut pages = HashSet::new();
        let mut dup = None;
        self.root.visit_pages(&mut |p| {
            if !pages.insert(p) && dup.is_none() {
                dup = Some(p.to_string());
            }
        });
        match dup {
            Some(p) => Err(IspaceError::DuplicateContentRef(p)),
            None => Ok(()),
        }
    }
}

/// Checks node invariants and flattens sequences.
fn normalize(node: Node) -> Result<Node, IspaceError> {
    match node {
        Node::Chain { arms } => {
            if arms.is_empty() {
                return Err(IspaceError::Invalid("chain without arms".into()));
            }
            let mut seen = HashSet::new();
            let mut out = Vec::with_capacity(arms.len());
            for arm in arms {
                arm.test.validate()?;
                if !seen.insert(arm.test.clone()) {
                    return Err(IspaceError::DuplicateArm {
                        test: arm.test.to_string(),
                        line: 0,
                        col: 0,
                    });
                }
                out.push(Arm {
                    test: arm.test,
                    body: normalize(arm.body)?,
                });
            }
            Ok(Node::Chain { arms: out })
        }
        Node::Content { page, payload } => {
            if page.is_empty() {
                return Err(IspaceError::Invalid("empty content ref".into()));
            }
            Ok(Node::Content { page, payload })
        }
        Node::Seq { children } => {
            let children = children
                .into_iter()
                .map(normalize)
                .collect::<Result<Vec<_>, _>>()?;
            Node::seq(children).ok_or_else(|| IspaceError::Invalid("empty sequence".into()))
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}
