use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{Arm, IspaceError, MutexGroup, Node, Program, Test};

/// A node of a hierarchical site description, as produced by a depth-first
/// crawl. Labels use test syntax (`Sen`, `Party=Dem`). `facet` names the
/// dimension this node's children range over; flag-labeled children sharing
/// a facet become one mutex group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteNode {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<SiteNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl SiteNode {
    /// Root-to-leaf label paths below (and excluding) this node.
    pub fn label_paths(&self) -> Vec<Vec<String>> {
        if self.children.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for child in &self.children {
            for mut rest in child.label_paths() {
                rest.insert(0, child.label.clone());
                out.push(rest);
            }
        }
        out
    }
}

/// Turns a site map into a program: siblings become one chain, leaves
/// become content. The root's own label names the site and is not a test.
pub fn ingest_sitemap(map: &SiteNode) -> Result<Program, IspaceError> {
    if map.children.is_empty() && map.page.is_none() {
        return Err(IspaceError::EmptyMap);
    }
    let mut facets: BTreeMap<String, BTreeSet<Test>> = BTreeMap::new();
    let mut trail = Vec::new();
    let root = build(map, &mut trail, &mut facets)?;
    let mutexes = facets
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(name, members)| MutexGroup::new(name, members))
        .collect::<Result<Vec<_>, _>>()?;
    let mut meta = BTreeMap::new();
    meta.insert("site".to_string(), map.label.clone());
    Program::with_meta(mutexes, root, meta)
}

fn build(
    node: &SiteNode,
    trail: &mut Vec<String>,
    facets: &mut BTreeMap<String, BTreeSet<Test>>,
) -> Result<Node, IspaceError> {
    if node.children.is_empty() {
        let page = match &node.page {
            Some(p) => p.clone(),
            None if trail.is_empty() => node.label.to_lowercase(),
            None => trail.join("/").to_lowercase(),
        };
        let payload = node.payload.clone().unwrap_or_else(|| node.label.clone());
        return Ok(Node::content(page, payload));
    }
    if node.page.is_some() {
        return Err(IspaceError::Invalid(format!(
            "site-map node `{}` has both a page and children",
            node.label
        )));
    }
    let mut seen = HashSet::new();
    let mut arms = Vec::with_capacity(node.children.len());
    for child in &node.children {
        let test: Test = child.label.parse()?;
        if !seen.insert(test.clone()) {
            return Err(IspaceError::LabelCollision(child.label.clone()));
        }
        if let (Some(facet), true) = (&node.facet, test.is_flag()) {
            facets.entry(facet.clone()).or_default().insert(test.clone());
        }
        trail.push(child.label.clone());
        let body = build(child, trail, facets)?;
        trail.pop();
        arms.push(Arm { test, body });
    }
    Ok(Node::Chain { arms })
}
