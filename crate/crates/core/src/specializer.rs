//! Partial evaluation of information-space programs.
//!
//! A chain arm whose test holds replaces the whole chain by its specialized
//! body; arms whose tests are ruled out disappear along with their subtrees;
//! undecided arms stay. The residual is again a [`Program`], so specializing
//! can be repeated with further input in any order.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::ispace::{Arm, Assignment, Decision, Node, Program, Test};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecializeError {
    #[error("inconsistent assignment: {0}")]
    Inconsistent(String),
    #[error("no content survives this input")]
    EmptyResidual,
    #[error("search budget of {0} candidate assignments exhausted")]
    BudgetExceeded(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecializationResult {
    pub residual: Program,
    /// The input after group-name resolution and mutex propagation.
    pub applied: Assignment,
    pub dropped_arms: usize,
    pub hoisted_chains: usize,
}

/// Rewrites `Group=Member` entries into member tests. Only applies to keys
/// that are declared group names and not themselves test keys.
fn resolve_groups(p: &Program, a: &Assignment) -> Result<Assignment, SpecializeError> {
    let keys = p.keys();
    let mut out = a.clone();
    for (key, decision) in a.iter() {
        if keys.contains(key) {
            continue;
        }
        let Some(group) = p.group(key) else { continue };
        let member = |name: &str| -> Result<Test, SpecializeError> {
            group
                .members
                .iter()
                .find(|m| (m.is_flag() && m.key == name) || m.to_string() == name)
                .cloned()
                .ok_or_else(|| {
                    SpecializeError::Inconsistent(format!("`{name}` is not a member of `{key}`"))
                })
        };
        out.remove(key);
        let conflict = |e: crate::ispace::AssignmentConflict| SpecializeError::Inconsistent(e.to_string());
        match decision {
            Decision::Chosen(v) => out.choose(&member(v)?).map_err(conflict)?,
            Decision::Denied(vs) => {
                for v in vs {
                    out.deny(&member(v)?).map_err(conflict)?;
                }
            }
        }
    }
    Ok(out)
}

/// Closes `a` under the program's mutex groups: choosing a member denies
/// every sibling. Tests sharing a key are exclusive without any declaration.
pub fn propagate_mutex(p: &Program, a: &Assignment) -> Result<Assignment, SpecializeError> {
    let mut out = resolve_groups(p, a)?;
    let chosen: Vec<Test> = out.chosen().collect();
    for test in &chosen {
        for group in p.groups_containing(test) {
            for sibling in group.members.iter().filter(|m| m.key != test.key) {
                out.deny(sibling).map_err(|_| {
                    SpecializeError::Inconsistent(format!(
                        "`{test}` and `{sibling}` are both chosen but exclusive in `{}`",
                        group.name
                    ))
                })?;
            }
        }
    }
    Ok(out)
}

#[derive(Default)]
struct Counts {
    dropped: usize,
    hoisted: usize,
}

fn residual(node: &Node, a: &Assignment, counts: &mut Counts) -> Option<Node> {
    match node {
        Node::Content { .. } => Some(node.clone()),
        Node::Seq { children } => {
            Node::seq(children.iter().filter_map(|c| residual(c, a, counts)).collect::<Vec<_>>())
        }
        Node::Chain { arms } => {
            if let Some(i) = arms.iter().position(|arm| a.truth(&arm.test) == Some(true)) {
                counts.hoisted += 1;
                counts.dropped += arms.len() - 1;
                return residual(&arms[i].body, a, counts);
            }
            let mut kept = Vec::with_capacity(arms.len());
            for arm in arms {
                if a.truth(&arm.test) == Some(false) {
                    counts.dropped += 1;
                    continue;
                }
                match residual(&arm.body, a, counts) {
                    Some(body) => kept.push(Arm {
                        test: arm.test.clone(),
                        body,
                    }),
                    None => counts.dropped += 1,
                }
            }
            (!kept.is_empty()).then_some(Node::Chain { arms: kept })
        }
    }
}

pub fn specialize(p: &Program, a: &Assignment) -> Result<SpecializationResult, SpecializeError> {
    let applied = propagate_mutex(p, a)?;
    let mut counts = Counts::default();
    let root = residual(p.root(), &applied, &mut counts).ok_or(SpecializeError::EmptyResidual)?;
    let residual = p
        .with_root(root)
        .expect("a residual of a valid program is valid");
    Ok(SpecializationResult {
        residual,
        applied,
        dropped_arms: counts.dropped,
        hoisted_chains: counts.hoisted,
    })
}

/// True iff no interaction is left.
pub fn is_complete(r: &Program) -> bool {
    r.is_complete()
}

/// Candidate decisions for one key: choose each value, or deny each
/// non-empty subset of its values.
fn decisions_for(values: &BTreeSet<String>) -> Vec<Vec<(bool, String)>> {
    let vals: Vec<&String> = values.iter().collect();
    let mut out: Vec<Vec<(bool, String)>> =
        vals.iter().map(|v| vec![(true, (*v).clone())]).collect();
    // Subset enumeration is capped so a wide key cannot swamp the search.
    let n = vals.len().min(12);
    for mask in 1u32..(1 << n) {
        out.push(
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| (false, vals[i].clone()))
                .collect(),
        );
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Searches for input that specializes `general` into `specific`.
///
/// Only keys whose tests in `specific` differ from those in `general` are
/// decided. Candidates are tried by increasing number of decided keys, so
/// the returned witness is a smallest one. `budget` bounds the number of
/// candidates specialized; running out before the space is exhausted is
/// `BudgetExceeded`, never a silent `None`.
pub fn specializes_to(
    general: &Program,
    specific: &Program,
    budget: usize,
) -> Result<Option<Assignment>, SpecializeError> {
    let general_values = general.values_by_key();
    let specific_values = specific.values_by_key();
    let keys: Vec<(&String, &BTreeSet<String>)> = general_values
        .iter()
        .filter(|(k, vs)| specific_values.get(*k) != Some(*vs))
        .collect();
    let options: Vec<Vec<Vec<(bool, String)>>> =
        keys.iter().map(|(_, vs)| decisions_for(vs)).collect();

    let mut tried = 0usize;
    let mut attempt = |a: &Assignment| -> Result<bool, SpecializeError> {
        if tried >= budget {
            return Err(SpecializeError::BudgetExceeded(budget));
        }
        tried += 1;
        Ok(matches!(specialize(general, a), Ok(r) if r.residual.same_structure(specific)))
    };

    for size in 0..=keys.len() {
        for combo in combinations(keys.len(), size) {
            let mut idx = vec![0usize; combo.len()];
            loop {
                let mut a = Assignment::new();
                for (slot, &k) in combo.iter().enumerate() {
                    let key = keys[k].0;
                    for (chosen, value) in &options[k][idx[slot]] {
                        let t = Test {
                            key: key.clone(),
                            value: value.clone(),
                        };
                        let _ = if *chosen { a.choose(&t) } else { a.deny(&t) };
                    }
                }
                if attempt(&a)? {
                    return Ok(Some(a));
                }
                // Odometer over the per-key option lists.
                let mut exhausted = true;
                for slot in (0..combo.len()).rev() {
                    idx[slot] += 1;
                    if idx[slot] < options[combo[slot]].len() {
                        exhausted = false;
                        break;
                    }
                    idx[slot] = 0;
                }
                if exhausted {
                    break;
                }
            }
        }
    }
    Ok(None)
}
