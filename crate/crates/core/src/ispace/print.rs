use std::fmt::Write;

use super::{Node, Program};

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Canonical surface syntax: mutex headers in name order, then metadata,
/// then the body with four-space indentation.
pub fn serialize(p: &Program) -> String {
    let mut out = String::new();
    for g in p.mutexes() {
        let members: Vec<String> = g.members.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "mutex {} {{ {} }}", g.name, members.join(", "));
    }
    for (k, v) in p.meta() {
        let _ = writeln!(out, "meta {k} {};", quote(v));
    }
    if !out.is_empty() {
        out.push('\n');
    }
    node(&mut out, p.root(), 0);
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn node(out: &mut String, n: &Node, depth: usize) {
    match n {
        Node::Content { page, payload } => {
            indent(out, depth);
            if payload.is_empty() {
                let _ = writeln!(out, "page {};", quote(page));
            } else {
                let _ = writeln!(out, "page {} {};", quote(page), quote(payload));
            }
        }
        Node::Seq { children } => children.iter().for_each(|c| node(out, c, depth)),
        Node::Chain { arms } => {
            indent(out, depth);
            for (i, arm) in arms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" else ");
                }
                let _ = writeln!(out, "if ({}) {{", arm.test);
                node(out, &arm.body, depth + 1);
                indent(out, depth);
                out.push('}');
            }
            out.push('\n');
        }
    }
}
