use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{is_ident, Test, FLAG_VALUE};

/// What partial input says about one key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Chosen(String),
    Denied(BTreeSet<String>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("conflicting input for `{key}`: {detail}")]
pub struct AssignmentConflict {
    pub key: String,
    pub detail: String,
}

/// Partial input: a consistent map from test keys to decisions. A `Chosen`
/// entry subsumes denials of every other value, so none are stored with it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    entries: BTreeMap<String, Decision>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of decided keys.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, key: &str) -> Option<&Decision> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Decision)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub(crate) fn remove(&mut self, key: &str) -> Option<Decision> {
        self.entries.remove(key)
    }

    pub fn choose(&mut self, test: &Test) -> Result<(), AssignmentConflict> {
        let conflict = |detail: String| AssignmentConflict {
            key: test.key.clone(),
            detail,
        };
        match self.entries.get(&test.key) {
            Some(Decision::Chosen(v)) if v != &test.value => {
                Err(conflict(format!("both `{v}` and `{}` chosen", test.value)))
            }
            Some(Decision::Denied(s)) if s.contains(&test.value) => {
                Err(conflict(format!("`{}` is both chosen and denied", test.value)))
            }
            _ => {
                self.entries
                    .insert(test.key.clone(), Decision::Chosen(test.value.clone()));
                Ok(())
            }
        }
    }

    pub fn deny(&mut self, test: &Test) -> Result<(), AssignmentConflict> {
        match self.entries.get_mut(&test.key) {
            Some(Decision::Chosen(v)) if v == &test.value => Err(AssignmentConflict {
                key: test.key.clone(),
                detail: format!("`{v}` is both chosen and denied"),
            }),
            Some(Decision::Chosen(_)) => Ok(()),
            Some(Decision::Denied(s)) => {
                s.insert(test.value.clone());
                Ok(())
            }
            None => {
                self.entries.insert(
                    test.key.clone(),
                    Decision::Denied(BTreeSet::from([test.value.clone()])),
                );
                Ok(())
            }
        }
    }

    pub fn with_chosen(tests: impl IntoIterator<Item = Test>) -> Result<Self, AssignmentConflict> {
        let mut a = Assignment::new();
        for t in tests {
            a.choose(&t)?;
        }
        Ok(a)
    }

    /// `Some(true)` if the input makes `test` hold, `Some(false)` if it rules
    /// it out, `None` if undecided.
    pub fn truth(&self, test: &Test) -> Option<bool> {
        match self.entries.get(&test.key)? {
            Decision::Chosen(v) => Some(v == &test.value),
            Decision::Denied(s) => s.contains(&test.value).then_some(false),
        }
    }

    pub fn merge(&self, other: &Assignment) -> Result<Assignment, AssignmentConflict> {
        let mut out = self.clone();
        for (key, d) in &other.entries {
            match d {
                Decision::Chosen(v) => out.choose(&raw_test(key, v))?,
                Decision::Denied(s) => {
                    for v in s {
                        out.deny(&raw_test(key, v))?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Every chosen test, in key order.
    pub fn chosen(&self) -> impl Iterator<Item = Test> + '_ {
        self.entries.iter().filter_map(|(k, d)| match d {
            Decision::Chosen(v) => Some(raw_test(k, v)),
            Decision::Denied(_) => None,
        })
    }

    /// Parses one entry: `Dem`, `!Dem`, `Party=Dem`, `Party=!Dem`,
    /// `Party!=Dem`, `Seat="Junior Seat"`.
    pub fn add_entry(&mut self, text: &str) -> Result<(), String> {
        let text = text.trim();
        let (test, negated) = if let Some(rest) = text.strip_prefix('!') {
            (rest.parse::<Test>().map_err(|e| e.to_string())?, true)
        } else if let Some((k, v)) = text.split_once("!=") {
            (Test::new(k.trim(), unquote(v.trim())).map_err(|e| e.to_string())?, true)
        } else if let Some((k, v)) = text.split_once('=') {
            match v.trim().strip_prefix('!') {
                Some(v) => (Test::new(k.trim(), unquote(v)).map_err(|e| e.to_string())?, true),
                None => (Test::new(k.trim(), unquote(v.trim())).map_err(|e| e.to_string())?, false),
            }
        } else {
            (Test::flag(text).map_err(|e| e.to_string())?, false)
        };
        let r = if negated {
            self.deny(&test)
        } else {
            self.choose(&test)
        };
        r.map_err(|e| e.to_string())
    }

    pub fn parse_entries<'a>(entries: impl IntoIterator<Item = &'a str>) -> Result<Self, String> {
        let mut a = Assignment::new();
        for e in entries {
            for part in e.split(',').filter(|p| !p.trim().is_empty()) {
                a.add_entry(part)?;
            }
        }
        Ok(a)
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(v)
}

fn raw_test(key: &str, value: &str) -> Test {
    Test {
        key: key.to_string(),
        value: value.to_string(),
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, d) in &self.entries {
            match d {
                Decision::Chosen(v) => parts.push(raw_test(k, v).to_string()),
                Decision::Denied(s) => {
                    for v in s {
                        if v == FLAG_VALUE {
                            parts.push(format!("!{k}"));
                        } else {
                            parts.push(format!("{k}=!{v}"));
                        }
                    }
                }
            }
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

// JSON form: {"Dem": true, "Rep": false, "State": "CA", "Party": "!Rep",
// "Color": ["!Red", "!Blue"]}.
impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (k, d) in &self.entries {
            match d {
                Decision::Chosen(v) if v == FLAG_VALUE => map.serialize_entry(k, &true)?,
                Decision::Chosen(v) => map.serialize_entry(k, v)?,
                Decision::Denied(set) if set.len() == 1 => {
                    let v = set.iter().next().expect("non-empty");
                    if v == FLAG_VALUE {
                        map.serialize_entry(k, &false)?
                    } else {
                        map.serialize_entry(k, &format!("!{v}"))?
                    }
                }
                Decision::Denied(set) => {
                    let vs: Vec<String> = set.iter().map(|v| format!("!{v}")).collect();
                    map.serialize_entry(k, &vs)?
                }
            }
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawValue {
    Bool(bool),
    One(String),
    Many(Vec<String>),
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: BTreeMap<String, RawValue> = BTreeMap::deserialize(d)?;
        let mut a = Assignment::new();
        for (key, value) in raw {
            if !is_ident(&key) {
                return Err(de::Error::custom(format!("invalid key `{key}`")));
            }
            let values = match value {
                RawValue::Bool(true) => vec![FLAG_VALUE.to_string()],
                RawValue::Bool(false) => vec![format!("!{FLAG_VALUE}")],
                RawValue::One(v) => vec![v],
                RawValue::Many(vs) => vs,
            };
            for v in values {
                let r = match v.strip_prefix('!') {
                    Some(v) if !v.is_empty() => a.deny(&raw_test(&key, v)),
                    _ if v.is_empty() => {
                        return Err(de::Error::custom(format!("empty value for `{key}`")))
                    }
                    _ => a.choose(&raw_test(&key, &v)),
                };
                r.map_err(de::Error::custom)?;
            }
        }
        Ok(a)
    }
}
