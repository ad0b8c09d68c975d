// Copyright 2026 The Laby Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Execution traces, their canonical text form and trace comparison.
//!
//! The text form has one record per line, sorted:
//!
//! ```text
//! path 1 2 3
//! bag <node> <pathLen> {elements}
//! choice <node> <pathLen> <slot> <srcNode> <srcPathLen>
//! effect "<file>" {elements}
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::frontend::BlockId;
use crate::value::{parse_value_list, Bag};

/// Relative tolerance for floats when comparing traces.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Identifies a bag: producing node (by SSA name) and execution-path length.
pub type BagKey = (String, usize);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Choice {
    pub slot: usize,
    pub src: String,
    pub src_len: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionTrace {
    pub path: Vec<BlockId>,
    pub bags: BTreeMap<BagKey, Bag>,
    /// Input bag chosen for every active slot of every computed bag.
    pub choices: BTreeMap<BagKey, Vec<Choice>>,
    pub effects: BTreeMap<String, Bag>,
}

impl ExecutionTrace {
    /// Bag path lengths of `node`, in order.
    pub fn node_order(&self, node: &str) -> Vec<usize> {
        self.bags
            .keys()
            .filter(|(n, _)| n == node)
            .map(|(_, l)| *l)
            .collect()
    }

    pub fn bag(&self, node: &str, len: usize) -> Option<&Bag> {
        self.bags.get(&(node.to_string(), len))
    }

    /// Number of bags of `node` that chose each bag of `src`.
    pub fn consumption_counts(&self, node: &str, src: &str) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for ((n, _), cs) in &self.choices {
            if n == node {
                for c in cs.iter().filter(|c| c.src == src) {
                    *m.entry(c.src_len).or_insert(0) += 1;
                }
            }
        }
        m
    }

    pub fn element_count(&self) -> usize {
        self.bags.values().map(Bag::len).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("path");
        for b in &self.path {
            write!(out, " {b}").unwrap();
        }
        out.push('\n');
        for ((n, l), bag) in &self.bags {
            writeln!(out, "bag {n} {l} {bag}").unwrap();
        }
        for ((n, l), cs) in &self.choices {
            let mut cs = cs.clone();
            cs.sort();
            for c in cs {
                writeln!(out, "choice {n} {l} {} {} {}", c.slot, c.src, c.src_len).unwrap();
            }
        }
        for (f, bag) in &self.effects {
            writeln!(out, "effect {f:?} {bag}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<ExecutionTrace> {
        let mut t = ExecutionTrace::default();
        for (i, line) in text.lines().enumerate() {
            let err = |m: &str| Error::TraceFormat {
                line: i + 1,
                message: m.to_string(),
            };
            if line.trim().is_empty() {
                continue;
            }
            let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
            match kind {
                "path" => {
                    t.path = rest
                        .split_whitespace()
                        .map(|b| b.parse().map_err(|_| err("bad block id")))
                        .collect::<Result<_>>()?;
                }
                "bag" => {
                    let mut it = rest.splitn(3, ' ');
                    let node = it.next().ok_or_else(|| err("missing node"))?;
                    let len = it
                        .next()
                        .and_then(|l| l.parse().ok())
                        .ok_or_else(|| err("bad path length"))?;
                    let bag = parse_bag(it.next().unwrap_or("")).map_err(|m| err(&m))?;
                    t.bags.insert((node.to_string(), len), bag);
                }
                "choice" => {
                    let f: Vec<&str> = rest.split(' ').collect();
                    if f.len() != 5 {
                        return Err(err("choice needs five fields"));
                    }
                    let num = |s: &str| s.parse::<usize>().map_err(|_| err("bad number"));
                    t.choices
                        .entry((f[0].to_string(), num(f[1])?))
                        .or_default()
                        .push(Choice {
                            slot: num(f[2])?,
                            src: f[3].to_string(),
                            src_len: num(f[4])?,
                        });
                }
                "effect" => {
                    let (name, bag) = parse_quoted(rest).ok_or_else(|| err("bad file name"))?;
                    t.effects
                        .insert(name, parse_bag(bag.trim()).map_err(|m| err(&m))?);
                }
                other => return Err(err(&format!("unknown record `{other}`"))),
            }
        }
        Ok(t)
    }
}

fn parse_bag(text: &str) -> std::result::Result<Bag, String> {
    let inner = text
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| format!("bag listing `{text}` is not braced"))?;
    Ok(Bag::from_vec(parse_value_list(inner)?))
}

fn parse_quoted(s: &str) -> Option<(String, &str)> {
    let s = s.strip_prefix('"')?;
    let mut out = String::new();
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Some((out, &s[i + 1..])),
            '\\' => match chars.next()?.1 {
                'n' => out.push('\n'),
                't' => out.push('\t'),
                'r' => out.push('\r'),
                '0' => out.push('\0'),
                c => out.push(c),
            },
            c => out.push(c),
        }
    }
    None
}

/// Mismatches between two traces; empty when they agree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceDiff {
    pub items: Vec<String>,
}

impl TraceDiff {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl std::fmt::Display for TraceDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in &self.items {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

fn bag_delta(expected: &Bag, actual: &Bag) -> String {
    let (missing, extra) = expected.delta(actual);
    let show = |v: &[crate::value::Value]| Bag::from_vec(v.to_vec()).to_string();
    format!("missing {} extra {}", show(&missing), show(&extra))
}

/// Compares `actual` against `expected`: paths, per-node bag ids, bag contents, input
/// choices and side effects.
pub fn diff_traces(expected: &ExecutionTrace, actual: &ExecutionTrace) -> TraceDiff {
    let mut items = Vec::new();
    if expected.path != actual.path {
        items.push(format!(
            "path differs: expected {:?}, got {:?}",
            expected.path, actual.path
        ));
    }
    for (k, b) in &expected.bags {
        match actual.bags.get(k) {
            None => items.push(format!("bag ({}, {}) missing", k.0, k.1)),
            Some(a) if !b.approx_eq(a, FLOAT_TOLERANCE) => items.push(format!(
                "bag ({}, {}) differs: {}",
                k.0,
                k.1,
                bag_delta(b, a)
            )),
            _ => {}
        }
    }
    for k in actual
        .bags
        .keys()
        .filter(|k| !expected.bags.contains_key(*k))
    {
        items.push(format!("bag ({}, {}) unexpected", k.0, k.1));
    }
    let norm = |cs: Option<&Vec<Choice>>| {
        let mut v = cs.cloned().unwrap_or_default();
        v.sort();
        v
    };
    let keys: std::collections::BTreeSet<_> = expected
        .choices
        .keys()
        .chain(actual.choices.keys())
        .collect();
    for k in keys {
        let (e, a) = (norm(expected.choices.get(k)), norm(actual.choices.get(k)));
        if e != a {
            items.push(format!(
                "choices of ({}, {}) differ: expected {e:?}, got {a:?}",
                k.0, k.1
            ));
        }
    }
    for (f, b) in &expected.effects {
        match actual.effects.get(f) {
            None => items.push(format!("effect {f:?} missing")),
            Some(a) if !b.approx_eq(a, FLOAT_TOLERANCE) => {
                items.push(format!("effect {f:?} differs: {}", bag_delta(b, a)))
            }
            _ => {}
        }
    }
    for f in actual
        .effects
        .keys()
        .filter(|f| !expected.effects.contains_key(*f))
    {
        items.push(format!("effect {f:?} unexpected"));
    }
    TraceDiff { items }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Value;

    fn sample() -> ExecutionTrace {
        let mut t = ExecutionTrace {
            path: vec![1, 2, 2],
            ..Default::default()
        };
        t.bags.insert(
            ("a_1".into(), 1),
            Bag::from_vec(vec![Value::Int(2), Value::Int(1)]),
        );
        t.bags.insert(
            ("$3".into(), 2),
            Bag::from_vec(vec![Value::str("x y"), Value::Float(0.5)]),
        );
        t.choices.insert(
            ("$3".into(), 2),
            vec![Choice {
                slot: 0,
                src: "a_1".into(),
                src_len: 1,
            }],
        );
        t.effects.insert(
            "out \"1\"".into(),
            Bag::from_vec(vec![Value::tuple(vec![Value::Int(1), Value::Bool(true)])]),
        );
        t
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        let text = t.to_text();
        let back = ExecutionTrace::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn identical_traces_have_empty_diff() {
        assert!(diff_traces(&sample(), &sample()).is_empty());
    }

    #[test]
    fn dropped_element_is_reported() {
        let mut t = sample();
        t.bags
            .insert(("a_1".into(), 1), Bag::from_vec(vec![Value::Int(2)]));
        let d = diff_traces(&sample(), &t);
        assert_eq!(d.items.len(), 1);
        assert!(d.items[0].contains("(a_1, 1)"));
        assert!(d.items[0].contains("missing {1}"));
    }

    #[test]
    fn float_rounding_is_tolerated() {
        let mut a = ExecutionTrace::default();
        a.bags.insert(
            ("r".into(), 1),
            Bag::from_vec(vec![Value::Float(0.1 + 0.2)]),
        );
        let mut b = ExecutionTrace::default();
        b.bags
            .insert(("r".into(), 1), Bag::from_vec(vec![Value::Float(0.3)]));
        assert!(diff_traces(&a, &b).is_empty());
        b.bags
            .insert(("r".into(), 1), Bag::from_vec(vec![Value::Float(0.31)]));
        assert!(!diff_traces(&a, &b).is_empty());
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert!(matches!(
            ExecutionTrace::parse("bag x"),
            Err(Error::TraceFormat { line: 1, .. })
        ));
        assert!(ExecutionTrace::parse("path 1\nwhat 3").is_err());
    }
}
