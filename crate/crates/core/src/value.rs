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

//! Runtime values, their static types, and the multiset `Bag`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Static type of a program value.
///
/// Tuples only occur as bag elements or inside lambdas, and are always flat.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Int,
    Float,
    Bool,
    Str,
    Tuple(Vec<ValueType>),
    Bag(Box<ValueType>),
}

impl ValueType {
    pub fn bag(elem: ValueType) -> ValueType {
        ValueType::Bag(Box::new(elem))
    }

    pub fn is_bag(&self) -> bool {
        matches!(self, ValueType::Bag(_))
    }

    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            ValueType::Int | ValueType::Float | ValueType::Bool | ValueType::Str
        )
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ValueType::Int | ValueType::Float)
    }

    /// Element type of a bag, `None` for non-bags.
    pub fn elem(&self) -> Option<&ValueType> {
        match self {
            ValueType::Bag(e) => Some(e),
            _ => None,
        }
    }

    /// Columns of an element type: a scalar is a single column.
    pub fn columns(&self) -> Vec<ValueType> {
        match self {
            ValueType::Tuple(cols) => cols.clone(),
            other => vec![other.clone()],
        }
    }

    /// Builds an element type from columns, collapsing a single column to a scalar.
    pub fn from_columns(mut cols: Vec<ValueType>) -> ValueType {
        if cols.len() == 1 {
            cols.pop().unwrap()
        } else {
            ValueType::Tuple(cols)
        }
    }

    /// The join key type: the first column.
    pub fn key_type(&self) -> ValueType {
        match self {
            ValueType::Tuple(cols) => cols[0].clone(),
            other => other.clone(),
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Int => f.write_str("Int"),
            ValueType::Float => f.write_str("Float"),
            ValueType::Bool => f.write_str("Bool"),
            ValueType::Str => f.write_str("String"),
            ValueType::Tuple(cols) => {
                f.write_str("(")?;
                for (i, c) in cols.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            ValueType::Bag(e) => write!(f, "Bag<{e}>"),
        }
    }
}

/// A flat runtime value.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(Arc<str>),
    Tuple(Arc<[Value]>),
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Arc::from(items))
    }

    /// Builds a value from columns, collapsing a single column.
    pub fn from_columns(mut cols: Vec<Value>) -> Value {
        if cols.len() == 1 {
            cols.pop().unwrap()
        } else {
            Value::tuple(cols)
        }
    }

    pub fn columns(&self) -> Vec<Value> {
        match self {
            Value::Tuple(items) => items.to_vec(),
            other => vec![other.clone()],
        }
    }

    /// Join/grouping key: first component of a tuple, the value itself otherwise.
    pub fn key(&self) -> &Value {
        match self {
            Value::Tuple(items) => &items[0],
            other => other,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    pub fn contains_float(&self) -> bool {
        match self {
            Value::Float(_) => true,
            Value::Tuple(items) => items.iter().any(Value::contains_float),
            _ => false,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
            Value::Str(_) => 3,
            Value::Tuple(_) => 4,
        }
    }

    /// FNV-1a hash that is stable across processes and runs; used for partitioning.
    pub fn stable_hash(&self) -> u64 {
        let mut h = Fnv(0xcbf2_9ce4_8422_2325);
        self.hash(&mut h);
        h.0
    }

    /// Plain text form used by input and output files: tuple fields are comma separated,
    /// strings are written raw.
    pub fn to_line(&self) -> String {
        match self {
            Value::Tuple(items) => items
                .iter()
                .map(Value::to_line)
                .collect::<Vec<_>>()
                .join(","),
            Value::Str(s) => s.to_string(),
            Value::Float(x) => format!("{x:?}"),
            other => other.to_string(),
        }
    }

    /// Parses one line of an input file according to the declared element type.
    pub fn parse_line(line: &str, ty: &ValueType) -> Result<Value, String> {
        match ty {
            ValueType::Tuple(cols) => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != cols.len() {
                    return Err(format!(
                        "expected {} comma-separated fields, found {}",
                        cols.len(),
                        fields.len()
                    ));
                }
                let vals = fields
                    .iter()
                    .zip(cols)
                    .map(|(f, t)| Value::parse_line(f, t))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Value::tuple(vals))
            }
            ValueType::Int => line
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|e| format!("bad integer `{line}`: {e}")),
            ValueType::Float => line
                .trim()
                .parse::<f64>()
                .map(Value::Float)
                .map_err(|e| format!("bad float `{line}`: {e}")),
            ValueType::Bool => match line.trim() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                other => Err(format!("bad boolean `{other}`")),
            },
            ValueType::Str => Ok(Value::str(line)),
            ValueType::Bag(_) => Err("bag-typed file elements are not supported".into()),
        }
    }

    /// Static type of this value.
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Float(_) => ValueType::Float,
            Value::Bool(_) => ValueType::Bool,
            Value::Str(_) => ValueType::Str,
            Value::Tuple(items) => ValueType::Tuple(items.iter().map(Value::value_type).collect()),
        }
    }
}

struct Fnv(u64);

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Tuple(a), Value::Tuple(b)) => a.iter().cmp(b.iter()),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u8(self.rank());
        match self {
            Value::Int(i) => state.write_i64(*i),
            Value::Float(x) => state.write_u64(x.to_bits()),
            Value::Bool(b) => state.write_u8(u8::from(*b)),
            Value::Str(s) => {
                state.write(s.as_bytes());
                state.write_u8(0xff);
            }
            Value::Tuple(items) => {
                state.write_usize(items.len());
                for v in items.iter() {
                    v.hash(state);
                }
            }
        }
    }
}

/// Canonical form used in traces and dumps. Strings are quoted, floats always carry a
/// decimal point or exponent, so the text parses back unambiguously.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{:?}", s.as_ref()),
            Value::Tuple(items) => {
                f.write_str("(")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Parses the canonical `Display` form of a value.
pub fn parse_value(text: &str) -> Result<Value, String> {
    let mut p = ValueParser {
        chars: text.char_indices().peekable(),
        src: text,
    };
    let v = p.value()?;
    p.skip_ws();
    if let Some((i, _)) = p.chars.peek() {
        return Err(format!("trailing input at byte {i} in `{text}`"));
    }
    Ok(v)
}

/// Parses a comma separated list of canonical values (the inside of a bag listing).
pub fn parse_value_list(text: &str) -> Result<Vec<Value>, String> {
    let mut p = ValueParser {
        chars: text.char_indices().peekable(),
        src: text,
    };
    let mut out = Vec::new();
    p.skip_ws();
    if p.chars.peek().is_none() {
        return Ok(out);
    }
    loop {
        out.push(p.value()?);
        p.skip_ws();
        match p.chars.next() {
            None => return Ok(out),
            Some((_, ',')) => continue,
            Some((i, c)) => return Err(format!("unexpected `{c}` at byte {i}")),
        }
    }
}

struct ValueParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl ValueParser<'_> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn value(&mut self) -> Result<Value, String> {
        self.skip_ws();
        match self.chars.peek().copied() {
            None => Err("unexpected end of value".into()),
            Some((_, '(')) => {
                self.chars.next();
                let mut items = Vec::new();
                loop {
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.chars.next() {
                        Some((_, ',')) => continue,
                        Some((_, ')')) => break,
                        other => return Err(format!("expected `,` or `)`, found {other:?}")),
                    }
                }
                Ok(Value::tuple(items))
            }
            Some((_, '"')) => {
                self.chars.next();
                let mut s = String::new();
                loop {
                    match self.chars.next() {
                        None => return Err("unterminated string".into()),
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match self.chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, 'r')) => s.push('\r'),
                            Some((_, '0')) => s.push('\0'),
                            Some((_, 'u')) => {
                                // \u{XXXX}
                                let mut hex = String::new();
                                match self.chars.next() {
                                    Some((_, '{')) => {}
                                    _ => return Err("bad unicode escape".into()),
                                }
                                loop {
                                    match self.chars.next() {
                                        Some((_, '}')) => break,
                                        Some((_, c)) => hex.push(c),
                                        None => return Err("bad unicode escape".into()),
                                    }
                                }
                                let code = u32::from_str_radix(&hex, 16)
                                    .map_err(|_| "bad unicode escape".to_string())?;
                                s.push(char::from_u32(code).ok_or("bad unicode escape")?);
                            }
                            Some((_, c)) => s.push(c),
                            None => return Err("unterminated escape".into()),
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
                Ok(Value::str(&s))
            }
            Some((start, _)) => {
                let mut end = start;
                while let Some((i, c)) = self.chars.peek().copied() {
                    if c == ',' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    end = i + c.len_utf8();
                    self.chars.next();
                }
                let tok = &self.src[start..end];
                match tok {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ if tok.contains(['.', 'e', 'E', 'N', 'i']) => tok
                        .parse::<f64>()
                        .map(Value::Float)
                        .map_err(|_| format!("bad number `{tok}`")),
                    _ => tok
                        .parse::<i64>()
                        .map(Value::Int)
                        .map_err(|_| format!("bad token `{tok}`")),
                }
            }
        }
    }
}

/// An unordered collection with duplicates. Equality is multiset equality.
#[derive(Debug, Clone, Default)]
pub struct Bag {
    elements: Vec<Value>,
}

impl Bag {
    pub fn new() -> Bag {
        Bag::default()
    }

    pub fn from_vec(elements: Vec<Value>) -> Bag {
        Bag { elements }
    }

    pub fn push(&mut self, v: Value) {
        self.elements.push(v);
    }

    pub fn extend<I: IntoIterator<Item = Value>>(&mut self, it: I) {
        self.elements.extend(it);
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.elements.iter()
    }

    pub fn elements(&self) -> &[Value] {
        &self.elements
    }

    pub fn into_vec(self) -> Vec<Value> {
        self.elements
    }

    /// Elements in canonical (sorted) order.
    pub fn sorted(&self) -> Vec<Value> {
        let mut v = self.elements.clone();
        v.sort();
        v
    }

    /// Element multiplicities.
    pub fn counts(&self) -> BTreeMap<&Value, usize> {
        let mut m = BTreeMap::new();
        for v in &self.elements {
            *m.entry(v).or_insert(0) += 1;
        }
        m
    }

    /// Elements of `self` missing from `other` and elements of `other` missing from
    /// `self`, each with multiplicity.
    pub fn delta(&self, other: &Bag) -> (Vec<Value>, Vec<Value>) {
        let a = self.counts();
        let b = other.counts();
        let mut missing = Vec::new();
        let mut extra = Vec::new();
        for (v, &n) in &a {
            let m = b.get(v).copied().unwrap_or(0);
            for _ in m..n {
                missing.push((*v).clone());
            }
        }
        for (v, &n) in &b {
            let m = a.get(v).copied().unwrap_or(0);
            for _ in m..n {
                extra.push((*v).clone());
            }
        }
        (missing, extra)
    }

    /// Multiset equality that tolerates floating point rounding differences, for bags
    /// whose contents were aggregated in different orders.
    pub fn approx_eq(&self, other: &Bag, rel_tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let a = self.sorted();
        let b = other.sorted();
        a.iter()
            .zip(&b)
            .all(|(x, y)| values_approx_eq(x, y, rel_tol))
    }
}

/// Structural equality with a relative tolerance on floats.
pub fn values_approx_eq(a: &Value, b: &Value, rel_tol: f64) -> bool {
    match (a, b) {
        (Value::Float(x), Value::Float(y)) => {
            x == y || (x - y).abs() <= rel_tol * x.abs().max(y.abs()).max(1e-300)
        }
        (Value::Tuple(xs), Value::Tuple(ys)) => {
            xs.len() == ys.len()
                && xs
                    .iter()
                    .zip(ys.iter())
                    .all(|(x, y)| values_approx_eq(x, y, rel_tol))
        }
        _ => a == b,
    }
}

impl PartialEq for Bag {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.sorted() == other.sorted()
    }
}

impl Eq for Bag {}

impl FromIterator<Value> for Bag {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        Bag {
            elements: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Bag {
    type Item = Value;
    type IntoIter = std::vec::IntoIter<Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.into_iter()
    }
}

/// Canonical listing: `{e1, e2, ...}` with elements sorted.
impl fmt::Display for Bag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.sorted().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_scalar() -> impl Strategy<Value = Value> {
        prop_oneof![
            any::<i64>().prop_map(Value::Int),
            any::<f64>()
                .prop_filter("finite", |x| x.is_finite())
                .prop_map(Value::Float),
            any::<bool>().prop_map(Value::Bool),
            "[a-z \"\\\\,()]{0,8}".prop_map(|s| Value::str(&s)),
        ]
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            arb_scalar(),
            prop::collection::vec(arb_scalar(), 2..4).prop_map(Value::tuple),
        ]
    }

    proptest! {
        #[test]
        fn canonical_text_round_trips(v in arb_value()) {
            let text = v.to_string();
            prop_assert_eq!(parse_value(&text).unwrap(), v);
        }

        #[test]
        fn bag_equality_ignores_order(mut vs in prop::collection::vec(arb_value(), 0..12), seed in any::<u64>()) {
            let a = Bag::from_vec(vs.clone());
            let n = vs.len().max(1);
            vs.rotate_left((seed as usize) % n);
            prop_assert_eq!(a, Bag::from_vec(vs));
        }
    }

    #[test]
    fn delta_reports_multiplicities() {
        let a = Bag::from_vec(vec![Value::Int(1), Value::Int(1), Value::Int(2)]);
        let b = Bag::from_vec(vec![Value::Int(1), Value::Int(3)]);
        let (missing, extra) = a.delta(&b);
        assert_eq!(missing, vec![Value::Int(1), Value::Int(2)]);
        assert_eq!(extra, vec![Value::Int(3)]);
    }

    #[test]
    fn file_lines_parse_by_declared_type() {
        let ty = ValueType::Tuple(vec![ValueType::Int, ValueType::Str]);
        let v = Value::parse_line("7,home", &ty).unwrap();
        assert_eq!(v, Value::tuple(vec![Value::Int(7), Value::str("home")]));
        assert_eq!(v.to_line(), "7,home");
        assert!(Value::parse_line("7", &ty).is_err());
    }

    #[test]
    fn float_display_is_distinguishable_from_int() {
        assert_eq!(Value::Float(1.0).to_string(), "1.0");
        assert_eq!(parse_value("1.0").unwrap(), Value::Float(1.0));
        assert_eq!(parse_value("1").unwrap(), Value::Int(1));
    }
}
