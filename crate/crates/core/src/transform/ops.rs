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

//! Primitive transformations.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{IoEnv, Transformation};
use crate::error::{Error, Result};
use crate::udf::Udf;
use crate::value::{Value, ValueType};

fn udf_err(f: &Udf, m: String) -> Error {
    Error::Runtime(format!("in `{f}`: {m}"))
}

pub struct Constant {
    pub value: Value,
    /// Only one instance emits, so the bag holds exactly one element.
    pub emit: bool,
}

impl Transformation for Constant {
    fn open(&mut self, _active: &[bool]) {}
    fn push(&mut self, _slot: usize, _v: Value, _out: &mut Vec<Value>) -> Result<()> {
        Err(Error::Protocol("constants have no inputs".into()))
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, out: &mut Vec<Value>) -> Result<()> {
        if self.emit {
            out.push(self.value.clone());
        }
        Ok(())
    }
}

pub struct Nothing;

impl Transformation for Nothing {
    fn open(&mut self, _active: &[bool]) {}
    fn push(&mut self, _slot: usize, _v: Value, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
}

/// Φ and copies pass their single active input through.
pub struct Identity;

impl Transformation for Identity {
    fn open(&mut self, _active: &[bool]) {}
    fn push(&mut self, _slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()> {
        out.push(v);
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
}

pub struct Map(pub Udf);

impl Transformation for Map {
    fn open(&mut self, _active: &[bool]) {}
    fn push(&mut self, _slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()> {
        out.push(self.0.apply(&v).map_err(|m| udf_err(&self.0, m))?);
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
}

pub struct Filter(pub Udf);

impl Transformation for Filter {
    fn open(&mut self, _active: &[bool]) {}
    fn push(&mut self, _slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()> {
        match self.0.apply(&v).map_err(|m| udf_err(&self.0, m))? {
            Value::Bool(true) => out.push(v),
            Value::Bool(false) => {}
            other => return Err(udf_err(&self.0, format!("predicate returned {other}"))),
        }
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
}

/// Hash join with slot 0 as the build side. Probes that arrive before the build side
/// is closed wait.
pub struct Join {
    receiver_is_build: bool,
    table: HashMap<Value, Vec<Vec<Value>>>,
    built: bool,
    pending: Vec<Value>,
}

impl Join {
    pub fn new(receiver_is_build: bool) -> Join {
        Join {
            receiver_is_build,
            table: HashMap::new(),
            built: false,
            pending: Vec::new(),
        }
    }

    fn probe(&self, v: &Value, out: &mut Vec<Value>) {
        let cols = v.columns();
        if let Some(matches) = self.table.get(&cols[0]) {
            for rest in matches {
                let mut row = Vec::with_capacity(cols.len() + rest.len());
                row.push(cols[0].clone());
                if self.receiver_is_build {
                    row.extend(rest.iter().cloned());
                    row.extend(cols[1..].iter().cloned());
                } else {
                    row.extend(cols[1..].iter().cloned());
                    row.extend(rest.iter().cloned());
                }
                out.push(Value::from_columns(row));
            }
        }
    }
}

impl Transformation for Join {
    fn open(&mut self, active: &[bool]) {
        if active[0] {
            self.table.clear();
            self.built = false;
        }
        self.pending.clear();
    }
    fn push(&mut self, slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()> {
        if slot == 0 {
            let mut cols = v.columns();
            let key = cols.remove(0);
            self.table.entry(key).or_default().push(cols);
        } else if self.built {
            self.probe(&v, out);
        } else {
            self.pending.push(v);
        }
        Ok(())
    }
    fn close_in(&mut self, slot: usize, out: &mut Vec<Value>) -> Result<()> {
        if slot == 0 {
            self.built = true;
            for v in std::mem::take(&mut self.pending) {
                self.probe(&v, out);
            }
        }
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn drop_state(&mut self) {
        self.table = HashMap::new();
        self.built = false;
    }
}

/// Cartesian product buffering slot 0.
pub struct Cross {
    receiver_is_build: bool,
    left: Vec<Vec<Value>>,
    built: bool,
    pending: Vec<Value>,
}

impl Cross {
    pub fn new(receiver_is_build: bool) -> Cross {
        Cross {
            receiver_is_build,
            left: Vec::new(),
            built: false,
            pending: Vec::new(),
        }
    }

    fn pair(&self, v: &Value, out: &mut Vec<Value>) {
        let cols = v.columns();
        for l in &self.left {
            let row: Vec<Value> = if self.receiver_is_build {
                l.iter().chain(cols.iter()).cloned().collect()
            } else {
                cols.iter().chain(l.iter()).cloned().collect()
            };
            out.push(Value::from_columns(row));
        }
    }
}

impl Transformation for Cross {
    fn open(&mut self, active: &[bool]) {
        if active[0] {
            self.left.clear();
            self.built = false;
        }
        self.pending.clear();
    }
    fn push(&mut self, slot: usize, v: Value, out: &mut Vec<Value>) -> Result<()> {
        if slot == 0 {
            self.left.push(v.columns());
        } else if self.built {
            self.pair(&v, out);
        } else {
            self.pending.push(v);
        }
        Ok(())
    }
    fn close_in(&mut self, slot: usize, out: &mut Vec<Value>) -> Result<()> {
        if slot == 0 {
            self.built = true;
            for v in std::mem::take(&mut self.pending) {
                self.pair(&v, out);
            }
        }
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn drop_state(&mut self) {
        self.left = Vec::new();
        self.built = false;
    }
}

pub struct ReduceByKey {
    f: Udf,
    acc: BTreeMap<Value, Value>,
}

impl ReduceByKey {
    pub fn new(f: Udf) -> ReduceByKey {
        ReduceByKey {
            f,
            acc: BTreeMap::new(),
        }
    }
}

impl Transformation for ReduceByKey {
    fn open(&mut self, _active: &[bool]) {
        self.acc.clear();
    }
    fn push(&mut self, _slot: usize, v: Value, _out: &mut Vec<Value>) -> Result<()> {
        let mut cols = v.columns();
        let key = cols.remove(0);
        let val = Value::from_columns(cols);
        match self.acc.get_mut(&key) {
            Some(a) => {
                let next = self
                    .f
                    .apply(&Value::tuple(vec![a.clone(), val]))
                    .map_err(|m| udf_err(&self.f, m))?;
                *a = next;
            }
            None => {
                self.acc.insert(key, val);
            }
        }
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, out: &mut Vec<Value>) -> Result<()> {
        for (k, v) in std::mem::take(&mut self.acc) {
            let mut row = vec![k];
            row.extend(v.columns());
            out.push(Value::from_columns(row));
        }
        Ok(())
    }
}

/// Folds the whole bag; an empty input yields an empty output.
pub struct Reduce {
    f: Udf,
    acc: Option<Value>,
}

impl Reduce {
    pub fn new(f: Udf) -> Reduce {
        Reduce { f, acc: None }
    }
}

impl Transformation for Reduce {
    fn open(&mut self, _active: &[bool]) {
        self.acc = None;
    }
    fn push(&mut self, _slot: usize, v: Value, _out: &mut Vec<Value>) -> Result<()> {
        self.acc = Some(match self.acc.take() {
            None => v,
            Some(a) => self
                .f
                .apply(&Value::tuple(vec![a, v]))
                .map_err(|m| udf_err(&self.f, m))?,
        });
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, out: &mut Vec<Value>) -> Result<()> {
        out.extend(self.acc.take());
        Ok(())
    }
}

#[derive(Default)]
pub struct Count(i64);

impl Transformation for Count {
    fn open(&mut self, _active: &[bool]) {
        self.0 = 0;
    }
    fn push(&mut self, _slot: usize, _v: Value, _out: &mut Vec<Value>) -> Result<()> {
        self.0 += 1;
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, out: &mut Vec<Value>) -> Result<()> {
        out.push(Value::Int(self.0));
        Ok(())
    }
}

fn file_name(v: Value) -> Result<String> {
    match v {
        Value::Str(s) => Ok(s.to_string()),
        other => Err(Error::Runtime(format!(
            "file name must be a string, found {other}"
        ))),
    }
}

pub struct ReadFile {
    ty: ValueType,
    io: Arc<IoEnv>,
    idx: usize,
    par: usize,
    names: Vec<String>,
}

impl ReadFile {
    pub fn new(ty: ValueType, io: Arc<IoEnv>, idx: usize, par: usize) -> ReadFile {
        ReadFile {
            ty,
            io,
            idx,
            par,
            names: Vec::new(),
        }
    }
}

impl Transformation for ReadFile {
    fn open(&mut self, _active: &[bool]) {
        self.names.clear();
    }
    fn push(&mut self, _slot: usize, v: Value, _out: &mut Vec<Value>) -> Result<()> {
        self.names.push(file_name(v)?);
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, out: &mut Vec<Value>) -> Result<()> {
        for name in std::mem::take(&mut self.names) {
            out.extend(self.io.read_shard(&name, &self.ty, self.idx, self.par)?);
        }
        Ok(())
    }
}

/// Writes this instance's partition as one part file; emits nothing.
pub struct WriteFile {
    io: Arc<IoEnv>,
    idx: usize,
    data: Vec<Value>,
    names: Vec<String>,
}

impl WriteFile {
    pub fn new(io: Arc<IoEnv>, idx: usize) -> WriteFile {
        WriteFile {
            io,
            idx,
            data: Vec::new(),
            names: Vec::new(),
        }
    }
}

impl Transformation for WriteFile {
    fn open(&mut self, _active: &[bool]) {
        self.data.clear();
        self.names.clear();
    }
    fn push(&mut self, slot: usize, v: Value, _out: &mut Vec<Value>) -> Result<()> {
        if slot == 0 {
            self.data.push(v);
        } else {
            self.names.push(file_name(v)?);
        }
        Ok(())
    }
    fn close_in(&mut self, _slot: usize, _out: &mut Vec<Value>) -> Result<()> {
        Ok(())
    }
    fn finish(&mut self, _out: &mut Vec<Value>) -> Result<()> {
        let data = std::mem::take(&mut self.data);
        for name in std::mem::take(&mut self.names) {
            self.io.write_part(&name, self.idx, data.clone())?;
        }
        Ok(())
    }
}
