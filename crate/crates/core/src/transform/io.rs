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

//! File bindings for `readFile` and `writeFile`.
//!
//! Inputs come from a directory or from in-memory files. A file `<name>` is split
//! across instances line by line; files `<name>.partK` are assigned whole, part `K` to
//! instance `K mod parallelism`. Every instance of a writer produces `<name>.partK`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::value::{Bag, Value, ValueType};

#[derive(Debug, Default)]
pub struct IoEnv {
    input_dir: Option<PathBuf>,
    files: BTreeMap<String, Arc<str>>,
    output_dir: Option<PathBuf>,
    written: Mutex<BTreeMap<String, BTreeMap<usize, Vec<Value>>>>,
}

impl IoEnv {
    pub fn in_memory() -> IoEnv {
        IoEnv::default()
    }

    pub fn from_dir(dir: impl Into<PathBuf>) -> IoEnv {
        IoEnv {
            input_dir: Some(dir.into()),
            ..IoEnv::default()
        }
    }

    pub fn with_file(mut self, name: &str, content: impl Into<String>) -> IoEnv {
        self.add_file(name, content);
        self
    }

    pub fn add_file(&mut self, name: &str, content: impl Into<String>) {
        self.files
            .insert(name.to_string(), Arc::from(content.into()));
    }

    /// Writes element lines as an in-memory file.
    pub fn add_values(&mut self, name: &str, values: &[Value]) {
        let mut s = String::new();
        for v in values {
            s.push_str(&v.to_line());
            s.push('\n');
        }
        self.add_file(name, s);
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> IoEnv {
        self.output_dir = Some(dir.into());
        self
    }

    /// A fresh environment with the same inputs and no outputs.
    pub fn fresh(&self) -> IoEnv {
        IoEnv {
            input_dir: self.input_dir.clone(),
            files: self.files.clone(),
            output_dir: self.output_dir.clone(),
            written: Mutex::new(BTreeMap::new()),
        }
    }

    fn text_of(&self, name: &str) -> Result<Option<Arc<str>>> {
        if let Some(t) = self.files.get(name) {
            return Ok(Some(t.clone()));
        }
        if let Some(dir) = &self.input_dir {
            let path = dir.join(name);
            if path.is_file() {
                let t = std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))?;
                return Ok(Some(Arc::from(t)));
            }
        }
        Ok(None)
    }

    fn part_names(&self, name: &str) -> Result<Vec<(usize, String)>> {
        let prefix = format!("{name}.part");
        let mut parts: Vec<(usize, String)> = self
            .files
            .keys()
            .filter_map(|k| {
                k.strip_prefix(&prefix)
                    .and_then(|d| d.parse().ok())
                    .map(|n| (n, k.clone()))
            })
            .collect();
        if let Some(dir) = &self.input_dir {
            if dir.is_dir() {
                let rd = std::fs::read_dir(dir).map_err(|e| Error::io(dir.clone(), e))?;
                for entry in rd.flatten() {
                    let f = entry.file_name().to_string_lossy().to_string();
                    if let Some(n) = f.strip_prefix(&prefix).and_then(|d| d.parse().ok()) {
                        if !parts.iter().any(|(m, _)| *m == n) {
                            parts.push((n, f));
                        }
                    }
                }
            }
        }
        parts.sort();
        Ok(parts)
    }

    /// Elements of `name` read by instance `idx` of `par`.
    pub fn read_shard(
        &self,
        name: &str,
        ty: &ValueType,
        idx: usize,
        par: usize,
    ) -> Result<Vec<Value>> {
        let parse = |text: &str, file: &str, pick: &dyn Fn(usize) -> bool| -> Result<Vec<Value>> {
            let mut out = Vec::new();
            for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
                if pick(i) {
                    out.push(
                        Value::parse_line(line, ty)
                            .map_err(|m| Error::Runtime(format!("{file}: line {}: {m}", i + 1)))?,
                    );
                }
            }
            Ok(out)
        };
        if let Some(text) = self.text_of(name)? {
            return parse(&text, name, &|i| i % par == idx);
        }
        let parts = self.part_names(name)?;
        if parts.is_empty() {
            return Err(Error::Runtime(format!("input file `{name}` not found")));
        }
        let mut out = Vec::new();
        for (k, file) in parts {
            if k % par == idx {
                let text = self
                    .text_of(&file)?
                    .ok_or_else(|| Error::Runtime(format!("input file `{file}` vanished")))?;
                out.extend(parse(&text, &file, &|_| true)?);
            }
        }
        Ok(out)
    }

    /// Records part `part` of output `name`; writing the same part twice is an error.
    pub fn write_part(&self, name: &str, part: usize, values: Vec<Value>) -> Result<()> {
        {
            let mut w = self.written.lock().expect("io lock");
            let parts = w.entry(name.to_string()).or_default();
            if parts.contains_key(&part) {
                return Err(Error::Runtime(format!(
                    "output `{name}.part{part}` is written more than once"
                )));
            }
            parts.insert(part, values.clone());
        }
        if let Some(dir) = &self.output_dir {
            let path = dir.join(format!("{name}.part{part}"));
            let mut s = String::new();
            for v in &values {
                s.push_str(&v.to_line());
                s.push('\n');
            }
            std::fs::write(&path, s).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Everything written so far, parts merged per file name.
    pub fn outputs(&self) -> BTreeMap<String, Bag> {
        let w = self.written.lock().expect("io lock");
        w.iter()
            .map(|(name, parts)| {
                (
                    name.clone(),
                    parts.values().flat_map(|v| v.iter().cloned()).collect(),
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_file_is_split_by_line() {
        let io = IoEnv::in_memory().with_file("f", "1\n2\n3\n4\n5\n");
        let a = io.read_shard("f", &ValueType::Int, 0, 2).unwrap();
        let b = io.read_shard("f", &ValueType::Int, 1, 2).unwrap();
        assert_eq!(a, vec![Value::Int(1), Value::Int(3), Value::Int(5)]);
        assert_eq!(b, vec![Value::Int(2), Value::Int(4)]);
    }

    #[test]
    fn parts_are_assigned_whole() {
        let io = IoEnv::in_memory()
            .with_file("f.part0", "1\n")
            .with_file("f.part1", "2\n")
            .with_file("f.part2", "3\n");
        assert_eq!(io.read_shard("f", &ValueType::Int, 0, 2).unwrap().len(), 2);
        assert_eq!(
            io.read_shard("f", &ValueType::Int, 1, 2).unwrap(),
            vec![Value::Int(2)]
        );
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(IoEnv::in_memory()
            .read_shard("nope", &ValueType::Int, 0, 1)
            .is_err());
    }

    #[test]
    fn double_write_is_rejected() {
        let io = IoEnv::in_memory();
        io.write_part("out", 0, vec![Value::Int(1)]).unwrap();
        io.write_part("out", 1, vec![Value::Int(2)]).unwrap();
        assert!(io.write_part("out", 0, vec![]).is_err());
        assert_eq!(
            io.outputs()["out"],
            Bag::from_vec(vec![Value::Int(2), Value::Int(1)])
        );
    }

    #[test]
    fn writes_go_to_the_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        let io = IoEnv::in_memory().with_output_dir(dir.path());
        io.write_part(
            "o",
            3,
            vec![Value::tuple(vec![Value::Int(1), Value::str("a")])],
        )
        .unwrap();
        assert_eq!(
            std::fs::read_to_string(dir.path().join("o.part3")).unwrap(),
            "1,a\n"
        );
    }
}
