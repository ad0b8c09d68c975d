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

//! Source text of the reference programs.

/// Straight-line renaming example.
pub const SSA_STRAIGHT: &str = "a = 0
b = a + 1
a = 5
c = a + 1
";

/// If/else writing the same variable in both branches.
pub const SSA_DIAMOND: &str = "a = 0
c = a == 0
if (c) {
  a = a + 1
} else {
  a = a + 2
}
b = a + 5
";

/// Daily page-visit counts compared with the previous day, for `days` days.
pub fn visit_count(days: u32) -> String {
    format!(
        r#"pageAttributes = readFile<(Int, Int)>("pageAttributes")
yesterdayCnts = emptyBag<(Int, Int)>()
day = 1
do {{
  fileName = "pageVisitLog" + day
  visits = readFile<Int>(fileName)
  joinedWithAttrs = visits.join(pageAttributes)
  visits = joinedWithAttrs.filter(p => p.1 == 0)
  visitsMapped = visits.map(x => (x.0, 1))
  counts = visitsMapped.reduceByKey(p => p.0 + p.1)
  ifCond = day != 1
  if (ifCond) {{
    joinedYesterday = counts.join(yesterdayCnts)
    diffs = joinedYesterday.map(t => abs(t.1 - t.2))
    summed = diffs.reduce(p => p.0 + p.1)
    outFileName = "diff" + day
    summed.writeFile(outFileName)
  }}
  yesterdayCnts = counts
  day = day + 1
  exitCond = day <= {days}
}} while (exitCond)
"#
    )
}

/// A loop whose body branches on the data; with an input containing 0 but not 1
/// the blocks run in the order P A B D A C D.
pub const DATA_DRIVEN_BRANCHES: &str = r#"i = 0
data = readFile<Int>("input")
do {
  iBag = singletonBag(i)
  hits = data.cross(iBag).filter(p => p.0 == p.1)
  n = hits.count()
  c = n > 0
  if (c) {
    x = data.map(v => v + 1)
    y = data.map(v => v * 2)
  } else {
    x = data.map(v => v - 1)
    y = data.filter(v => v > 0)
  }
  z = x.join(y)
  i = i + 1
  c2 = i < 2
} while (c2)
"#;

/// Nested loops where the inner loop joins an outer-loop bag with an inner-loop bag.
pub fn nested_loops(outer: u32, inner: u32) -> String {
    format!(
        r#"i = 0
data = readFile<Int>("input")
do {{
  iBag = singletonBag(i)
  x = data.cross(iBag).map(p => p.0 + p.1)
  j = 0
  do {{
    jBag = singletonBag(j)
    y = data.cross(jBag).map(p => p.0 * (p.1 + 1))
    z = x.join(y)
    j = j + 1
    c2 = j < {inner}
  }} while (c2)
  i = i + 1
  c1 = i < {outer}
}} while (c1)
"#
    )
}

/// The per-step overhead loop: one map over a small bag per step.
pub fn step_overhead(steps: u32) -> String {
    format!(
        r#"i = 0
bag = readFile<Int>("bag")
do {{
  bag = bag.map(x => x + 1)
  i = i + 1
  c = i < {steps}
}} while (c)
"#
    )
}

/// PageRank over one transition file per day with a fixed number of inner steps.
pub fn pagerank(days: u32, steps: u32) -> String {
    format!(
        r#"day = 1
do {{
  edges = readFile<(Int, Int)>("transitions" + day)
  degPairs = edges.map(e => (e.0, 1))
  deg = degPairs.reduceByKey(p => p.0 + p.1)
  n = deg.count()
  inv = 1.0 / float(n)
  invB = singletonBag(inv)
  ranks = deg.cross(invB).map(t => (t.0, t.2))
  withDeg = edges.join(deg)
  k = 0
  do {{
    contribs = withDeg.join(ranks).map(t => (t.1, t.3 / float(t.2)))
    sums = contribs.reduceByKey(p => p.0 + p.1)
    ranks = sums.cross(invB).map(t => (t.0, 0.15 * t.2 + 0.85 * t.1))
    k = k + 1
    c2 = k < {steps}
  }} while (c2)
  ranks.writeFile("ranks" + day)
  day = day + 1
  c1 = day <= {days}
}} while (c1)
"#
    )
}

/// Named reference programs at their default sizes.
pub fn catalog() -> Vec<(&'static str, String)> {
    vec![
        ("ssa-straight", SSA_STRAIGHT.to_string()),
        ("ssa-diamond", SSA_DIAMOND.to_string()),
        ("visit-count", visit_count(365)),
        ("data-driven-branches", DATA_DRIVEN_BRANCHES.to_string()),
        ("nested-loops", nested_loops(3, 4)),
        ("step-overhead", step_overhead(1000)),
        ("pagerank", pagerank(3, 10)),
    ]
}
