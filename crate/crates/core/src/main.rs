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

//! The `laby` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use laby_core::bench::{self, BenchRow};
use laby_core::dataflow::{build_dataflow, export_dot};
use laby_core::inputs::{self, VisitCountSize};
use laby_core::oracle::{diff_traces, run_sequential, ExecutionTrace, DEFAULT_BUDGET};
use laby_core::programs;
use laby_core::runtime::{run, write_events_csv, Driver, Mode, RunConfig, SimConfig};
use laby_core::ssa::{compile_source, dump_ssa, Compiled};
use laby_core::transform::IoEnv;

#[derive(Parser)]
#[command(
    name = "laby",
    version,
    about = "Compile imperative dataflow programs into one cyclic job and run them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, type check and translate a program to SSA.
    Compile {
        file: PathBuf,
        /// Print the SSA program.
        #[arg(long)]
        dump_ssa: bool,
        /// Print the SSA after scalar lifting instead.
        #[arg(long)]
        lifted: bool,
        /// Write the dataflow graph in Graphviz format.
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
        /// Workers assumed for the dataflow graph.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Run a program.
    Run(RunArgs),
    /// Compare two traces; exits with 1 when they differ.
    Diff { expected: PathBuf, actual: PathBuf },
    /// Run a benchmark harness.
    Bench(BenchArgs),
    /// Generate inputs for a reference program.
    Gen {
        /// One of the reference programs, e.g. visit-count or pagerank.
        program: String,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunMode {
    Sequential,
    Parallel,
    PerStep,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DriverArg {
    Threaded,
    Simulated,
}

#[derive(clap::Args)]
struct RunArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "parallel")]
    mode: RunMode,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Threads, or a deterministic simulation seeded by `--seed`.
    #[arg(long, value_enum, default_value = "threaded")]
    driver: DriverArg,
    /// Schedule seed of the simulated driver.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest simulated message latency in microseconds.
    #[arg(long, default_value_t = 50)]
    max_latency_us: u64,
    /// Open a bag only after every instance finished the previous path position.
    #[arg(long)]
    barrier: bool,
    #[arg(long)]
    no_hoist: bool,
    #[arg(long)]
    no_discard: bool,
    /// Delay every bag of a node: `node=<name or id>,ms=<millis>`; repeatable.
    #[arg(long, value_name = "NODE,MS")]
    delay: Vec<String>,
    /// Directory holding the input files; defaults to the program's directory.
    #[arg(long, value_name = "DIR")]
    input_dir: Option<PathBuf>,
    /// Directory receiving `writeFile` parts.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Event log as CSV.
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    /// Setup time added to every job in per-step mode, in milliseconds.
    #[arg(long, default_value_t = 0)]
    job_setup_ms: u64,
    /// Also run the sequential oracle and fail on any trace difference.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchKind {
    StepOverhead,
    Hoisting,
    Pipelining,
}

#[derive(clap::Args)]
struct BenchArgs {
    kind: BenchKind,
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Timed runs per configuration; medians are reported.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 1000)]
    steps: u32,
    #[arg(long, default_value_t = 200)]
    elements: usize,
    /// Visit Count input size; 1 is 10,000 visits per day over 50,000 pages.
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    #[arg(long, default_value_t = 20)]
    days: u32,
    #[arg(long, default_value_t = 50)]
    delay_ms: u64,
}

/// Errors that carry their own diagnostic text.
struct Reported(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            match e.downcast_ref::<Reported>() {
                Some(Reported(msg)) => eprintln!("{msg}"),
                None => eprintln!("laby: {e:#}"),
            }
            ExitCode::FAILURE
        }
    }
}

impl std::fmt::Debug for Reported {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for Reported {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Reported {}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Compile {
            file,
            dump_ssa: dump,
            lifted,
            dot,
            workers,
        } => {
            let c = compile_file(&file)?;
            if dump || lifted {
                print!("{}", dump_ssa(if lifted { &c.lifted } else { &c.ssa }));
            }
            if let Some(dot) = dot {
                let g = build_dataflow(&c.lifted, workers.max(1));
                std::fs::write(&dot, export_dot(&g))
                    .with_context(|| format!("writing {}", dot.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => run_cmd(args),
        Command::Diff { expected, actual } => {
            let e = read_trace(&expected)?;
            let a = read_trace(&actual)?;
            let d = diff_traces(&e, &a);
            if d.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                print!("{d}");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Bench(args) => bench_cmd(args),
        Command::Gen {
            program,
            scale,
            seed,
            out,
        } => {
            let set =
                inputs::generate(&program, scale, seed).ok_or_else(|| unknown_program(&program))?;
            set.write_to(&out)?;
            if let Some((_, src)) = programs::catalog().into_iter().find(|(n, _)| *n == program) {
                let src = match program.as_str() {
                    "visit-count" => programs::visit_count(VisitCountSize::scaled(scale).days),
                    _ => src,
                };
                let p = out.join(format!("{program}.laby"));
                std::fs::write(&p, src).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn unknown_program(name: &str) -> anyhow::Error {
    let names: Vec<&str> = programs::catalog().iter().map(|(n, _)| *n).collect();
    anyhow!("unknown program `{name}`; known: {}", names.join(", "))
}

fn compile_file(file: &Path) -> anyhow::Result<Compiled> {
    let src =
        std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    compile_source(&src).map_err(|e| Reported(e.diagnostic(&file.display().to_string())).into())
}

fn read_trace(file: &Path) -> anyhow::Result<ExecutionTrace> {
    let text =
        std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    ExecutionTrace::parse(&text)
        .map_err(|e| Reported(e.diagnostic(&file.display().to_string())).into())
}

/// Parses `node=<name or id>,ms=<millis>`.
fn parse_delay(arg: &str, c: &Compiled, workers: usize) -> anyhow::Result<(String, u64)> {
    let (mut node, mut ms) = (None, None);
    for part in arg.split(',') {
        match part.split_once('=') {
            Some(("node", v)) => node = Some(v.trim().to_string()),
            Some(("ms", v)) => {
                ms = Some(
                    v.trim()
                        .parse::<u64>()
                        .with_context(|| format!("bad delay `{v}`"))?,
                )
            }
            _ => bail!("bad delay `{arg}`; expected node=<id>,ms=<millis>"),
        }
    }
    let (Some(node), Some(ms)) = (node, ms) else {
        bail!("bad delay `{arg}`; expected node=<id>,ms=<millis>");
    };
    let g = build_dataflow(&c.lifted, workers);
    let name = match node.parse::<usize>() {
        Ok(id) if id < g.nodes.len() => g.node(id).name.clone(),
        Ok(id) => bail!("no node with id {id}"),
        Err(_) => node,
    };
    Ok((name, ms * 1_000_000))
}

fn run_cmd(a: RunArgs) -> anyhow::Result<ExitCode> {
    let c = compile_file(&a.file)?;
    let input_dir = a
        .input_dir
        .clone()
        .unwrap_or_else(|| a.file.parent().map(Path::to_path_buf).unwrap_or_default());
    let mut io = IoEnv::from_dir(input_dir);
    if let Some(dir) = &a.output_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        io = io.with_output_dir(dir);
    }
    let (trace, summary) = if a.mode == RunMode::Sequential {
        let t = run_sequential(&c.lifted, &io, DEFAULT_BUDGET)?;
        let summary = format!("path length {}, {} bags", t.path.len(), t.bags.len());
        (t, summary)
    } else {
        let workers = a.workers.max(1);
        let mut cfg = RunConfig::with_workers(workers);
        cfg.mode = if a.mode == RunMode::PerStep {
            Mode::PerStepJobs
        } else {
            Mode::SingleJob
        };
        if a.driver == DriverArg::Simulated {
            cfg.driver = Driver::Simulated(SimConfig {
                seed: a.seed,
                max_latency_ns: a.max_latency_us * 1000,
            });
        }
        cfg.opts.barrier = a.barrier;
        cfg.opts.hoist = !a.no_hoist;
        cfg.opts.discard = !a.no_discard;
        cfg.opts.events = a.events.is_some();
        cfg.job_setup = Duration::from_millis(a.job_setup_ms);
        for d in &a.delay {
            cfg.delays.push(parse_delay(d, &c, workers)?);
        }
        let r = run(&c.lifted, &io, &cfg)?;
        if let Some(path) = &a.events {
            let g = build_dataflow(&c.lifted, workers);
            let f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_events_csv(&g, &r.events, std::io::BufWriter::new(f))?;
        }
        let (median, p95) = bench::percentiles(&r.step_latencies);
        let summary = format!(
            "path length {}, {} jobs, {} instantiations, {} control messages, {:.3} ms, step median {median:.1} us p95 {p95:.1} us",
            r.path.len(),
            r.jobs,
            r.instantiations,
            r.control_messages,
            r.elapsed.as_secs_f64() * 1e3
        );
        (r.trace.expect("trace enabled"), summary)
    };
    eprintln!("{summary}");
    if let Some(path) = &a.trace {
        std::fs::write(path, trace.to_text())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if a.check && a.mode != RunMode::Sequential {
        let expected = run_sequential(&c.lifted, &io.fresh(), DEFAULT_BUDGET)?;
        let d = diff_traces(&expected, &trace);
        if !d.is_empty() {
            print!("{d}");
            return Ok(ExitCode::FAILURE);
        }
        eprintln!("trace matches the sequential oracle");
    }
    Ok(ExitCode::SUCCESS)
}

fn bench_cmd(a: BenchArgs) -> anyhow::Result<ExitCode> {
    let invocation = std::env::args().collect::<Vec<_>>().join(" ");
    let mut size = VisitCountSize::scaled(a.scale);
    size.days = a.days;
    let rows: Vec<BenchRow> = match a.kind {
        BenchKind::StepOverhead => bench::step_overhead(a.steps, a.elements, a.workers, a.reps)?,
        BenchKind::Hoisting => bench::hoisting(size, a.workers, a.reps)?,
        BenchKind::Pipelining => {
            let runs =
                bench::pipelining(size, Duration::from_millis(a.delay_ms), a.workers, a.reps)?;
            for r in &runs {
                eprintln!("barrier={} overlap per run {:?}", r.barrier, r.overlaps);
            }
            runs.into_iter().map(|r| r.row).collect()
        }
    };
    match &a.csv {
        Some(path) => {
            let f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            bench::write_csv(&rows, &invocation, f)?;
        }
        None => bench::write_csv(&rows, &invocation, std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}
