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

//! Property tests of the trace format, the operators and whole-program equivalence.

mod common;

use common::*;
use laby_core::frontend::{parse, print_program};
use laby_core::fuzz::{self, FuzzConfig};
use laby_core::oracle::{
    diff_traces, interpret, run_sequential, Assignments, Choice, ExecutionTrace, DEFAULT_BUDGET,
};
use laby_core::runtime::{run, RunConfig};
use laby_core::ssa::compile_source;
use laby_core::value::{Bag, Value};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Value::Int),
        any::<bool>().prop_map(Value::Bool),
        "[a-z ,{}()\"\\\\]{0,6}".prop_map(|s| Value::str(&s)),
        (-1e6f64..1e6).prop_map(Value::Float),
    ];
    prop_oneof![
        3 => leaf.clone(),
        1 => prop::collection::vec(leaf, 2..4).prop_map(Value::tuple),
    ]
}

fn bag() -> impl Strategy<Value = Bag> {
    prop::collection::vec(value(), 0..5).prop_map(Bag::from_vec)
}

fn trace() -> impl Strategy<Value = ExecutionTrace> {
    (
        prop::collection::vec(1usize..6, 0..8),
        prop::collection::btree_map(("[a-z]{1,3}_[0-9]", 1usize..9), bag(), 0..5),
        prop::collection::btree_map(
            ("[a-z]{1,3}_[0-9]", 1usize..9),
            prop::collection::vec((0usize..3, "[a-z]{1,3}_[0-9]", 1usize..9), 1..3),
            0..4,
        ),
        prop::collection::btree_map("[a-z0-9 \"]{1,8}", bag(), 0..3),
    )
        .prop_map(|(path, bags, choices, effects)| ExecutionTrace {
            path,
            bags,
            choices: choices
                .into_iter()
                .map(|(k, cs)| {
                    let cs = cs
                        .into_iter()
                        .map(|(slot, src, src_len)| Choice { slot, src, src_len })
                        .collect();
                    (k, cs)
                })
                .collect(),
            effects,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn trace_text_round_trips(t in trace()) {
        let text = t.to_text();
        let back = ExecutionTrace::parse(&text).unwrap();
        prop_assert!(diff_traces(&t, &back).is_empty());
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn join_equals_nested_loops(seed in any::<u64>(), workers in 1usize..5) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let l = random_pairs(&mut rng, 20, 6);
        let r = random_pairs(&mut rng, 20, 6);
        prop_assert_eq!(run_node(JOIN_SRC, "j_1", workers, &[l.clone(), r.clone()]), nested_loop_join(&l, &r));
    }

    #[test]
    fn reduce_by_key_equals_grouped_fold(seed in any::<u64>(), workers in 1usize..5) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let l = random_pairs(&mut rng, 40, 8);
        prop_assert_eq!(run_node(REDUCE_BY_KEY_SRC, "s_1", workers, std::slice::from_ref(&l)), grouped_sum(&l));
    }

    #[test]
    fn cross_equals_cartesian_product(seed in any::<u64>(), workers in 1usize..5) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let l = random_pairs(&mut rng, 12, 4);
        let r = random_ints(&mut rng, 12);
        prop_assert_eq!(run_node(CROSS_SRC, "x_1", workers, &[l.clone(), r.clone()]), cartesian(&l, &r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn printing_is_a_parse_fixed_point(seed in any::<u64>()) {
        let src = fuzz::program(seed, FuzzConfig::default());
        let printed = print_program(&parse(&src).unwrap());
        prop_assert_eq!(print_program(&parse(&printed).unwrap()), printed);
    }

    #[test]
    fn sequential_oracle_agrees_with_interpreter(seed in any::<u64>()) {
        let c = compile_source(&fuzz::program(seed, FuzzConfig::default())).unwrap();
        let io = fuzz::inputs(seed).env();
        let direct = interpret(&c.typed, &io, DEFAULT_BUDGET).unwrap();
        let trace = run_sequential(&c.lifted, &io.fresh(), DEFAULT_BUDGET).unwrap();
        let d = direct.diff(&Assignments::from_trace(&trace, &c.lifted));
        prop_assert!(d.is_empty(), "{}", d.join("\n"));
    }

    #[test]
    fn parallel_runs_equal_the_oracle(seed in any::<u64>(), w in 0usize..4, schedule in any::<u64>()) {
        let workers = [1, 2, 4, 8][w];
        let c = compile_source(&fuzz::program(seed, FuzzConfig::default())).unwrap();
        let io = fuzz::inputs(seed).env();
        let expected = run_sequential(&c.lifted, &io, DEFAULT_BUDGET).unwrap();
        let got = run(&c.lifted, &io, &RunConfig::simulated(workers, schedule, 30_000)).unwrap();
        let d = diff_traces(&expected, got.trace.as_ref().unwrap());
        prop_assert!(d.is_empty(), "{}", d);
    }

    #[test]
    fn hoisting_and_barrier_do_not_change_traces(seed in any::<u64>(), schedule in any::<u64>()) {
        let c = compile_source(&fuzz::program(seed, FuzzConfig::default())).unwrap();
        let io = fuzz::inputs(seed).env();
        let base = run(&c.lifted, &io, &RunConfig::simulated(3, schedule, 30_000)).unwrap().trace.unwrap();
        for (hoist, barrier) in [(false, false), (true, true)] {
            let mut cfg = RunConfig::simulated(3, schedule, 30_000);
            cfg.opts.hoist = hoist;
            cfg.opts.barrier = barrier;
            let t = run(&c.lifted, &io, &cfg).unwrap().trace.unwrap();
            prop_assert_eq!(&t, &base);
        }
    }

    #[test]
    fn runs_are_deterministic_under_simulation(seed in any::<u64>(), schedule in any::<u64>()) {
        let c = compile_source(&fuzz::program(seed, FuzzConfig::default())).unwrap();
        let io = fuzz::inputs(seed).env();
        let cfg = RunConfig::simulated(4, schedule, 30_000);
        let a = run(&c.lifted, &io, &cfg).unwrap();
        let b = run(&c.lifted, &io, &cfg).unwrap();
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.control_messages, b.control_messages);
        prop_assert_eq!(a.elapsed, b.elapsed);
    }
}
