/* Copyright 2026 The Laby Authors. Licensed under the Apache License, Version 2.0. */

#ifndef LABY_H
#define LABY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LabyStatus {
  LABY_STATUS_OK = 0,
  LABY_STATUS_NULL_ARGUMENT = 1,
  LABY_STATUS_INVALID_UTF8 = 2,
  LABY_STATUS_SYNTAX_ERROR = 3,
  LABY_STATUS_TYPE_ERROR = 4,
  LABY_STATUS_RUNTIME_ERROR = 5,
  LABY_STATUS_IO_ERROR = 6,
  LABY_STATUS_TRACE_FORMAT = 7,
  LABY_STATUS_INVALID_ARGUMENT = 8,
  LABY_STATUS_PANIC = 9,
  LABY_STATUS_INTERNAL = 10,
} LabyStatus;

/**
 * A compiled program.
 */
typedef struct LabyProgram LabyProgram;

/**
 * An execution trace.
 */
typedef struct LabyTrace LabyTrace;

/**
 * Options of a parallel run.
 */
typedef struct LabyRunOptions {
  uint32_t workers;
  /**
   * Nonzero: deterministic simulated schedule seeded by `seed`.
   */
  uint8_t simulated;
  uint64_t seed;
  uint8_t barrier;
  uint8_t hoist;
  uint8_t discard;
} LabyRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *laby_last_error(void);

/**
 * Default options: one threaded worker, hoisting and discarding on, no barrier.
 */
struct LabyRunOptions laby_run_options_default(void);

/**
 * Compiles `source`; on success `*out` receives a program handle.
 *
 * # Safety
 * `source` is a nul-terminated string and `out` is valid for writes.
 */
enum LabyStatus laby_compile(const char *source, struct LabyProgram **out);

/**
 * Releases a program; null is ignored.
 *
 * # Safety
 * `program` is null or a handle from [`laby_compile`] not yet freed.
 */
void laby_program_free(struct LabyProgram *program);

/**
 * The SSA form of a program, before (`lifted == 0`) or after scalar lifting.
 *
 * # Safety
 * `program` is a live handle and `out` is valid for writes.
 */
enum LabyStatus laby_program_dump_ssa(const struct LabyProgram *program,
                                      uint8_t lifted,
                                      char **out);

/**
 * The dataflow graph of a program for `workers` workers, in Graphviz format.
 *
 * # Safety
 * `program` is a live handle and `out` is valid for writes.
 */
enum LabyStatus laby_program_dot(const struct LabyProgram *program, uint32_t workers, char **out);

/**
 * Runs a program with the sequential oracle, reading inputs from `input_dir`.
 *
 * # Safety
 * `program` is a live handle, `input_dir` a nul-terminated string and `out` is
 * valid for writes.
 */
enum LabyStatus laby_run_sequential(const struct LabyProgram *program,
                                    const char *input_dir,
                                    struct LabyTrace **out);

/**
 * Runs a program on the parallel runtime, reading inputs from `input_dir`.
 *
 * # Safety
 * `program` is a live handle, `input_dir` a nul-terminated string, `options` null
 * (defaults) or valid, and `out` valid for writes.
 */
enum LabyStatus laby_run_parallel(const struct LabyProgram *program,
                                  const char *input_dir,
                                  const struct LabyRunOptions *options,
                                  struct LabyTrace **out);

/**
 * Parses the canonical text form of a trace.
 *
 * # Safety
 * `text` is a nul-terminated string and `out` is valid for writes.
 */
enum LabyStatus laby_trace_parse(const char *text, struct LabyTrace **out);

/**
 * The canonical text form of a trace.
 *
 * # Safety
 * `trace` is a live handle and `out` is valid for writes.
 */
enum LabyStatus laby_trace_to_text(const struct LabyTrace *trace, char **out);

/**
 * Compares two traces. `*equal` is set to 1 when they agree and 0 otherwise; when
 * `report` is not null it receives the list of differences.
 *
 * # Safety
 * Both traces are live handles, `equal` is valid for writes and `report` is null or
 * valid for writes.
 */
enum LabyStatus laby_trace_diff(const struct LabyTrace *expected,
                                const struct LabyTrace *actual,
                                uint8_t *equal,
                                char **report);

/**
 * Releases a trace; null is ignored.
 *
 * # Safety
 * `trace` is null or a live trace handle.
 */
void laby_trace_free(struct LabyTrace *trace);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` is null or a string from this library not yet freed.
 */
void laby_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* LABY_H */
