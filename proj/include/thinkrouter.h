/* Copyright 2026 ThinkRouter Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * ThinkRouter C API.
 *
 * Everything the engine can do is reachable through this header: open a
 * model, drive a decode session step by step, serve a model over the NDJSON
 * stdio protocol, and run the four operator commands (run / sweep / analyze
 * / replay) that the bundled CLI exposes.
 *
 * Conventions:
 *   - Every fallible call returns a tr_status. TR_OK is 0; anything else is
 *     an error whose human-readable detail is available from tr_last_error()
 *     on the same thread until the next API call on that thread.
 *   - Handles are opaque. Close functions accept NULL and never fail.
 *   - Strings returned through `char**` out-parameters are heap-allocated;
 *     release them with tr_string_free().
 *   - Optional scalar parameters are passed as pointers; NULL means "keep
 *     the configured/default value".
 *   - Logits buffers are caller-allocated arrays of vocab_size doubles.
 */
#ifndef THINKROUTER_H
#define THINKROUTER_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* ============================================================
 * Status codes
 * ============================================================ */

typedef enum tr_status {
    TR_OK = 0,
    TR_ERR_INVALID_ARGUMENT = 1, /* bad parameter or config value */
    TR_ERR_PARSE = 2,            /* malformed JSON/CSV/flag input */
    TR_ERR_VALIDATION = 3,       /* well-formed input violating an invariant */
    TR_ERR_IO = 4,               /* filesystem failure */
    TR_ERR_PROVIDER = 5,         /* model backend failure (e.g. remote child) */
    TR_ERR_INTERNAL = 6          /* unexpected condition; please report */
} tr_status;

/* Stable identifier for a status, e.g. "invalid_argument". */
const char* tr_status_name(tr_status status);

/* Conventional process exit code for a status: 0 success, 1 user error
 * (invalid_argument / parse / validation), 2 internal (io / provider /
 * internal). */
int tr_status_exit_code(tr_status status);

/* Detail message for the most recent failing call on this thread ("" if none). */
const char* tr_last_error(void);

/* Release a string returned through a char** out-parameter. NULL is a no-op. */
void tr_string_free(char* s);

/* ============================================================
 * Models
 * ============================================================ */

typedef struct tr_model tr_model;
typedef struct tr_session tr_session;

/* Open a model from a spec document (JSON text / file containing it). */
tr_status tr_model_open_json(const char* spec_json, tr_model** out_model);
tr_status tr_model_open_file(const char* path, tr_model** out_model);
void tr_model_close(tr_model* model);

int32_t tr_model_vocab_size(const tr_model* model);
int32_t tr_model_dim(const tr_model* model);
int32_t tr_model_eot_token(const tr_model* model);

/* Serve this model over the NDJSON line protocol on stdin/stdout until EOF.
 * This is what the bundled `thinkrouter-modeld` binary does. */
tr_status tr_model_serve_stdio(tr_model* model);

/* ============================================================
 * Sessions (one strictly sequential decode stream)
 * ============================================================ */

/* Open a session primed with a non-empty prompt. */
tr_status tr_session_open(tr_model* model, const int32_t* prompt, size_t prompt_len,
                          tr_session** out_session);
void tr_session_close(tr_session* session);

/* Logits for the position right after the prompt. Valid only as the first
 * step of a session. */
tr_status tr_session_prompt_logits(tr_session* session, double* logits_out);

/* Feed one discrete token and return the next position's logits. */
tr_status tr_session_next_token(tr_session* session, int32_t token, double* logits_out);

/* Feed one soft embedding vector (length = model dim) and return the next
 * position's logits. */
tr_status tr_session_next_soft(tr_session* session, const double* vec, size_t dim,
                               double* logits_out);

/* ============================================================
 * Commands (the CLI surface)
 *
 * All commands read a JSON experiment config (see README for the schema)
 * except analyze/replay, which read a trace corpus. `out_dir` NULL resolves
 * to: the config's "out" key, else $THINKROUTER_OUT, else "out". Each
 * command fills `report_out` (when non-NULL) with a short human-readable
 * summary of what it did or found.
 * ============================================================ */

/* Run one task under one mode/seed and write <out_dir>/run.ndjson (a
 * one-line trace corpus). NULL sample_id = the first task; NULL mode = the
 * config template's mode; NULL tau/seed = config values. */
tr_status tr_cmd_run(const char* config_path, const char* sample_id, const char* mode,
                     const double* tau, const int64_t* seed, const char* out_dir,
                     char** report_out);

/* Run the full (mode x task x seed) sweep, judging every run; write
 * <out_dir>/corpus.ndjson, metrics.csv, meta.json, and (with a grid plan)
 * tau_table.csv. Per-run failures are recorded in meta.json and the sweep
 * continues. `mode`/`seed` restrict the sweep to that one mode/seed.
 * `tau_grid` is a comma-separated ascending list; it (or validation_size)
 * turns grid search on if the config lacks a plan. workers <= 0 keeps the
 * configured value. */
tr_status tr_cmd_sweep(const char* config_path, const char* mode, const double* tau,
                       const int64_t* seed, const char* tau_grid, const int* validation_size,
                       int workers, const char* out_dir, char** report_out);

/* Re-derive a report from a trace corpus. `analysis` is one of: metrics,
 * low-conf, bins, eot-window, stop-modes, lengths, calibration. Optional
 * knobs: tau (bins), k (eot-window), bin_width (lengths), lo/hi/step
 * (low-conf), baseline_corpus (calibration). Malformed corpus lines are
 * skipped and reported (with line numbers) in the summary. */
tr_status tr_cmd_analyze(const char* corpus_path, const char* analysis, const double* tau,
                         const int* k, const long* bin_width, const double* lo, const double* hi,
                         const double* step, const char* baseline_corpus, const char* out_dir,
                         char** report_out);

/* Re-execute every trace in the file from its recorded config and compare
 * against the recorded steps (bitwise for in-process providers, within the
 * declared tolerance for remote ones). Returns TR_OK when every trace
 * verifies; TR_ERR_VALIDATION when any diverges (the report names the first
 * divergent step of each failing trace). */
tr_status tr_cmd_replay(const char* trace_path, char** report_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* THINKROUTER_H */
