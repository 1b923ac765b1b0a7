// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration behind the command surface: a single JSON config
// describes model, tasks, modes, seeds, routing template, and optional grid
// plan; the sweep fans (mode x task x seed) out over workers, judges every
// run, and emits the trace corpus plus report files. Analyses re-derive
// every report from the corpus alone, so sweep-inline and after-the-fact
// numbers can be compared byte for byte.
#ifndef TR_HARNESS_HARNESS_HPP
#define TR_HARNESS_HARNESS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/engine.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/trace.hpp"
#include "core/tuning.hpp"
#include "harness/tasks.hpp"

namespace tr::harness {

// Parsed experiment description (see README for the JSON schema).
struct ExperimentConfig {
    ModelSpec model;
    bool tasks_explicit = false;
    std::vector<SyntheticTask> task_list; // when tasks_explicit
    TaskFamilyParams family;              // otherwise
    std::vector<Mode> modes;              // deduplicated, canonical order
    std::vector<std::uint64_t> seeds;     // deduplicated, ascending
    RoutingConfig routing;                // template; mode/seed filled per run
    // When set, forces Cold Stop on/off for every mode; otherwise each mode
    // keeps its convention (on for the latent-capable modes, off for CoT).
    std::optional<bool> cold_stop_enabled_override;
    std::optional<tuning::GridSearchPlan> grid;
    std::string out_dir; // empty = unset; the command layer resolves the default
    int workers = 1;
};

ExperimentConfig parse_experiment(const std::string& json_text);
ExperimentConfig load_experiment_file(const std::string& path);

// Config with model and tasks materialized.
struct Experiment {
    std::shared_ptr<const Model> model;
    std::vector<SyntheticTask> tasks;
    ExperimentConfig config;
};
Experiment prepare(const ExperimentConfig& config);

// The routing config a run actually uses.
RoutingConfig job_config(const ExperimentConfig& config, Mode mode, std::uint64_t seed);

// One judged run of one task.
RunTrace run_single(const Experiment& experiment, const std::string& sample_id, Mode mode,
                    std::uint64_t seed);

struct JobFailure {
    std::string sample_id;
    Mode mode = Mode::ThinkRouter;
    std::uint64_t seed = 0;
    std::string error;
};

struct SweepResult {
    std::vector<RunTrace> corpus;          // judged, canonical (mode, task, seed) order
    std::vector<metrics::MetricsRow> rows; // one per mode, canonical order
    std::vector<JobFailure> failures;
    std::optional<tuning::GridSearchReport> grid_report;
};
SweepResult run_sweep(const Experiment& experiment);

struct SweepFiles {
    std::string corpus_path;
    std::string metrics_path;
    std::string meta_path;
    std::optional<std::string> grid_path;
};
SweepFiles write_sweep_outputs(const SweepResult& result, const std::string& out_dir);

// ============================================================
// Corpus analyses
// ============================================================

struct AnalyzeParams {
    double tau = 0.6;      // bins
    int k = 10;            // eot-window
    long bin_width = 50;   // lengths
    double lo = 0.1;       // low-conf grid
    double hi = 0.95;
    double step = 0.05;
    std::string baseline_path; // calibration: the baseline corpus
};

// Runs the named analysis ("metrics", "low-conf", "bins", "eot-window",
// "stop-modes", "lengths", "calibration") over the corpus and writes its
// report file(s) into out_dir. Malformed corpus lines are skipped and
// reported through `diagnostics`. Returns the files written.
std::vector<std::string> analyze_corpus(const std::string& corpus_path,
                                        const std::string& analysis, const AnalyzeParams& params,
                                        const std::string& out_dir,
                                        std::vector<std::string>& diagnostics);

// The "metrics" analysis as a pure function, for two-path comparisons.
std::vector<metrics::MetricsRow> metrics_rows_from_traces(const std::vector<RunTrace>& traces);

// ============================================================
// Replay
// ============================================================

struct ReplayOutcome {
    std::string sample_id;
    Mode mode = Mode::ThinkRouter;
    std::uint64_t seed = 0;
    engine::ReplayReport report;
};
// Re-verifies every trace in the file (single-trace files are one-line
// corpora). Models are rebuilt once per distinct spec.
std::vector<ReplayOutcome> replay_file(const std::string& path);

// Shared small helpers.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace tr::harness

#endif
