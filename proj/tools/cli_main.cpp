// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Operator CLI. Links only the public C API; every capability here is
// equally reachable from any language that can call C.
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "thinkrouter.h"

namespace {

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

template <typename T>
const T* opt_ptr(const std::optional<T>& v) {
    return v.has_value() ? &*v : nullptr;
}

int finish(tr_status status, char* report) {
    if (report != nullptr) {
        std::fputs(report, stdout);
        tr_string_free(report);
    }
    if (status != TR_OK)
        std::fprintf(stderr, "error (%s): %s\n", tr_status_name(status), tr_last_error());
    return tr_status_exit_code(status);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ThinkRouter: confidence-routed hybrid discrete/latent decoding"};
    app.require_subcommand(1);

    std::string config_path;
    std::string corpus_path;
    std::string trace_path;
    std::string sample_id;
    std::string mode;
    std::string out_dir;
    std::string analysis = "metrics";
    std::string baseline;
    std::string tau_grid;
    std::optional<double> tau;
    std::optional<std::int64_t> seed;
    std::optional<int> validation_size;
    std::optional<double> bins_tau;
    std::optional<int> window_k;
    std::optional<long> bin_width;
    std::optional<double> lo;
    std::optional<double> hi;
    std::optional<double> step;
    int workers = 0;

    const char* kModes = "one of: cot_sampling, cot_greedy, soft_thinking, random_routing, think_router";
    const char* kOutHelp = "output directory (default: config \"out\", else $THINKROUTER_OUT, else ./out)";

    CLI::App* run = app.add_subcommand("run", "decode one task once and write its trace");
    run->add_option("--config", config_path, "experiment config JSON file")->required();
    run->add_option("--sample", sample_id, "task id (default: the first task)");
    run->add_option("--mode", mode, kModes);
    run->add_option("--tau", tau, "routing threshold override");
    run->add_option("--seed", seed, "seed override (default: first configured seed)");
    run->add_option("--out", out_dir, kOutHelp);

    CLI::App* sweep = app.add_subcommand("sweep", "run every (mode x task x seed), judge, and report");
    sweep->add_option("--config", config_path, "experiment config JSON file")->required();
    sweep->add_option("--mode", mode, std::string("restrict to one mode, ") + kModes);
    sweep->add_option("--tau", tau, "routing threshold override");
    sweep->add_option("--seed", seed, "restrict to one seed");
    sweep->add_option("--tau-grid", tau_grid, "comma-separated ascending taus; enables grid search");
    sweep->add_option("--validation-size", validation_size, "validation split size for grid search");
    sweep->add_option("--workers", workers, "parallel run workers (default: config value)");
    sweep->add_option("--out", out_dir, kOutHelp);

    CLI::App* analyze = app.add_subcommand("analyze", "re-derive a report from a trace corpus");
    analyze->add_option("corpus", corpus_path, "trace corpus (NDJSON)")->required();
    analyze
        ->add_option("--analysis", analysis,
                     "one of: metrics, low-conf, bins, eot-window, stop-modes, lengths, calibration")
        ->capture_default_str();
    analyze->add_option("--tau", bins_tau, "low-confidence threshold (bins; default 0.6)");
    analyze->add_option("--k", window_k, "window size before EOT (eot-window; default 10)");
    analyze->add_option("--bin-width", bin_width, "length histogram bin width (lengths; default 50)");
    analyze->add_option("--lo", lo, "tau grid start (low-conf; default 0.1)");
    analyze->add_option("--hi", hi, "tau grid end (low-conf; default 0.95)");
    analyze->add_option("--step", step, "tau grid step (low-conf; default 0.05)");
    analyze->add_option("--baseline", baseline, "baseline corpus (calibration)");
    analyze->add_option("--out", out_dir, kOutHelp);

    CLI::App* replay = app.add_subcommand("replay", "re-execute recorded traces and verify them");
    replay->add_option("trace", trace_path, "trace file or corpus (NDJSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors are user errors
    }

    char* report = nullptr;
    tr_status status = TR_OK;
    if (run->parsed()) {
        status = tr_cmd_run(config_path.c_str(), opt_cstr(sample_id), opt_cstr(mode), opt_ptr(tau),
                            opt_ptr(seed), opt_cstr(out_dir), &report);
    } else if (sweep->parsed()) {
        status = tr_cmd_sweep(config_path.c_str(), opt_cstr(mode), opt_ptr(tau), opt_ptr(seed),
                              opt_cstr(tau_grid), opt_ptr(validation_size), workers,
                              opt_cstr(out_dir), &report);
    } else if (analyze->parsed()) {
        status = tr_cmd_analyze(corpus_path.c_str(), analysis.c_str(), opt_ptr(bins_tau),
                                opt_ptr(window_k), opt_ptr(bin_width), opt_ptr(lo), opt_ptr(hi),
                                opt_ptr(step), opt_cstr(baseline), opt_cstr(out_dir), &report);
    } else if (replay->parsed()) {
        status = tr_cmd_replay(trace_path.c_str(), &report);
    }
    return finish(status, report);
}
