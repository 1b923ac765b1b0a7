// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// C API implementation: thin exception-to-status shims over the core
// library. No exception may cross the C boundary.
#include "thinkrouter.h"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core/engine.hpp"
#include "core/error.hpp"
#include "core/model.hpp"
#include "core/remote.hpp"
#include "core/trace.hpp"
#include "harness/harness.hpp"

struct tr_model {
    std::shared_ptr<const tr::Model> impl;
};

struct tr_session {
    tr::Session impl;
};

namespace {

thread_local std::string g_last_error;

tr_status status_of(tr::ErrorKind kind) {
    switch (kind) {
        case tr::ErrorKind::InvalidArgument: return TR_ERR_INVALID_ARGUMENT;
        case tr::ErrorKind::Parse: return TR_ERR_PARSE;
        case tr::ErrorKind::Validation: return TR_ERR_VALIDATION;
        case tr::ErrorKind::Io: return TR_ERR_IO;
        case tr::ErrorKind::Provider: return TR_ERR_PROVIDER;
        case tr::ErrorKind::Internal: return TR_ERR_INTERNAL;
    }
    return TR_ERR_INTERNAL;
}

template <typename F>
tr_status guard(F&& body) {
    try {
        body();
        g_last_error.clear();
        return TR_OK;
    } catch (const tr::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TR_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return TR_ERR_INTERNAL;
    }
}

tr_status fail_status(tr_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_report(char** report_out, const std::string& text) {
    if (report_out != nullptr) *report_out = dup_string(text);
}

std::string resolve_out_dir(const char* flag, const std::string& config_out) {
    if (flag != nullptr && *flag != '\0') return flag;
    if (!config_out.empty()) return config_out;
    if (const char* env = std::getenv("THINKROUTER_OUT"); env != nullptr && *env != '\0')
        return env;
    return "out";
}

std::vector<double> parse_tau_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            size_t used = 0;
            const double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
                ++used;
            if (used != item.size()) throw std::invalid_argument(item);
            grid.push_back(v);
        } catch (const std::exception&) {
            tr::fail(tr::ErrorKind::Parse, "bad tau grid entry \"" + item + "\"");
        }
    }
    if (grid.empty()) tr::fail(tr::ErrorKind::Parse, "empty tau grid");
    return grid;
}

} // namespace

// ============================================================
// Status plumbing
// ============================================================

extern "C" const char* tr_status_name(tr_status status) {
    switch (status) {
        case TR_OK: return "ok";
        case TR_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case TR_ERR_PARSE: return "parse";
        case TR_ERR_VALIDATION: return "validation";
        case TR_ERR_IO: return "io";
        case TR_ERR_PROVIDER: return "provider";
        case TR_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

extern "C" int tr_status_exit_code(tr_status status) {
    switch (status) {
        case TR_OK: return 0;
        case TR_ERR_INVALID_ARGUMENT:
        case TR_ERR_PARSE:
        case TR_ERR_VALIDATION: return 1;
        default: return 2;
    }
}

extern "C" const char* tr_last_error(void) { return g_last_error.c_str(); }

extern "C" void tr_string_free(char* s) { std::free(s); }

// ============================================================
// Models and sessions
// ============================================================

extern "C" tr_status tr_model_open_json(const char* spec_json, tr_model** out_model) {
    if (spec_json == nullptr || out_model == nullptr)
        return fail_status(TR_ERR_INVALID_ARGUMENT, "null argument");
    *out_model = nullptr;
    return guard([&] {
        auto model = std::make_shared<const tr::Model>(tr::model_spec_from_json(spec_json));
        *out_model = new tr_model{std::move(model)};
    });
}

extern "C" tr_status tr_model_open_file(const char* path, tr_model** out_model) {
    if (path == nullptr || out_model == nullptr)
        return fail_status(TR_ERR_INVALID_ARGUMENT, "null argument");
    *out_model = nullptr;
    return guard([&] {
        auto model = std::make_shared<const tr::Model>(
            tr::model_spec_from_json(tr::harness::read_text_file(path)));
        *out_model = new tr_model{std::move(model)};
    });
}

extern "C" void tr_model_close(tr_model* model) { delete model; }

extern "C" int32_t tr_model_vocab_size(const tr_model* model) {
    return model != nullptr ? model->impl->vocab_size() : 0;
}

extern "C" int32_t tr_model_dim(const tr_model* model) {
    return model != nullptr ? model->impl->dim() : 0;
}

extern "C" int32_t tr_model_eot_token(const tr_model* model) {
    return model != nullptr ? model->impl->eot_token_id() : -1;
}

extern "C" tr_status tr_model_serve_stdio(tr_model* model) {
    if (model == nullptr) return fail_status(TR_ERR_INVALID_ARGUMENT, "null model");
    return guard([&] { tr::remote::serve(std::cin, std::cout, model->impl); });
}

extern "C" tr_status tr_session_open(tr_model* model, const int32_t* prompt, size_t prompt_len,
                                     tr_session** out_session) {
    if (model == nullptr || out_session == nullptr || (prompt == nullptr && prompt_len > 0))
        return fail_status(TR_ERR_INVALID_ARGUMENT, "null argument");
    *out_session = nullptr;
    return guard([&] {
        const std::vector<tr::TokenId> tokens(prompt, prompt + prompt_len);
        *out_session = new tr_session{tr::open_session(model->impl, tokens)};
    });
}

extern "C" void tr_session_close(tr_session* session) { delete session; }

namespace {

tr_status next_logits_into(tr_session* session, const std::optional<tr::InputElement>& element,
                           double* logits_out) {
    if (session == nullptr || logits_out == nullptr)
        return fail_status(TR_ERR_INVALID_ARGUMENT, "null argument");
    return guard([&] {
        const tr::LogitVector logits = session->impl.next_logits(element);
        std::memcpy(logits_out, logits.data(), logits.size() * sizeof(double));
    });
}

} // namespace

extern "C" tr_status tr_session_prompt_logits(tr_session* session, double* logits_out) {
    return next_logits_into(session, std::nullopt, logits_out);
}

extern "C" tr_status tr_session_next_token(tr_session* session, int32_t token,
                                           double* logits_out) {
    return next_logits_into(session, tr::InputElement::discrete(token), logits_out);
}

extern "C" tr_status tr_session_next_soft(tr_session* session, const double* vec, size_t dim,
                                          double* logits_out) {
    if (session == nullptr || vec == nullptr)
        return fail_status(TR_ERR_INVALID_ARGUMENT, "null argument");
    if (dim != static_cast<size_t>(session->impl.table().dim))
        return fail_status(TR_ERR_INVALID_ARGUMENT, "soft vector length != model dim");
    return next_logits_into(session, tr::InputElement::soft(std::vector<double>(vec, vec + dim)),
                            logits_out);
}

// ============================================================
// Commands
// ============================================================

extern "C" tr_status tr_cmd_run(const char* config_path, const char* sample_id, const char* mode,
                                const double* tau, const int64_t* seed, const char* out_dir,
                                char** report_out) {
    if (config_path == nullptr) return fail_status(TR_ERR_INVALID_ARGUMENT, "null config path");
    return guard([&] {
        tr::harness::ExperimentConfig cfg = tr::harness::load_experiment_file(config_path);
        if (tau != nullptr) cfg.routing.tau = *tau;
        tr::validate_config(cfg.routing);
        const tr::Mode run_mode = mode != nullptr ? tr::mode_from_name(mode) : cfg.routing.mode;
        const std::uint64_t run_seed =
            seed != nullptr ? static_cast<std::uint64_t>(*seed) : cfg.seeds.front();

        const tr::harness::Experiment experiment = tr::harness::prepare(cfg);
        const std::string id = sample_id != nullptr ? sample_id : experiment.tasks.front().id;
        const tr::RunTrace trace = tr::harness::run_single(experiment, id, run_mode, run_seed);

        const std::string dir = resolve_out_dir(out_dir, cfg.out_dir);
        const std::string path = dir + "/run.ndjson";
        std::filesystem::create_directories(dir);
        tr::write_corpus(path, {trace});

        std::ostringstream report;
        report << "wrote " << path << "\n";
        report << "sample=" << trace.sample_id << " mode=" << tr::mode_name(trace.config.mode)
               << " seed=" << trace.config.seed << " tau=" << tr::metrics::fmt_double(trace.config.tau)
               << "\n";
        report << "stop=" << tr::stop_mode_name(trace.stop_mode)
               << " thinking=" << trace.thinking_length << " answer=" << trace.answer_length
               << " correct=" << (trace.correct.value_or(false) ? "true" : "false") << "\n";
        set_report(report_out, report.str());
    });
}

extern "C" tr_status tr_cmd_sweep(const char* config_path, const char* mode, const double* tau,
                                  const int64_t* seed, const char* tau_grid,
                                  const int* validation_size, int workers, const char* out_dir,
                                  char** report_out) {
    if (config_path == nullptr) return fail_status(TR_ERR_INVALID_ARGUMENT, "null config path");
    return guard([&] {
        tr::harness::ExperimentConfig cfg = tr::harness::load_experiment_file(config_path);
        if (mode != nullptr) cfg.modes = {tr::mode_from_name(mode)};
        if (seed != nullptr) cfg.seeds = {static_cast<std::uint64_t>(*seed)};
        if (tau != nullptr) cfg.routing.tau = *tau;
        tr::validate_config(cfg.routing);
        if (tau_grid != nullptr || validation_size != nullptr) {
            tr::tuning::GridSearchPlan plan =
                cfg.grid.has_value() ? *cfg.grid : tr::tuning::GridSearchPlan{};
            if (tau_grid != nullptr) plan.tau_grid = parse_tau_grid(tau_grid);
            if (validation_size != nullptr) plan.validation_size = *validation_size;
            tr::tuning::validate_plan(plan);
            cfg.grid = plan;
        }
        if (workers > 0) cfg.workers = workers;

        const tr::harness::Experiment experiment = tr::harness::prepare(cfg);
        const tr::harness::SweepResult result = tr::harness::run_sweep(experiment);
        const std::string dir = resolve_out_dir(out_dir, cfg.out_dir);
        const tr::harness::SweepFiles files = tr::harness::write_sweep_outputs(result, dir);

        std::ostringstream report;
        report << "runs=" << result.corpus.size() << " failures=" << result.failures.size()
               << "\n";
        for (const tr::harness::JobFailure& f : result.failures)
            report << "failed: sample=" << f.sample_id << " mode=" << tr::mode_name(f.mode)
                   << " seed=" << f.seed << ": " << f.error << "\n";
        report << "wrote " << files.corpus_path << "\n";
        report << "wrote " << files.metrics_path << "\n";
        if (files.grid_path.has_value()) report << "wrote " << *files.grid_path << "\n";
        report << "wrote " << files.meta_path << "\n";
        set_report(report_out, report.str());
    });
}

extern "C" tr_status tr_cmd_analyze(const char* corpus_path, const char* analysis,
                                    const double* tau, const int* k, const long* bin_width,
                                    const double* lo, const double* hi, const double* step,
                                    const char* baseline_corpus, const char* out_dir,
                                    char** report_out) {
    if (corpus_path == nullptr || analysis == nullptr)
        return fail_status(TR_ERR_INVALID_ARGUMENT, "null corpus path or analysis name");
    return guard([&] {
        tr::harness::AnalyzeParams params;
        if (tau != nullptr) params.tau = *tau;
        if (k != nullptr) params.k = *k;
        if (bin_width != nullptr) params.bin_width = *bin_width;
        if (lo != nullptr) params.lo = *lo;
        if (hi != nullptr) params.hi = *hi;
        if (step != nullptr) params.step = *step;
        if (baseline_corpus != nullptr) params.baseline_path = baseline_corpus;

        const std::string dir = resolve_out_dir(out_dir, "");
        std::vector<std::string> diagnostics;
        const std::vector<std::string> written =
            tr::harness::analyze_corpus(corpus_path, analysis, params, dir, diagnostics);

        std::ostringstream report;
        for (const std::string& d : diagnostics) report << "skipped " << d << "\n";
        for (const std::string& f : written) report << "wrote " << f << "\n";
        set_report(report_out, report.str());
    });
}

extern "C" tr_status tr_cmd_replay(const char* trace_path, char** report_out) {
    if (trace_path == nullptr) return fail_status(TR_ERR_INVALID_ARGUMENT, "null trace path");
    size_t failed = 0;
    size_t total = 0;
    const tr_status status = guard([&] {
        const std::vector<tr::harness::ReplayOutcome> outcomes =
            tr::harness::replay_file(trace_path);
        total = outcomes.size();
        std::ostringstream report;
        for (const tr::harness::ReplayOutcome& o : outcomes) {
            report << o.sample_id << " " << tr::mode_name(o.mode) << " seed=" << o.seed << ": ";
            if (o.report.pass) {
                report << "pass\n";
            } else {
                ++failed;
                report << "FAIL";
                if (o.report.first_divergence_step >= 0)
                    report << " at step " << o.report.first_divergence_step;
                report << " (" << o.report.detail << ")\n";
            }
        }
        report << "replayed=" << total << " failed=" << failed << "\n";
        set_report(report_out, report.str());
    });
    if (status != TR_OK) return status;
    if (failed > 0)
        return fail_status(TR_ERR_VALIDATION, std::to_string(failed) + " of " +
                                                  std::to_string(total) + " traces diverged");
    return TR_OK;
}
