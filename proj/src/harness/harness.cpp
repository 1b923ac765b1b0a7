// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "json.hpp"

#include "core/analysis.hpp"
#include "core/error.hpp"

namespace tr::harness {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ============================================================
// Config parsing
// ============================================================

namespace {

[[noreturn]] void config_fail(const std::string& what) { fail(ErrorKind::Parse, "config: " + what); }

void check_keys(const ordered_json& obj, const char* what,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* name : allowed) ok = ok || key == name;
        if (!ok) config_fail(std::string(what) + " has unknown key \"" + key + "\"");
    }
}

template <typename T>
T jget(const ordered_json& obj, const char* key) {
    try {
        return obj.at(key).get<T>();
    } catch (const ordered_json::exception& e) {
        config_fail(std::string("key \"") + key + "\": " + e.what());
    }
}

template <typename T>
void jmerge(const ordered_json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = jget<T>(obj, key);
}

std::vector<Mode> canonical_modes(std::vector<Mode> modes) {
    std::sort(modes.begin(), modes.end(),
              [](Mode a, Mode b) { return static_cast<int>(a) < static_cast<int>(b); });
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    return modes;
}

} // namespace

ExperimentConfig parse_experiment(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const ordered_json::exception& e) {
        config_fail(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) config_fail("top level must be a JSON object");
    check_keys(j, "config", {"model", "tasks", "modes", "seeds", "routing", "grid", "out", "workers"});
    if (!j.contains("model")) config_fail("\"model\" is required");

    ExperimentConfig cfg;
    cfg.model = model_spec_from_json(j.at("model").dump());

    cfg.modes = {Mode::CotSampling, Mode::CotGreedy, Mode::SoftThinking, Mode::RandomRouting,
                 Mode::ThinkRouter};
    if (j.contains("modes")) {
        std::vector<Mode> modes;
        for (const std::string& name : jget<std::vector<std::string>>(j, "modes"))
            modes.push_back(mode_from_name(name));
        if (modes.empty()) config_fail("\"modes\" must name at least one mode");
        cfg.modes = canonical_modes(std::move(modes));
    }

    cfg.seeds = {0, 7, 42};
    if (j.contains("seeds")) {
        cfg.seeds = jget<std::vector<std::uint64_t>>(j, "seeds");
        if (cfg.seeds.empty()) config_fail("\"seeds\" must name at least one seed");
        std::sort(cfg.seeds.begin(), cfg.seeds.end());
        cfg.seeds.erase(std::unique(cfg.seeds.begin(), cfg.seeds.end()), cfg.seeds.end());
    }

    cfg.routing = default_config(Mode::ThinkRouter);
    if (j.contains("routing")) {
        const ordered_json& r = j.at("routing");
        check_keys(r, "routing", {"tau", "top_j", "max_output_length", "cold_stop", "profile"});
        jmerge(r, "tau", cfg.routing.tau);
        jmerge(r, "top_j", cfg.routing.top_j);
        jmerge(r, "max_output_length", cfg.routing.max_output_length);
        if (r.contains("cold_stop")) {
            const ordered_json& c = r.at("cold_stop");
            check_keys(c, "cold_stop", {"enabled", "delta", "window"});
            jmerge(c, "delta", cfg.routing.cold_stop.delta);
            jmerge(c, "window", cfg.routing.cold_stop.window);
            if (c.contains("enabled"))
                cfg.cold_stop_enabled_override = jget<bool>(c, "enabled");
        }
        if (r.contains("profile")) {
            const ordered_json& p = r.at("profile");
            check_keys(p, "profile", {"temperature", "top_k", "top_p", "min_p"});
            jmerge(p, "temperature", cfg.routing.profile.temperature);
            jmerge(p, "top_k", cfg.routing.profile.top_k);
            jmerge(p, "top_p", cfg.routing.profile.top_p);
            jmerge(p, "min_p", cfg.routing.profile.min_p);
        }
    }
    validate_config(cfg.routing);

    if (j.contains("tasks")) {
        const ordered_json& t = j.at("tasks");
        if (t.is_array() || t.contains("list")) {
            const ordered_json* items = &t;
            if (!t.is_array()) { // the {"list": [...]} spelling
                check_keys(t, "tasks", {"list"});
                items = &t.at("list");
                if (!items->is_array()) config_fail("\"tasks.list\" must be an array");
            }
            cfg.tasks_explicit = true;
            std::set<std::string> seen;
            for (const ordered_json& item : *items) {
                check_keys(item, "task", {"id", "prompt", "gold"});
                SyntheticTask task;
                task.id = jget<std::string>(item, "id");
                task.prompt = jget<std::vector<TokenId>>(item, "prompt");
                task.gold = jget<std::vector<TokenId>>(item, "gold");
                if (task.gold.empty()) config_fail("task \"" + task.id + "\" has an empty gold answer");
                if (!seen.insert(task.id).second)
                    config_fail("duplicate task id \"" + task.id + "\"");
                cfg.task_list.push_back(std::move(task));
            }
            if (cfg.task_list.empty()) config_fail("the task list is empty");
        } else {
            check_keys(t, "tasks", {"count", "seed", "prompt_min", "prompt_max"});
            jmerge(t, "count", cfg.family.count);
            jmerge(t, "seed", cfg.family.seed);
            jmerge(t, "prompt_min", cfg.family.prompt_min);
            jmerge(t, "prompt_max", cfg.family.prompt_max);
            validate_family(cfg.family);
        }
    }

    if (j.contains("grid")) {
        const ordered_json& g = j.at("grid");
        check_keys(g, "grid", {"tau_grid", "validation_size", "seeds", "split_seed"});
        tuning::GridSearchPlan plan;
        jmerge(g, "tau_grid", plan.tau_grid);
        jmerge(g, "validation_size", plan.validation_size);
        jmerge(g, "seeds", plan.seeds);
        jmerge(g, "split_seed", plan.split_seed);
        tuning::validate_plan(plan);
        cfg.grid = plan;
    }

    jmerge(j, "out", cfg.out_dir);
    jmerge(j, "workers", cfg.workers);
    if (cfg.workers < 1) config_fail("\"workers\" must be >= 1");
    return cfg;
}

ExperimentConfig load_experiment_file(const std::string& path) {
    return parse_experiment(read_text_file(path));
}

Experiment prepare(const ExperimentConfig& config) {
    Experiment experiment;
    experiment.config = config;
    experiment.model = std::make_shared<const Model>(config.model);
    experiment.tasks = config.tasks_explicit
                           ? config.task_list
                           : generate_tasks(experiment.model, config.family, config.routing);
    if (experiment.tasks.empty()) fail(ErrorKind::InvalidArgument, "experiment has no tasks");
    return experiment;
}

RoutingConfig job_config(const ExperimentConfig& config, Mode mode, std::uint64_t seed) {
    RoutingConfig c = config.routing;
    c.mode = mode;
    c.seed = seed;
    c.cold_stop.enabled =
        config.cold_stop_enabled_override.value_or(default_config(mode).cold_stop.enabled);
    return c;
}

// ============================================================
// Runs
// ============================================================

namespace {

const SyntheticTask& find_task(const Experiment& experiment, const std::string& sample_id) {
    for (const SyntheticTask& t : experiment.tasks)
        if (t.id == sample_id) return t;
    fail(ErrorKind::InvalidArgument, "unknown sample id \"" + sample_id + "\"");
}

RunTrace run_task(const Experiment& experiment, const SyntheticTask& task, Mode mode,
                  std::uint64_t seed) {
    RunTrace t =
        engine::run(experiment.model, task.prompt, job_config(experiment.config, mode, seed), task.id);
    t.correct = judge(task, t.answer_tokens);
    return t;
}

} // namespace

RunTrace run_single(const Experiment& experiment, const std::string& sample_id, Mode mode,
                    std::uint64_t seed) {
    return run_task(experiment, find_task(experiment, sample_id), mode, seed);
}

SweepResult run_sweep(const Experiment& experiment) {
    const ExperimentConfig& cfg = experiment.config;
    struct Job {
        Mode mode;
        size_t task;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (Mode mode : cfg.modes)
        for (size_t t = 0; t < experiment.tasks.size(); ++t)
            for (std::uint64_t seed : cfg.seeds) jobs.push_back({mode, t, seed});

    std::vector<std::optional<RunTrace>> slots(jobs.size());
    std::vector<std::optional<JobFailure>> fails(jobs.size());
    std::atomic<size_t> cursor{0};
    const auto work = [&] {
        for (size_t i = cursor.fetch_add(1); i < jobs.size(); i = cursor.fetch_add(1)) {
            const Job& job = jobs[i];
            const SyntheticTask& task = experiment.tasks[job.task];
            try {
                slots[i] = run_task(experiment, task, job.mode, job.seed);
            } catch (const std::exception& e) {
                fails[i] = JobFailure{task.id, job.mode, job.seed, e.what()};
            }
        }
    };
    const size_t worker_count =
        std::min<size_t>(static_cast<size_t>(cfg.workers), std::max<size_t>(jobs.size(), 1));
    if (worker_count <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(worker_count);
        for (size_t w = 0; w < worker_count; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    SweepResult result;
    for (size_t i = 0; i < jobs.size(); ++i) {
        if (slots[i].has_value()) result.corpus.push_back(std::move(*slots[i]));
        if (fails[i].has_value()) result.failures.push_back(std::move(*fails[i]));
    }
    if (!result.corpus.empty()) result.rows = metrics_rows_from_traces(result.corpus);

    if (cfg.grid.has_value()) {
        std::vector<std::string> ids;
        ids.reserve(experiment.tasks.size());
        for (const SyntheticTask& t : experiment.tasks) ids.push_back(t.id);
        const tuning::Evaluator evaluate = [&](double tau, const std::vector<std::string>& subset,
                                               const std::vector<std::uint64_t>& seeds) {
            std::vector<RunTrace> runs;
            for (const std::string& id : subset) {
                const SyntheticTask& task = find_task(experiment, id);
                for (std::uint64_t seed : seeds) {
                    RoutingConfig c = job_config(cfg, Mode::ThinkRouter, seed);
                    c.tau = tau;
                    RunTrace t = engine::run(experiment.model, task.prompt, c, task.id);
                    t.correct = judge(task, t.answer_tokens);
                    runs.push_back(std::move(t));
                }
            }
            const auto outcomes = metrics::group_outcomes(runs);
            return tuning::EvalPoint{metrics::mean_pass1(outcomes),
                                     metrics::mean_generation_length(outcomes)};
        };
        result.grid_report = tuning::grid_search(ids, *cfg.grid, evaluate);
    }
    return result;
}

// ============================================================
// Output files
// ============================================================

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

SweepFiles write_sweep_outputs(const SweepResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);
    SweepFiles files;
    files.corpus_path = out_dir + "/corpus.ndjson";
    write_corpus(files.corpus_path, result.corpus);
    files.metrics_path = out_dir + "/metrics.csv";
    write_text_file(files.metrics_path, metrics::metrics_csv(result.rows));
    if (result.grid_report.has_value()) {
        files.grid_path = out_dir + "/tau_table.csv";
        write_text_file(*files.grid_path, tuning::grid_report_csv(*result.grid_report));
    }

    ordered_json meta;
    meta["generated_at"] = utc_now(); // the only non-deterministic output
    meta["runs"] = result.corpus.size();
    ordered_json failures = ordered_json::array();
    for (const JobFailure& f : result.failures) {
        ordered_json item;
        item["sample_id"] = f.sample_id;
        item["mode"] = mode_name(f.mode);
        item["seed"] = f.seed;
        item["error"] = f.error;
        failures.push_back(std::move(item));
    }
    meta["failures"] = std::move(failures);
    ordered_json produced = ordered_json::array({files.corpus_path, files.metrics_path});
    if (files.grid_path.has_value()) produced.push_back(*files.grid_path);
    meta["files"] = std::move(produced);
    files.meta_path = out_dir + "/meta.json";
    write_text_file(files.meta_path, meta.dump(2) + "\n");
    return files;
}

// ============================================================
// Analyses
// ============================================================

std::vector<metrics::MetricsRow> metrics_rows_from_traces(const std::vector<RunTrace>& traces) {
    std::map<std::pair<int, double>, std::vector<RunTrace>> groups;
    for (const RunTrace& t : traces)
        groups[{static_cast<int>(t.config.mode), t.config.tau}].push_back(t);
    std::vector<metrics::MetricsRow> rows;
    for (const auto& [key, subset] : groups) {
        const auto outcomes = metrics::group_outcomes(subset);
        metrics::MetricsRow row;
        row.mode = mode_name(static_cast<Mode>(key.first));
        row.tau = key.second;
        row.pass1 = metrics::mean_pass1(outcomes);
        row.mean_length = metrics::mean_generation_length(outcomes);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::vector<RunTrace> read_with_diagnostics(const std::string& path,
                                            std::vector<std::string>& diagnostics) {
    std::vector<std::string> local;
    std::vector<RunTrace> traces = read_corpus_lenient(path, local);
    for (const std::string& d : local) diagnostics.push_back(path + ": " + d);
    return traces;
}

} // namespace

std::vector<std::string> analyze_corpus(const std::string& corpus_path,
                                        const std::string& analysis, const AnalyzeParams& params,
                                        const std::string& out_dir,
                                        std::vector<std::string>& diagnostics) {
    const std::vector<RunTrace> traces = read_with_diagnostics(corpus_path, diagnostics);
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    const auto emit = [&](const char* name, const std::string& content) {
        const std::string path = out_dir + "/" + name;
        write_text_file(path, content);
        written.push_back(path);
    };

    if (analysis == "metrics") {
        emit("metrics.csv", metrics::metrics_csv(metrics_rows_from_traces(traces)));
    } else if (analysis == "low-conf") {
        const auto rows = analysis::low_conf_sweep(analysis::collect_pmax(traces), params.lo,
                                                   params.hi, params.step);
        emit("low_conf_sweep.csv", analysis::low_conf_sweep_csv(rows));
    } else if (analysis == "bins") {
        emit("confidence_bins.csv",
             analysis::binned_csv(analysis::binned_low_conf(traces, params.tau)));
    } else if (analysis == "eot-window") {
        emit("eot_window.csv", analysis::eot_window_csv(analysis::eot_window(traces, params.k)));
    } else if (analysis == "stop-modes") {
        std::vector<std::pair<std::string, std::vector<analysis::StopModeRow>>> per_mode;
        for (int m = 0; m <= static_cast<int>(Mode::ThinkRouter); ++m) {
            std::vector<RunTrace> subset;
            for (const RunTrace& t : traces)
                if (static_cast<int>(t.config.mode) == m) subset.push_back(t);
            if (subset.empty()) continue;
            per_mode.emplace_back(mode_name(static_cast<Mode>(m)),
                                  analysis::stop_mode_table(subset));
        }
        emit("stop_modes.csv", analysis::stop_modes_csv(per_mode));
    } else if (analysis == "lengths") {
        const auto h = analysis::length_histogram(traces, params.bin_width);
        emit("length_histogram.csv", analysis::length_histogram_csv(h));
        emit("lengths_summary.csv", analysis::lengths_summary_csv(h));
    } else if (analysis == "calibration") {
        if (params.baseline_path.empty())
            fail(ErrorKind::InvalidArgument, "calibration needs --baseline <corpus>");
        const std::vector<RunTrace> baseline =
            read_with_diagnostics(params.baseline_path, diagnostics);
        // Majority voting stacks the seeds of one decoding configuration; a
        // corpus mixing several modes has no single verdict per sample.
        const auto require_single_mode = [](const std::vector<RunTrace>& corpus,
                                            const char* which) {
            for (const RunTrace& t : corpus)
                if (t.config.mode != corpus.front().config.mode)
                    fail(ErrorKind::InvalidArgument,
                         std::string("calibration needs a single-mode ") + which +
                             " corpus, but it mixes \"" +
                             mode_name(corpus.front().config.mode) + "\" and \"" +
                             mode_name(t.config.mode) + "\"");
        };
        require_single_mode(baseline, "baseline");
        require_single_mode(traces, "routed");
        const auto matrix = analysis::calibration(analysis::majority_verdicts(baseline),
                                                  analysis::majority_verdicts(traces));
        emit("calibration.csv",
             analysis::calibration_csv(matrix, analysis::calibration_scores(matrix)));
    } else {
        fail(ErrorKind::InvalidArgument,
             "unknown analysis \"" + analysis +
                 "\" (one of: metrics, low-conf, bins, eot-window, stop-modes, lengths, calibration)");
    }
    return written;
}

// ============================================================
// Replay
// ============================================================

std::vector<ReplayOutcome> replay_file(const std::string& path) {
    const std::vector<RunTrace> traces = read_corpus(path);
    if (traces.empty()) fail(ErrorKind::InvalidArgument, path + ": no traces to replay");
    std::vector<std::pair<ModelSpec, std::shared_ptr<const Model>>> cache;
    std::vector<ReplayOutcome> outcomes;
    outcomes.reserve(traces.size());
    for (const RunTrace& t : traces) {
        std::shared_ptr<const Model> model;
        for (const auto& [spec, cached] : cache)
            if (spec == t.model) {
                model = cached;
                break;
            }
        if (!model) {
            model = std::make_shared<const Model>(t.model);
            cache.emplace_back(t.model, model);
        }
        outcomes.push_back(
            {t.sample_id, t.config.mode, t.config.seed, engine::replay_run(t, model)});
    }
    return outcomes;
}

// ============================================================
// File helpers
// ============================================================

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path);
    out << content;
    if (!out) fail(ErrorKind::Io, "failed writing: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace tr::harness
