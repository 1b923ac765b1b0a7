// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/trace.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include "json.hpp"

#include "core/error.hpp"

namespace tr {

using ordered_json = nlohmann::ordered_json;

// ============================================================
// Config
// ============================================================

RoutingConfig default_config(Mode mode) {
    RoutingConfig c;
    c.mode = mode;
    // Cold Stop guards the latent-capable modes against overconfident loops;
    // plain CoT decoding conventionally runs without it.
    c.cold_stop.enabled =
        mode == Mode::SoftThinking || mode == Mode::RandomRouting || mode == Mode::ThinkRouter;
    return c;
}

void validate_config(const RoutingConfig& config) {
    if (!std::isfinite(config.tau) || config.tau < 0.0)
        fail(ErrorKind::InvalidArgument, "tau must be finite and >= 0");
    if (config.top_j < 1)
        fail(ErrorKind::InvalidArgument, "top_j must be >= 1");
    if (!(config.cold_stop.delta >= 0.0) || !std::isfinite(config.cold_stop.delta))
        fail(ErrorKind::InvalidArgument, "cold_stop.delta must be finite and >= 0");
    if (config.cold_stop.window < 1)
        fail(ErrorKind::InvalidArgument, "cold_stop.window must be >= 1");
    if (config.max_output_length < 1)
        fail(ErrorKind::InvalidArgument, "max_output_length must be >= 1");
    prob::validate_profile(config.profile);
}

namespace {

struct ModeName {
    Mode mode;
    const char* name;
};
constexpr ModeName kModeNames[] = {
    {Mode::CotSampling, "cot_sampling"},   {Mode::CotGreedy, "cot_greedy"},
    {Mode::SoftThinking, "soft_thinking"}, {Mode::RandomRouting, "random_routing"},
    {Mode::ThinkRouter, "think_router"},
};

struct StopName {
    StopMode stop;
    const char* name;
};
constexpr StopName kStopNames[] = {
    {StopMode::EotToken, "eot_token"},
    {StopMode::ColdStop, "cold_stop"},
    {StopMode::MaxLength, "max_length"},
};

} // namespace

const char* mode_name(Mode mode) {
    for (const auto& m : kModeNames)
        if (m.mode == mode) return m.name;
    fail(ErrorKind::Internal, "unnamed mode");
}

Mode mode_from_name(const std::string& name) {
    for (const auto& m : kModeNames)
        if (name == m.name) return m.mode;
    fail(ErrorKind::Parse, "unknown mode \"" + name + "\"");
}

const char* space_name(Space space) {
    return space == Space::Discrete ? "discrete" : "latent";
}

const char* stop_mode_name(StopMode stop) {
    for (const auto& s : kStopNames)
        if (s.stop == stop) return s.name;
    fail(ErrorKind::Internal, "unnamed stop mode");
}

StopMode stop_mode_from_name(const std::string& name) {
    for (const auto& s : kStopNames)
        if (name == s.name) return s.stop;
    fail(ErrorKind::Parse, "unknown stop mode \"" + name + "\"");
}

// ============================================================
// Serialization
// ============================================================

namespace {

ordered_json weights_to_json(const SparseWeights& w) {
    ordered_json arr = ordered_json::array();
    for (const auto& [id, weight] : w.entries) arr.push_back(ordered_json::array({id, weight}));
    return arr;
}

ordered_json step_to_json(const StepTrace& s) {
    ordered_json j;
    j["step_index"] = s.step_index;
    j["p_max"] = s.p_max;
    j["entropy"] = s.entropy;
    j["space"] = space_name(s.space);
    j["emitted_token"] = s.emitted_token;
    if (s.space == Space::Latent) j["top_weights"] = weights_to_json(s.top_weights);
    j["cold_counter"] = s.cold_counter;
    j["flags"] = ordered_json{{"eot_signal", s.eot_signal}, {"cold_stop_signal", s.cold_stop_signal}};
    return j;
}

ordered_json config_to_json(const RoutingConfig& c) {
    ordered_json j;
    j["top_j"] = c.top_j;
    j["cold_stop"] = ordered_json{{"enabled", c.cold_stop.enabled},
                                  {"delta", c.cold_stop.delta},
                                  {"window", c.cold_stop.window}};
    j["max_output_length"] = c.max_output_length;
    j["profile"] = ordered_json{{"temperature", c.profile.temperature},
                                {"top_k", c.profile.top_k},
                                {"top_p", c.profile.top_p},
                                {"min_p", c.profile.min_p}};
    return j;
}

// --- parsing helpers -----------------------------------------

[[noreturn]] void parse_fail(const std::string& field, const std::string& why) {
    fail(ErrorKind::Parse, "trace field \"" + field + "\": " + why);
}

[[noreturn]] void invalid(const std::string& why) { fail(ErrorKind::Validation, why); }

const ordered_json& field(const ordered_json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) parse_fail(key, "missing");
    return *it;
}

template <typename T>
T field_as(const ordered_json& j, const char* key) {
    try {
        return field(j, key).get<T>();
    } catch (const ordered_json::exception& e) {
        parse_fail(key, e.what());
    }
}

SparseWeights weights_from_json(const ordered_json& j) {
    SparseWeights w;
    if (!j.is_array()) parse_fail("top_weights", "expected an array of [id, weight] pairs");
    double sum = 0.0;
    TokenId prev = -1;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2)
            parse_fail("top_weights", "expected [id, weight] pairs");
        const TokenId id = entry[0].get<TokenId>();
        const double weight = entry[1].get<double>();
        if (id <= prev) invalid("top_weights ids must be strictly ascending");
        if (!(weight > 0.0) || weight > 1.0) invalid("top_weights weight outside (0,1]");
        w.entries.emplace_back(id, weight);
        sum += weight;
        prev = id;
    }
    if (!w.entries.empty() && std::abs(sum - 1.0) > 1e-9)
        invalid("top_weights do not sum to 1");
    return w;
}

StepTrace step_from_json(const ordered_json& j) {
    StepTrace s;
    s.step_index = field_as<int>(j, "step_index");
    s.p_max = field_as<double>(j, "p_max");
    s.entropy = field_as<double>(j, "entropy");
    const std::string space = field_as<std::string>(j, "space");
    if (space == "discrete") s.space = Space::Discrete;
    else if (space == "latent") s.space = Space::Latent;
    else parse_fail("space", "unknown value \"" + space + "\"");
    s.emitted_token = field_as<TokenId>(j, "emitted_token");
    s.cold_counter = field_as<int>(j, "cold_counter");
    const ordered_json& flags = field(j, "flags");
    s.eot_signal = field_as<bool>(flags, "eot_signal");
    s.cold_stop_signal = field_as<bool>(flags, "cold_stop_signal");

    if (s.step_index < 0) invalid("step_index must be >= 0");
    if (!(s.p_max >= 0.0) || s.p_max > 1.0) invalid("p_max outside [0,1]");
    if (!(s.entropy >= 0.0)) invalid("entropy must be >= 0");
    if (s.cold_counter < 0) invalid("cold_counter must be >= 0");
    const bool has_weights = j.contains("top_weights");
    if (has_weights != (s.space == Space::Latent))
        invalid("top_weights must be present exactly for latent steps");
    if (has_weights) {
        s.top_weights = weights_from_json(j.at("top_weights"));
        if (s.top_weights.entries.empty()) invalid("latent step carries no weights");
    }
    return s;
}

RoutingConfig config_from_json(const ordered_json& run, const ordered_json& j) {
    RoutingConfig c;
    c.mode = mode_from_name(field_as<std::string>(run, "mode"));
    c.tau = field_as<double>(run, "tau");
    c.seed = field_as<std::uint64_t>(run, "seed");
    c.top_j = field_as<int>(j, "top_j");
    const ordered_json& cold = field(j, "cold_stop");
    c.cold_stop.enabled = field_as<bool>(cold, "enabled");
    c.cold_stop.delta = field_as<double>(cold, "delta");
    c.cold_stop.window = field_as<int>(cold, "window");
    c.max_output_length = field_as<long>(j, "max_output_length");
    const ordered_json& profile = field(j, "profile");
    c.profile.temperature = field_as<double>(profile, "temperature");
    c.profile.top_k = field_as<int>(profile, "top_k");
    c.profile.top_p = field_as<double>(profile, "top_p");
    c.profile.min_p = field_as<double>(profile, "min_p");
    try {
        validate_config(c);
    } catch (const Error& e) {
        invalid(std::string("config: ") + e.what());
    }
    return c;
}

} // namespace

std::string serialize_run(const RunTrace& t) {
    ordered_json j;
    j["sample_id"] = t.sample_id;
    j["seed"] = t.config.seed;
    j["mode"] = mode_name(t.config.mode);
    j["tau"] = t.config.tau;
    j["model"] = ordered_json::parse(model_spec_to_json(t.model));
    j["prompt"] = t.prompt;
    j["config"] = config_to_json(t.config);
    ordered_json steps = ordered_json::array();
    for (const StepTrace& s : t.steps) steps.push_back(step_to_json(s));
    j["steps"] = std::move(steps);
    j["stop_mode"] = stop_mode_name(t.stop_mode);
    j["answer_tokens"] = t.answer_tokens;
    j["thinking_length"] = t.thinking_length;
    j["answer_length"] = t.answer_length;
    j["generation_length"] = t.generation_length;
    j["answer_truncated"] = t.answer_truncated;
    if (t.correct.has_value()) j["correct"] = *t.correct;
    return j.dump();
}

RunTrace deserialize_run(const std::string& bytes) {
    ordered_json j;
    try {
        j = ordered_json::parse(bytes);
    } catch (const ordered_json::exception& e) {
        fail(ErrorKind::Parse, std::string("trace is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorKind::Parse, "trace document must be a JSON object");

    RunTrace t;
    t.sample_id = field_as<std::string>(j, "sample_id");
    t.config = config_from_json(j, field(j, "config"));
    t.model = model_spec_from_json(field(j, "model").dump());
    t.prompt = field_as<std::vector<TokenId>>(j, "prompt");
    for (const auto& s : field(j, "steps")) t.steps.push_back(step_from_json(s));
    t.stop_mode = stop_mode_from_name(field_as<std::string>(j, "stop_mode"));
    t.answer_tokens = field_as<std::vector<TokenId>>(j, "answer_tokens");
    t.thinking_length = field_as<long>(j, "thinking_length");
    t.answer_length = field_as<long>(j, "answer_length");
    t.generation_length = field_as<long>(j, "generation_length");
    t.answer_truncated = j.value("answer_truncated", false);
    if (j.contains("correct") && !j.at("correct").is_null())
        t.correct = j.at("correct").get<bool>();

    if (t.thinking_length < 0 || t.answer_length < 0) invalid("lengths must be >= 0");
    if (t.generation_length != t.thinking_length + t.answer_length)
        invalid("generation_length " + std::to_string(t.generation_length) +
                " != thinking_length " + std::to_string(t.thinking_length) +
                " + answer_length " + std::to_string(t.answer_length));
    if (t.answer_length != static_cast<long>(t.answer_tokens.size()))
        invalid("answer_length does not match answer_tokens");
    return t;
}

// ============================================================
// Corpus files
// ============================================================

void write_corpus(const std::string& path, const std::vector<RunTrace>& traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot open corpus for writing: " + path);
    for (const RunTrace& t : traces) out << serialize_run(t) << '\n';
    if (!out) fail(ErrorKind::Io, "failed writing corpus: " + path);
}

std::vector<RunTrace> read_corpus(const std::string& path) {
    std::vector<std::string> diagnostics;
    std::vector<RunTrace> traces = read_corpus_lenient(path, diagnostics);
    if (!diagnostics.empty()) fail(ErrorKind::Parse, path + ": " + diagnostics.front());
    return traces;
}

std::vector<RunTrace> read_corpus_lenient(const std::string& path,
                                          std::vector<std::string>& diagnostics) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open corpus: " + path);
    std::vector<RunTrace> traces;
    std::string line;
    for (long line_no = 1; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        try {
            traces.push_back(deserialize_run(line));
        } catch (const Error& e) {
            diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return traces;
}

} // namespace tr
