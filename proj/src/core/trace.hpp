// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_TRACE_HPP
#define THINKROUTER_CORE_TRACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/prob.hpp"

namespace tr {

// ============================================================
// Decode configuration
// ============================================================

enum class Mode {
    CotSampling,   // discrete every step, multinomial over the filtered dist
    CotGreedy,     // discrete every step, pure argmax, filters ignored
    SoftThinking,  // latent every step
    RandomRouting, // fair coin per step from a dedicated routing stream
    ThinkRouter,   // latent iff p_max >= tau
};

enum class Space { Discrete, Latent };

// How a thinking phase ended.
enum class StopMode { EotToken, ColdStop, MaxLength };

struct ColdStopConfig {
    bool enabled = false;
    double delta = 0.01; // entropy floor in nats
    int window = 256;    // consecutive sub-delta steps that force EOT

    friend bool operator==(const ColdStopConfig&, const ColdStopConfig&) = default;
};

struct RoutingConfig {
    Mode mode = Mode::ThinkRouter;
    double tau = 0.6;              // routing threshold; boundary routes latent
    int top_j = 10;                // soft-embedding mixture size
    ColdStopConfig cold_stop;
    long max_output_length = 32768; // shared thinking+answer budget
    SamplingProfile profile;
    std::uint64_t seed = 0;

    friend bool operator==(const RoutingConfig&, const RoutingConfig&) = default;
};

// Config with the conventional per-mode Cold Stop setting: enabled for the
// latent-capable modes, disabled for both CoT baselines. Callers may still
// override cold_stop.enabled explicitly afterwards.
RoutingConfig default_config(Mode mode);

// Throws InvalidArgument on out-of-range fields.
void validate_config(const RoutingConfig& config);

const char* mode_name(Mode mode);
Mode mode_from_name(const std::string& name);
const char* space_name(Space space);
const char* stop_mode_name(StopMode stop);
StopMode stop_mode_from_name(const std::string& name);

// ============================================================
// Records
// ============================================================

struct StepTrace {
    int step_index = 0;        // 0-based thinking step
    double p_max = 0.0;        // max of the pre-filter distribution p_t
    double entropy = 0.0;      // H(p_t) in nats, also pre-filter
    Space space = Space::Discrete;
    TokenId emitted_token = 0; // sampled id (discrete) or argmax of filtered dist (latent)
    SparseWeights top_weights; // latent only; empty otherwise
    int cold_counter = 0;      // counter value after this step's update
    bool eot_signal = false;   // emitted_token == eot_token_id
    bool cold_stop_signal = false;

    friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

struct RunTrace {
    std::string sample_id;
    RoutingConfig config; // seed/mode/tau live here
    ModelSpec model;
    std::vector<TokenId> prompt;

    std::vector<StepTrace> steps;
    StopMode stop_mode = StopMode::EotToken;
    std::vector<TokenId> answer_tokens;
    long thinking_length = 0;   // context elements appended while thinking, inserted EOT included
    long answer_length = 0;     // answer tokens (terminator excluded)
    long generation_length = 0; // thinking_length + answer_length
    bool answer_truncated = false; // budget ran out before the answer terminated
    std::optional<bool> correct;   // judge verdict; unset when nothing judged

    friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

// ============================================================
// Serialization
// ============================================================

// Canonical JSON document: fixed key order, shortest round-trip floats, no
// whitespace. Serializing the same record twice yields identical bytes, and
// deserialize(serialize(x)) == x.
std::string serialize_run(const RunTrace& trace);

// Parses and validates. Malformed documents raise Parse errors naming the
// field; well-formed documents violating record invariants raise Validation
// errors. Unknown fields are ignored.
RunTrace deserialize_run(const std::string& bytes);

// Newline-delimited corpus helpers. read_corpus raises on the first bad line;
// read_corpus_lenient collects "line N: why" diagnostics and keeps going.
void write_corpus(const std::string& path, const std::vector<RunTrace>& traces);
std::vector<RunTrace> read_corpus(const std::string& path);
std::vector<RunTrace> read_corpus_lenient(const std::string& path,
                                          std::vector<std::string>& diagnostics);

} // namespace tr

#endif
