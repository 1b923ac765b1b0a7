// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// The decoding loops. One thinking step works on the distribution
// p_t = temperature_scale(logits_t) and routes between two kinds of context
// element:
//
//   discrete: sample r_t from the filtered distribution and append the token;
//   latent:   append the probability-weighted mix of the top-j embedding rows
//             and remember r_t = argmax as the step's nominal token.
//
// Modes differ only in how the branch is chosen: cot_sampling/cot_greedy are
// always discrete, soft_thinking is always latent, random_routing flips a
// dedicated coin, and think_router compares max(p_t) against tau (>= tau
// goes latent: high confidence means the model can afford to keep several
// candidates in superposition).
//
// Thinking ends on an end-of-thinking token, on Cold Stop (window consecutive
// steps with entropy below delta), or on the output budget. The answer is
// then decoded token-by-token from the same session under the same budget.
#ifndef TR_CORE_ENGINE_HPP
#define TR_CORE_ENGINE_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/trace.hpp"

namespace tr::engine {

// Confidence routing: latent iff p_max >= tau (boundary goes latent).
Space route(double p_max, double tau);

// Low-entropy streak bookkeeping. The counter grows while entropy < delta,
// resets otherwise, and triggers when the streak reaches `window`.
struct ColdStopUpdate {
    int counter = 0;
    bool triggered = false;
};
ColdStopUpdate cold_stop_update(int counter, double entropy_value, double delta, int window);

// Mutable per-run state threaded through the thinking steps. `pending` is
// the element produced by the previous step that has not been fed to the
// provider yet; feeding is deferred so a stopped run can splice in the
// end-of-thinking token before asking for answer logits.
struct ThinkingState {
    explicit ThinkingState(const RoutingConfig& config);

    Rng rng;         // sampling stream
    Rng routing_rng; // random_routing coin stream, independent of sampling
    int cold_counter = 0;
    long steps_done = 0;
    std::optional<InputElement> pending;
};

// One iteration of the thinking loop: feeds state.pending, computes p_t,
// routes, produces the next pending element, and returns the step record.
StepTrace thinking_step(ThinkingState& state, Session& session, const RoutingConfig& config);

// Thinking loop outcome. When the terminator was fed (answer budget left),
// `answer_start_logits` holds the logits for the first answer position and
// the sampling stream continues in `rng`.
struct ThinkingResult {
    std::vector<StepTrace> steps;
    StopMode stop_mode = StopMode::MaxLength;
    long thinking_length = 0; // context elements appended, terminator included
    bool answer_started = false;
    LogitVector answer_start_logits;
    Rng rng{0};
};
ThinkingResult run_thinking(Session& session, const RoutingConfig& config);

// Autoregressive answer decoding from `first_logits` until the end token or
// `budget` emitted tokens (the end token itself is neither kept nor fed).
struct AnswerResult {
    std::vector<TokenId> tokens;
    bool truncated = false;
};
AnswerResult decode_answer(Session& session, const SamplingProfile& profile, long budget,
                           Rng& rng, LogitVector first_logits);

// Full pipeline: open a session on the prompt, think, decode, assemble the
// run record. The shared-model overload avoids rebuilding derived weights
// when many runs use one model.
RunTrace run(const ModelSpec& spec, const std::vector<TokenId>& prompt,
             const RoutingConfig& config, const std::string& sample_id = "");
RunTrace run(std::shared_ptr<const Model> model, const std::vector<TokenId>& prompt,
             const RoutingConfig& config, const std::string& sample_id = "");

// Same pipeline on an existing session (resets it to `prompt` first).
// Exposed so replay can reuse one session and read its declared tolerance.
RunTrace run_in_session(Session& session, const ModelSpec& model_spec,
                        const std::vector<TokenId>& prompt, const RoutingConfig& config,
                        const std::string& sample_id);

// Re-executes a recorded run and compares against the record: float fields
// must agree within the provider's declared tolerance (bitwise for the
// in-process providers, which declare 0), discrete fields exactly.
struct ReplayReport {
    bool pass = false;
    long first_divergence_step = -1; // step index, or -1 when not step-local
    std::string detail;              // empty on pass
};
ReplayReport replay_run(const RunTrace& trace);
ReplayReport replay_run(const RunTrace& trace, std::shared_ptr<const Model> model);

} // namespace tr::engine

#endif
