// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/engine.hpp"

#include <cmath>
#include <cstdint>
#include <utility>

#include "core/error.hpp"
#include "core/prob.hpp"

namespace tr::engine {

namespace {
// Decorrelates the routing coin from the sampling draws so random_routing
// and cot_sampling stay comparable under one seed. Arbitrary odd constant;
// changing it re-seeds every recorded random_routing trace.
constexpr std::uint64_t kRoutingSeedXor = 0xD1B54A32D192ED03ULL;
} // namespace

Space route(double p_max, double tau) {
    if (!(p_max >= 0.0) || p_max > 1.0)
        fail(ErrorKind::InvalidArgument, "route: p_max outside [0,1]");
    return p_max < tau ? Space::Discrete : Space::Latent;
}

ColdStopUpdate cold_stop_update(int counter, double entropy_value, double delta, int window) {
    if (counter < 0) fail(ErrorKind::InvalidArgument, "cold_stop_update: counter must be >= 0");
    ColdStopUpdate u;
    u.counter = entropy_value < delta ? counter + 1 : 0;
    u.triggered = u.counter == window;
    return u;
}

ThinkingState::ThinkingState(const RoutingConfig& config)
    : rng(config.seed), routing_rng(config.seed ^ kRoutingSeedXor) {}

// ============================================================
// Thinking loop
// ============================================================

StepTrace thinking_step(ThinkingState& state, Session& session, const RoutingConfig& config) {
    const LogitVector logits = session.next_logits(state.pending);
    const ProbVector p = prob::temperature_scale(logits, config.profile.temperature);
    // Confidence and entropy are read off the unfiltered distribution; the
    // filters only shape what may be sampled.
    const auto [argmax_id, p_max] = prob::max_prob(p);
    const double entropy_value = prob::entropy(p);
    const TokenId eot = session.model().eot_token_id();

    StepTrace st;
    st.step_index = static_cast<int>(state.steps_done);
    st.p_max = p_max;
    st.entropy = entropy_value;

    Space space = Space::Discrete;
    switch (config.mode) {
    case Mode::CotSampling:
    case Mode::CotGreedy:
        space = Space::Discrete;
        break;
    case Mode::SoftThinking:
        space = Space::Latent;
        break;
    case Mode::RandomRouting:
        // Fair coin from the dedicated stream: low bit set goes latent.
        space = (state.routing_rng.next_u64() & 1u) != 0 ? Space::Latent : Space::Discrete;
        break;
    case Mode::ThinkRouter:
        space = route(p_max, config.tau);
        break;
    }
    st.space = space;

    TokenId r = -1;
    if (config.mode == Mode::CotGreedy) {
        // Greedy baseline: pure argmax of p_t; filters and rng are not touched.
        r = argmax_id;
        state.pending = InputElement::discrete(r);
    } else if (space == Space::Discrete) {
        const ProbVector filtered = prob::sample_filter(p, config.profile);
        r = prob::multinomial_draw(filtered, state.rng);
        state.pending = InputElement::discrete(r);
    } else {
        const ProbVector filtered = prob::sample_filter(p, config.profile);
        st.top_weights = prob::top_j_renormalize(filtered, config.top_j);
        state.pending = InputElement::soft(soft_embed(st.top_weights, session.table()));
        r = prob::argmax_token(filtered);
    }
    st.emitted_token = r;

    bool cold_triggered = false;
    if (config.cold_stop.enabled) {
        const ColdStopUpdate u = cold_stop_update(state.cold_counter, entropy_value,
                                                  config.cold_stop.delta, config.cold_stop.window);
        state.cold_counter = u.counter;
        cold_triggered = u.triggered;
    }
    st.cold_counter = state.cold_counter;
    st.cold_stop_signal = cold_triggered;
    st.eot_signal = r == eot;

    state.steps_done += 1;
    return st;
}

ThinkingResult run_thinking(Session& session, const RoutingConfig& config) {
    validate_config(config);
    ThinkingState state(config);
    ThinkingResult out;
    const long budget = config.max_output_length;
    const TokenId eot = session.model().eot_token_id();

    bool stopped = false;
    while (state.steps_done < budget) {
        out.steps.push_back(thinking_step(state, session, config));
        const StepTrace& last = out.steps.back();
        // A step may both close the low-entropy window and emit the end
        // token; the window check comes first, so such runs count as
        // ColdStop rather than EotToken.
        if (last.cold_stop_signal) {
            out.stop_mode = StopMode::ColdStop;
            stopped = true;
            break;
        }
        if (last.eot_signal) {
            out.stop_mode = StopMode::EotToken;
            stopped = true;
            break;
        }
    }
    if (!stopped) out.stop_mode = StopMode::MaxLength;

    // The last element always stays in the context; unless it already is the
    // end-of-thinking token, one is appended after it. A run stopped by the
    // budget therefore overshoots it by exactly this forced terminator.
    const bool ends_with_eot =
        state.pending.has_value() && state.pending->is_discrete() && state.pending->token == eot;
    out.thinking_length = state.steps_done + (ends_with_eot ? 0 : 1);

    // Feed the held-back tail only if the answer phase has budget to use the
    // resulting logits; this also spares scripted models the extra rows.
    const long answer_budget = budget - out.thinking_length;
    if (answer_budget > 0) {
        LogitVector logits = session.next_logits(state.pending);
        if (!ends_with_eot) logits = session.next_logits(InputElement::discrete(eot));
        out.answer_start_logits = std::move(logits);
        out.answer_started = true;
    }
    out.rng = state.rng;
    return out;
}

// ============================================================
// Answer decoding
// ============================================================

AnswerResult decode_answer(Session& session, const SamplingProfile& profile, long budget,
                           Rng& rng, LogitVector first_logits) {
    AnswerResult out;
    if (budget <= 0) {
        out.truncated = true;
        return out;
    }
    const TokenId eos = session.model().eot_token_id();
    LogitVector logits = std::move(first_logits);
    while (true) {
        const ProbVector p = prob::temperature_scale(logits, profile.temperature);
        const ProbVector filtered = prob::sample_filter(p, profile);
        const TokenId tok = prob::multinomial_draw(filtered, rng);
        if (tok == eos) break; // terminator is neither kept nor fed
        out.tokens.push_back(tok);
        if (static_cast<long>(out.tokens.size()) >= budget) {
            out.truncated = true;
            break;
        }
        logits = session.next_logits(InputElement::discrete(tok));
    }
    return out;
}

// ============================================================
// Full runs
// ============================================================

RunTrace run_in_session(Session& session, const ModelSpec& model_spec,
                        const std::vector<TokenId>& prompt, const RoutingConfig& config,
                        const std::string& sample_id) {
    validate_config(config);
    session.reset(prompt);

    RunTrace t;
    t.sample_id = sample_id;
    t.config = config;
    t.model = model_spec;
    t.prompt = prompt;

    ThinkingResult think = run_thinking(session, config);
    t.steps = std::move(think.steps);
    t.stop_mode = think.stop_mode;
    t.thinking_length = think.thinking_length;

    if (think.answer_started) {
        SamplingProfile answer_profile = config.profile;
        // The greedy baseline stays greedy end to end; a one-token filter
        // makes the draw the argmax no matter what the stream yields.
        if (config.mode == Mode::CotGreedy) answer_profile.top_k = 1;
        const long answer_budget = config.max_output_length - think.thinking_length;
        AnswerResult ans = decode_answer(session, answer_profile, answer_budget, think.rng,
                                         std::move(think.answer_start_logits));
        t.answer_tokens = std::move(ans.tokens);
        t.answer_truncated = ans.truncated;
    } else {
        t.answer_truncated = true; // thinking consumed the whole budget
    }
    t.answer_length = static_cast<long>(t.answer_tokens.size());
    t.generation_length = t.thinking_length + t.answer_length;
    return t;
}

RunTrace run(std::shared_ptr<const Model> model, const std::vector<TokenId>& prompt,
             const RoutingConfig& config, const std::string& sample_id) {
    const ModelSpec spec = model->spec();
    Session session = open_session(std::move(model), prompt);
    return run_in_session(session, spec, prompt, config, sample_id);
}

RunTrace run(const ModelSpec& spec, const std::vector<TokenId>& prompt,
             const RoutingConfig& config, const std::string& sample_id) {
    return run(std::make_shared<const Model>(spec), prompt, config, sample_id);
}

// ============================================================
// Replay
// ============================================================

namespace {

struct Comparer {
    double tol;
    ReplayReport report;

    bool close(double a, double b) const { return std::fabs(a - b) <= tol; }

    void diverge(long step, std::string detail) {
        if (report.pass || !report.detail.empty()) return; // keep the first finding
        report.first_divergence_step = step;
        report.detail = std::move(detail);
    }
};

std::string num(double v) { return std::to_string(v); }

ReplayReport compare_runs(const RunTrace& recorded, const RunTrace& fresh, double tol) {
    Comparer c{tol, {}};
    const size_t n = std::min(recorded.steps.size(), fresh.steps.size());
    for (size_t i = 0; i < n && c.report.detail.empty(); ++i) {
        const StepTrace& a = recorded.steps[i];
        const StepTrace& b = fresh.steps[i];
        const long idx = static_cast<long>(i);
        if (a.space != b.space) {
            c.diverge(idx, "space differs");
        } else if (a.emitted_token != b.emitted_token) {
            c.diverge(idx, "emitted_token " + std::to_string(a.emitted_token) + " vs " +
                               std::to_string(b.emitted_token));
        } else if (!c.close(a.p_max, b.p_max)) {
            c.diverge(idx, "p_max " + num(a.p_max) + " vs " + num(b.p_max));
        } else if (!c.close(a.entropy, b.entropy)) {
            c.diverge(idx, "entropy " + num(a.entropy) + " vs " + num(b.entropy));
        } else if (a.cold_counter != b.cold_counter || a.eot_signal != b.eot_signal ||
                   a.cold_stop_signal != b.cold_stop_signal) {
            c.diverge(idx, "stop bookkeeping differs");
        } else if (a.top_weights.entries.size() != b.top_weights.entries.size()) {
            c.diverge(idx, "top_weights support differs");
        } else {
            for (size_t k = 0; k < a.top_weights.entries.size(); ++k) {
                const auto& [ida, wa] = a.top_weights.entries[k];
                const auto& [idb, wb] = b.top_weights.entries[k];
                if (ida != idb || !c.close(wa, wb)) {
                    c.diverge(idx, "top_weights entry " + std::to_string(k) + " differs");
                    break;
                }
            }
        }
    }
    if (c.report.detail.empty() && recorded.steps.size() != fresh.steps.size())
        c.diverge(static_cast<long>(n), "step count " + std::to_string(recorded.steps.size()) +
                                            " vs " + std::to_string(fresh.steps.size()));
    if (c.report.detail.empty()) {
        if (recorded.stop_mode != fresh.stop_mode)
            c.diverge(-1, std::string("stop_mode ") + stop_mode_name(recorded.stop_mode) + " vs " +
                              stop_mode_name(fresh.stop_mode));
        else if (recorded.answer_tokens != fresh.answer_tokens)
            c.diverge(-1, "answer_tokens differ");
        else if (recorded.thinking_length != fresh.thinking_length ||
                 recorded.answer_length != fresh.answer_length ||
                 recorded.generation_length != fresh.generation_length)
            c.diverge(-1, "length accounting differs");
        else if (recorded.answer_truncated != fresh.answer_truncated)
            c.diverge(-1, "answer_truncated differs");
    }
    c.report.pass = c.report.detail.empty();
    if (c.report.pass) c.report.first_divergence_step = -1;
    return c.report;
}

} // namespace

ReplayReport replay_run(const RunTrace& trace, std::shared_ptr<const Model> model) {
    if (!(model->spec() == trace.model))
        fail(ErrorKind::InvalidArgument, "replay model does not match the recorded model");
    Session session = open_session(model, trace.prompt);
    const double tol = session.declared_tolerance();
    const RunTrace fresh =
        run_in_session(session, trace.model, trace.prompt, trace.config, trace.sample_id);
    return compare_runs(trace, fresh, tol);
}

ReplayReport replay_run(const RunTrace& trace) {
    return replay_run(trace, std::make_shared<const Model>(trace.model));
}

} // namespace tr::engine
