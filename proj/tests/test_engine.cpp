// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Decoding-loop tests: routing rule, Cold Stop exactness on scripted
// distributions, budget accounting, terminator splicing, mode-collapse
// equivalences on the toy model, and replay verification.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <memory>
#include <vector>

#include "core/engine.hpp"
#include "core/error.hpp"
#include "core/model.hpp"
#include "core/rng.hpp"
#include "core/trace.hpp"

using namespace tr;
using tr::engine::cold_stop_update;
using tr::engine::route;

namespace {

// Scripted logit rows with effectively deterministic draws: the argmax
// carries probability 1 - 3e-35, far below the resolution of a 53-bit
// uniform, so every mode emits the argmax.
LogitVector peaked_row(int vocab, TokenId argmax) {
    LogitVector row(static_cast<size_t>(vocab), -40.0);
    row[static_cast<size_t>(argmax)] = 40.0;
    return row;
}

LogitVector uniform_row(int vocab) { return LogitVector(static_cast<size_t>(vocab), 0.0); }

// High-entropy row whose argmax is NOT the end-of-thinking token, so an
// entropy excursion never doubles as an end-of-thinking signal.
LogitVector excursion_row(int vocab) {
    LogitVector row(static_cast<size_t>(vocab), 0.0);
    row[1] = 0.1;
    return row;
}

ModelSpec scripted_spec(int vocab, TokenId eot, std::vector<LogitVector> rows) {
    ModelSpec spec;
    spec.kind = ProviderKind::Scripted;
    spec.vocab_size = vocab;
    spec.dim = vocab;
    spec.eot_token_id = eot;
    spec.rows = std::make_shared<const std::vector<LogitVector>>(std::move(rows));
    return spec;
}

ModelSpec toy_spec(std::uint64_t seed, int vocab = 12, int dim = 8) {
    ModelSpec spec;
    spec.kind = ProviderKind::Toy;
    spec.vocab_size = vocab;
    spec.dim = dim;
    spec.eot_token_id = 0;
    spec.toy.seed = seed;
    return spec;
}

RoutingConfig config_for(Mode mode, long budget, bool cold, double tau = 0.6) {
    RoutingConfig c = default_config(mode);
    c.tau = tau;
    c.max_output_length = budget;
    c.cold_stop.enabled = cold;
    return c;
}

// The documented seed decorrelator for the routing coin stream.
constexpr std::uint64_t kRoutingSeedXor = 0xD1B54A32D192ED03ull;

} // namespace

// ============================================================
// Routing rule and Cold Stop counter
// ============================================================

TEST_CASE("route sends low confidence discrete and the boundary latent") {
    CHECK(route(0.59, 0.6) == Space::Discrete);
    CHECK(route(0.6, 0.6) == Space::Latent); // boundary goes latent
    CHECK(route(0.61, 0.6) == Space::Latent);
    CHECK(route(0.0, 0.0) == Space::Latent); // tau = 0: everything latent
    CHECK(route(1.0, 1.01) == Space::Discrete); // tau > 1: nothing latent
    CHECK(route(0.0, 1.0) == Space::Discrete);
    CHECK_THROWS_AS(route(-0.1, 0.5), Error);
    CHECK_THROWS_AS(route(1.1, 0.5), Error);
}

TEST_CASE("cold_stop_update counts consecutive sub-delta steps") {
    auto u = cold_stop_update(0, 0.005, 0.01, 3);
    CHECK(u.counter == 1);
    CHECK(!u.triggered);
    u = cold_stop_update(u.counter, 0.0, 0.01, 3);
    CHECK(u.counter == 2);
    CHECK(!u.triggered);
    u = cold_stop_update(u.counter, 0.009, 0.01, 3);
    CHECK(u.counter == 3);
    CHECK(u.triggered);
    // an excursion resets
    u = cold_stop_update(2, 0.01, 0.01, 3); // boundary: entropy == delta is NOT below
    CHECK(u.counter == 0);
    CHECK(!u.triggered);
    // delta = 0 can never trigger (entropy is never negative)
    u = cold_stop_update(5, 0.0, 0.0, 1);
    CHECK(u.counter == 0);
    CHECK(!u.triggered);
}

TEST_CASE("config validation accepts tau above one and rejects nonsense") {
    RoutingConfig c = default_config(Mode::ThinkRouter);
    c.tau = 1.01; // deliberately legal: it forces the all-discrete regime
    CHECK_NOTHROW(validate_config(c));
    c.tau = -0.01;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = default_config(Mode::ThinkRouter);
    c.top_j = 0;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = default_config(Mode::ThinkRouter);
    c.cold_stop.window = 0;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = default_config(Mode::ThinkRouter);
    c.cold_stop.delta = -1.0;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = default_config(Mode::ThinkRouter);
    c.max_output_length = 0;
    CHECK_THROWS_AS(validate_config(c), Error);
    c = default_config(Mode::ThinkRouter);
    c.profile.temperature = 0.0;
    CHECK_THROWS_AS(validate_config(c), Error);
}

TEST_CASE("default_config enables Cold Stop only for latent-capable modes") {
    CHECK(!default_config(Mode::CotSampling).cold_stop.enabled);
    CHECK(!default_config(Mode::CotGreedy).cold_stop.enabled);
    CHECK(default_config(Mode::SoftThinking).cold_stop.enabled);
    CHECK(default_config(Mode::RandomRouting).cold_stop.enabled);
    CHECK(default_config(Mode::ThinkRouter).cold_stop.enabled);
}

// ============================================================
// Cold Stop exactness on scripted distributions
// ============================================================

TEST_CASE("cold stop triggers at exactly the window length") {
    for (const int window : {1, 3, 256}) {
        CAPTURE(window);
        std::vector<LogitVector> rows;
        for (int i = 0; i < window; ++i) rows.push_back(peaked_row(4, 1)); // confident non-EOT
        rows.push_back(peaked_row(4, 0)); // consumed when the pending element is fed
        rows.push_back(peaked_row(4, 0)); // answer start: immediate end-of-answer
        RoutingConfig c = config_for(Mode::SoftThinking, window + 50, true);
        c.cold_stop.window = window;
        const RunTrace t = engine::run(scripted_spec(4, 0, rows), {1}, c);
        CHECK(t.stop_mode == StopMode::ColdStop);
        REQUIRE(t.steps.size() == static_cast<size_t>(window));
        for (int i = 0; i < window; ++i) {
            CHECK(t.steps[static_cast<size_t>(i)].cold_counter == i + 1);
            CHECK(t.steps[static_cast<size_t>(i)].entropy < 0.01);
        }
        CHECK(t.steps.back().cold_stop_signal);
        CHECK(!t.steps[static_cast<size_t>(window - 1)].eot_signal);
        // the spliced terminator counts as a thinking element
        CHECK(t.thinking_length == window + 1);
        CHECK(t.answer_tokens.empty());
        CHECK(!t.answer_truncated);
    }
}

TEST_CASE("one excursion at step window-1 prevents the trigger") {
    for (const int window : {3, 256}) {
        CAPTURE(window);
        // confident everywhere except the (window-1)-th step (1-based), which
        // is exactly the step that would have completed the streak
        std::vector<LogitVector> rows;
        for (int i = 0; i < window; ++i)
            rows.push_back(i == window - 2 ? excursion_row(4) : peaked_row(4, 1));
        RoutingConfig c = config_for(Mode::SoftThinking, window, true);
        c.cold_stop.window = window;
        const RunTrace t = engine::run(scripted_spec(4, 0, rows), {1}, c);
        CHECK(t.stop_mode == StopMode::MaxLength); // ran the whole budget instead
        REQUIRE(t.steps.size() == static_cast<size_t>(window));
        for (const StepTrace& s : t.steps) CHECK(!s.cold_stop_signal);
        CHECK(t.steps[static_cast<size_t>(window - 2)].cold_counter == 0); // the reset
        CHECK(t.steps.back().cold_counter == 1);                           // restarted streak
    }
}

TEST_CASE("the streak recovers after an excursion and triggers later") {
    // C C E C C C with window 3 -> counters 1 2 0 1 2 3, trigger at index 5
    std::vector<LogitVector> rows;
    for (int i = 0; i < 6; ++i) rows.push_back(i == 2 ? excursion_row(4) : peaked_row(4, 1));
    rows.push_back(peaked_row(4, 0));
    rows.push_back(peaked_row(4, 0));
    RoutingConfig c = config_for(Mode::SoftThinking, 60, true);
    c.cold_stop.window = 3;
    const RunTrace t = engine::run(scripted_spec(4, 0, rows), {1}, c);
    CHECK(t.stop_mode == StopMode::ColdStop);
    REQUIRE(t.steps.size() == 6);
    const std::vector<int> want = {1, 2, 0, 1, 2, 3};
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(t.steps[i].cold_counter == want[i]);
    CHECK(t.steps.back().cold_stop_signal);
}

TEST_CASE("cold stop outranks a simultaneous end-of-thinking token") {
    // the single step is both confident and the EOT argmax
    std::vector<LogitVector> rows = {peaked_row(4, 0), peaked_row(4, 0)};
    RoutingConfig c = config_for(Mode::CotGreedy, 10, true);
    c.cold_stop.window = 1;
    const RunTrace t = engine::run(scripted_spec(4, 0, rows), {1}, c);
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].eot_signal);
    CHECK(t.steps[0].cold_stop_signal);
    CHECK(t.stop_mode == StopMode::ColdStop); // precedence
    // the pending element already is the terminator; no duplicate is spliced
    CHECK(t.thinking_length == 1);
}

TEST_CASE("cold stop disabled leaves the counter at zero") {
    std::vector<LogitVector> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(peaked_row(4, 1));
    const RunTrace t =
        engine::run(scripted_spec(4, 0, rows), {1}, config_for(Mode::SoftThinking, 5, false));
    CHECK(t.stop_mode == StopMode::MaxLength);
    for (const StepTrace& s : t.steps) {
        CHECK(s.cold_counter == 0);
        CHECK(!s.cold_stop_signal);
    }
}

// ============================================================
// Budget and terminator accounting
// ============================================================

TEST_CASE("a run that exhausts the budget overshoots it by the terminator only") {
    std::vector<LogitVector> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(peaked_row(4, 1));
    const RunTrace t =
        engine::run(scripted_spec(4, 0, rows), {2}, config_for(Mode::SoftThinking, 5, false));
    CHECK(t.stop_mode == StopMode::MaxLength);
    CHECK(t.steps.size() == 5);
    CHECK(t.thinking_length == 6); // 5 latent elements + the forced terminator
    CHECK(t.answer_length == 0);
    CHECK(t.generation_length == 6);
    CHECK(t.answer_truncated); // no room for any answer
}

TEST_CASE("discrete end-of-thinking token stops the loop and is not duplicated") {
    // step 0 emits EOT itself; row 1 is consumed when that pending token is
    // fed; it doubles as the answer start and immediately ends the answer
    std::vector<LogitVector> rows = {peaked_row(4, 0), peaked_row(4, 0)};
    const RunTrace t =
        engine::run(scripted_spec(4, 0, rows), {3}, config_for(Mode::CotSampling, 10, false));
    CHECK(t.stop_mode == StopMode::EotToken);
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].eot_signal);
    CHECK(t.steps[0].space == Space::Discrete);
    CHECK(t.steps[0].emitted_token == 0);
    CHECK(t.thinking_length == 1); // the emitted EOT is the terminator
    CHECK(t.answer_tokens.empty());
    CHECK(t.answer_length == 0);
    CHECK(t.generation_length == 1);
    CHECK(!t.answer_truncated);
}

TEST_CASE("latent end-of-thinking signal splices a real terminator in") {
    // soft step whose argmax is EOT: the pending element is a soft vector,
    // so a discrete EOT must follow it before the answer
    std::vector<LogitVector> rows = {peaked_row(4, 0), peaked_row(4, 0), peaked_row(4, 2),
                                     peaked_row(4, 0)};
    const RunTrace t =
        engine::run(scripted_spec(4, 0, rows), {3}, config_for(Mode::SoftThinking, 10, false));
    CHECK(t.stop_mode == StopMode::EotToken);
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].eot_signal);
    CHECK(t.steps[0].space == Space::Latent);
    CHECK(t.thinking_length == 2); // soft element + spliced EOT
    // rows: 0 = step, 1 = soft element fed, 2 = terminator fed (answer
    // start, argmax 2), 3 = after answer token 2 (ends the answer)
    CHECK(t.answer_tokens == std::vector<TokenId>{2});
    CHECK(t.answer_length == 1);
    CHECK(t.generation_length == 3);
    CHECK(!t.answer_truncated);
}

TEST_CASE("answer decoding truncates when the budget runs out") {
    // thinking emits EOT at once; answers then keep emitting token 1
    std::vector<LogitVector> rows = {peaked_row(4, 0)};
    for (int i = 0; i < 8; ++i) rows.push_back(peaked_row(4, 1));
    const RunTrace t =
        engine::run(scripted_spec(4, 0, rows), {3}, config_for(Mode::CotSampling, 4, false));
    CHECK(t.stop_mode == StopMode::EotToken);
    CHECK(t.thinking_length == 1);
    CHECK(t.answer_length == 3); // budget 4 minus 1 thinking element
    CHECK(t.answer_tokens == std::vector<TokenId>{1, 1, 1});
    CHECK(t.answer_truncated);
    CHECK(t.generation_length == 4);
}

TEST_CASE("latent steps carry the top-j mixture and discrete steps do not") {
    std::vector<LogitVector> rows = {uniform_row(6), peaked_row(6, 0), peaked_row(6, 0)};
    RoutingConfig c = config_for(Mode::SoftThinking, 10, false);
    c.top_j = 3;
    const RunTrace t = engine::run(scripted_spec(6, 0, rows), {1}, c);
    REQUIRE(!t.steps.empty());
    const StepTrace& s = t.steps[0];
    CHECK(s.space == Space::Latent);
    REQUIRE(s.top_weights.entries.size() == 3); // min(j, support)
    CHECK(s.top_weights.entries[0].first == 0); // uniform ties toward low ids
    CHECK(s.top_weights.entries[1].first == 1);
    CHECK(s.top_weights.entries[2].first == 2);
    double sum = 0.0;
    for (const auto& [id, w] : s.top_weights.entries) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    const RunTrace d =
        engine::run(scripted_spec(6, 0, {peaked_row(6, 0), peaked_row(6, 0)}), {1},
                    config_for(Mode::CotSampling, 10, false));
    CHECK(d.steps[0].space == Space::Discrete);
    CHECK(d.steps[0].top_weights.entries.empty());
}

TEST_CASE("think_router routes by confidence against tau") {
    // step 0: uniform (p_max = 1/6 < 0.6) -> discrete; step 1: peaked -> latent
    std::vector<LogitVector> rows = {uniform_row(6), peaked_row(6, 1), peaked_row(6, 0),
                                     peaked_row(6, 0), peaked_row(6, 0)};
    const RunTrace t =
        engine::run(scripted_spec(6, 0, rows), {1}, config_for(Mode::ThinkRouter, 3, false));
    REQUIRE(t.steps.size() >= 2);
    CHECK(t.steps[0].space == Space::Discrete);
    CHECK(t.steps[0].p_max == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(t.steps[1].space == Space::Latent);
    CHECK(t.steps[1].p_max == 1.0);
}

// ============================================================
// Mode-collapse equivalences on the toy model
// ============================================================

TEST_CASE("think_router at tau 0 reproduces soft_thinking bitwise") {
    const auto t0 = std::chrono::steady_clock::now();
    auto model = std::make_shared<const Model>(toy_spec(31));
    Rng prompt_rng(100);
    for (int p = 0; p < 22; ++p) {
        std::vector<TokenId> prompt;
        const int len = 3 + static_cast<int>(prompt_rng.next_below(3));
        for (int i = 0; i < len; ++i)
            prompt.push_back(static_cast<TokenId>(prompt_rng.next_below(12)));
        const std::uint64_t seed = prompt_rng.next_u64();

        RoutingConfig router = config_for(Mode::ThinkRouter, 40, true, 0.0);
        router.seed = seed;
        RoutingConfig soft = config_for(Mode::SoftThinking, 40, true);
        soft.seed = seed;
        const RunTrace a = engine::run(model, prompt, router);
        const RunTrace b = engine::run(model, prompt, soft);
        REQUIRE(a.steps == b.steps);
        CHECK(a.stop_mode == b.stop_mode);
        CHECK(a.answer_tokens == b.answer_tokens);
        CHECK(a.thinking_length == b.thinking_length);
        CHECK(a.generation_length == b.generation_length);
    }
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
}

TEST_CASE("think_router above tau 1 reproduces cot_sampling token for token") {
    const auto t0 = std::chrono::steady_clock::now();
    auto model = std::make_shared<const Model>(toy_spec(32));
    Rng prompt_rng(200);
    for (int p = 0; p < 22; ++p) {
        std::vector<TokenId> prompt;
        const int len = 3 + static_cast<int>(prompt_rng.next_below(3));
        for (int i = 0; i < len; ++i)
            prompt.push_back(static_cast<TokenId>(prompt_rng.next_below(12)));
        const std::uint64_t seed = prompt_rng.next_u64();

        RoutingConfig router = config_for(Mode::ThinkRouter, 40, false, 1.01);
        router.seed = seed;
        RoutingConfig cot = config_for(Mode::CotSampling, 40, false);
        cot.seed = seed;
        const RunTrace a = engine::run(model, prompt, router);
        const RunTrace b = engine::run(model, prompt, cot);
        REQUIRE(a.steps == b.steps);
        CHECK(a.stop_mode == b.stop_mode);
        CHECK(a.answer_tokens == b.answer_tokens);
        CHECK(a.generation_length == b.generation_length);
    }
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
}

TEST_CASE("cot_greedy is deterministic and ignores the seed") {
    auto model = std::make_shared<const Model>(toy_spec(33));
    RoutingConfig a = config_for(Mode::CotGreedy, 40, false);
    a.seed = 1;
    RoutingConfig b = a;
    b.seed = 999;
    const RunTrace ta = engine::run(model, {4, 5, 6}, a);
    const RunTrace tb = engine::run(model, {4, 5, 6}, b);
    CHECK(ta.steps == tb.steps);
    CHECK(ta.answer_tokens == tb.answer_tokens);
    for (const StepTrace& s : ta.steps) {
        CHECK(s.space == Space::Discrete);
    }
}

TEST_CASE("random_routing flips its documented dedicated coin") {
    auto model = std::make_shared<const Model>(toy_spec(34));
    RoutingConfig c = config_for(Mode::RandomRouting, 30, false);
    c.seed = 5;
    const RunTrace t = engine::run(model, {2, 3, 4}, c);
    Rng coin(5ull ^ kRoutingSeedXor);
    for (const StepTrace& s : t.steps) {
        const Space want = (coin.next_u64() & 1ull) != 0 ? Space::Latent : Space::Discrete;
        REQUIRE(s.space == want);
    }
    // at 30 steps both spaces all but surely appear
    bool latent = false;
    bool discrete = false;
    for (const StepTrace& s : t.steps) ((s.space == Space::Latent) ? latent : discrete) = true;
    CHECK(latent);
    CHECK(discrete);
}

TEST_CASE("identical configs yield identical runs; different seeds differ") {
    auto model = std::make_shared<const Model>(toy_spec(35));
    RoutingConfig c = config_for(Mode::ThinkRouter, 40, true);
    c.seed = 11;
    const RunTrace a = engine::run(model, {1, 2, 3}, c, "s");
    const RunTrace b = engine::run(model, {1, 2, 3}, c, "s");
    CHECK(a == b);
    c.seed = 12;
    const RunTrace d = engine::run(model, {1, 2, 3}, c, "s");
    CHECK(a != d);
}

// ============================================================
// Replay
// ============================================================

TEST_CASE("an unmodified trace replays clean") {
    RoutingConfig c = config_for(Mode::ThinkRouter, 50, true);
    c.seed = 3;
    const RunTrace t = engine::run(toy_spec(36), {7, 8}, c, "r0");
    const engine::ReplayReport r = engine::replay_run(t);
    CHECK(r.pass);
    CHECK(r.detail.empty());
}

TEST_CASE("a tampered step fails replay at that step") {
    RoutingConfig c = config_for(Mode::ThinkRouter, 50, true);
    c.seed = 3;
    RunTrace t = engine::run(toy_spec(36), {7, 8}, c, "r1");
    REQUIRE(t.steps.size() >= 4);
    t.steps[2].p_max += 1e-9;
    const engine::ReplayReport r = engine::replay_run(t);
    CHECK(!r.pass);
    CHECK(r.first_divergence_step == 2);
    CHECK(!r.detail.empty());
}

TEST_CASE("tampered answers and stop modes fail replay") {
    RoutingConfig c = config_for(Mode::CotSampling, 50, false);
    c.seed = 9;
    RunTrace t = engine::run(toy_spec(36), {5, 6}, c, "r2");
    RunTrace bad = t;
    bad.answer_tokens.push_back(1);
    bad.answer_length += 1;
    bad.generation_length += 1;
    CHECK(!engine::replay_run(bad).pass);
    bad = t;
    bad.stop_mode = bad.stop_mode == StopMode::EotToken ? StopMode::MaxLength : StopMode::EotToken;
    CHECK(!engine::replay_run(bad).pass);
}

TEST_CASE("replay against a mismatched model is refused") {
    RoutingConfig c = config_for(Mode::CotGreedy, 30, false);
    const RunTrace t = engine::run(toy_spec(1), {3, 4}, c, "r3");
    auto other = std::make_shared<const Model>(toy_spec(2));
    CHECK_THROWS_AS(engine::replay_run(t, other), Error);
}

// ============================================================
// Plumbing
// ============================================================

TEST_CASE("both run overloads agree") {
    RoutingConfig c = config_for(Mode::ThinkRouter, 30, true);
    const ModelSpec spec = toy_spec(40);
    const RunTrace a = engine::run(spec, {1, 2}, c, "x");
    const RunTrace b = engine::run(std::make_shared<const Model>(spec), {1, 2}, c, "x");
    CHECK(a == b);
}

TEST_CASE("the recorded config is what the run used") {
    RoutingConfig c = config_for(Mode::CotGreedy, 25, false);
    c.seed = 77;
    const RunTrace t = engine::run(toy_spec(41), {2, 3}, c, "sample-7");
    CHECK(t.sample_id == "sample-7");
    CHECK(t.config.mode == Mode::CotGreedy);
    CHECK(t.config.seed == 77);
    CHECK(t.config.max_output_length == 25);
    CHECK(t.config.profile.top_k == 0); // recorded verbatim; greedy answers are mode semantics
    CHECK(t.prompt == std::vector<TokenId>{2, 3});
    CHECK(t.model == toy_spec(41));
    CHECK(!t.correct.has_value()); // the engine never judges
}

TEST_CASE("an empty prompt starts the toy model from the uniform distribution") {
    RoutingConfig c = config_for(Mode::CotGreedy, 10, false);
    const RunTrace t = engine::run(toy_spec(42), {}, c);
    REQUIRE(!t.steps.empty());
    CHECK(t.steps[0].p_max == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    CHECK(t.steps[0].entropy == doctest::Approx(2.484906649788000310).epsilon(1e-12)); // ln 12
}
