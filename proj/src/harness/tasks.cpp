// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "harness/tasks.hpp"

#include <cstdio>

#include "core/engine.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace tr::harness {

void validate_family(const TaskFamilyParams& params) {
    if (params.count < 1) fail(ErrorKind::InvalidArgument, "task count must be >= 1");
    if (params.prompt_min < 1 || params.prompt_max < params.prompt_min)
        fail(ErrorKind::InvalidArgument, "need 1 <= prompt_min <= prompt_max");
}

namespace {

std::string task_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%03d", index);
    return buf;
}

// Uniform non-terminator token: terminators in the prompt would be inert
// padding, so they are skipped.
TokenId draw_token(Rng& rng, int vocab_size, TokenId eot) {
    const TokenId raw = static_cast<TokenId>(rng.next_below(static_cast<std::uint64_t>(vocab_size - 1)));
    return raw >= eot ? raw + 1 : raw;
}

} // namespace

std::vector<SyntheticTask> generate_tasks(const std::shared_ptr<const Model>& model,
                                          const TaskFamilyParams& params,
                                          const RoutingConfig& episode) {
    validate_family(params);
    const int vocab_size = model->vocab_size();
    if (vocab_size < 2)
        fail(ErrorKind::InvalidArgument, "task generation needs at least two tokens");

    RoutingConfig gold_config = episode;
    gold_config.mode = Mode::CotGreedy;
    gold_config.cold_stop = default_config(Mode::CotGreedy).cold_stop;
    gold_config.seed = 0;
    validate_config(gold_config);

    Rng rng(params.seed);
    std::vector<SyntheticTask> tasks;
    tasks.reserve(static_cast<size_t>(params.count));
    const long attempt_budget = 100L * params.count;
    long attempts = 0;
    while (static_cast<int>(tasks.size()) < params.count) {
        if (++attempts > attempt_budget)
            fail(ErrorKind::Internal,
                 "task generation gave up: greedy answers keep coming out empty for this model");
        const int span = params.prompt_max - params.prompt_min + 1;
        const int length =
            params.prompt_min + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(span)));
        std::vector<TokenId> prompt;
        prompt.reserve(static_cast<size_t>(length));
        for (int i = 0; i < length; ++i)
            prompt.push_back(draw_token(rng, vocab_size, model->eot_token_id()));

        const RunTrace gold_run = engine::run(model, prompt, gold_config);
        if (gold_run.answer_tokens.empty()) continue; // nothing to match against
        SyntheticTask task;
        task.id = task_name(static_cast<int>(tasks.size()));
        task.prompt = std::move(prompt);
        task.gold = gold_run.answer_tokens;
        tasks.push_back(std::move(task));
    }
    return tasks;
}

bool judge(const SyntheticTask& task, const std::vector<TokenId>& answer) {
    return answer == task.gold;
}

} // namespace tr::harness
