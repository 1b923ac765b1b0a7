// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale synthetic tasks. A task is a random prompt whose gold answer is
// whatever the model emits under greedy decoding; the different decoding
// modes then agree or disagree with that answer at different rates, which
// makes accuracy and length differences observable without any real
// benchmark. Judging is exact match on the answer token sequence.
#ifndef TR_HARNESS_TASKS_HPP
#define TR_HARNESS_TASKS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/trace.hpp"

namespace tr::harness {

struct SyntheticTask {
    std::string id;
    std::vector<TokenId> prompt;
    std::vector<TokenId> gold; // non-empty
};

struct TaskFamilyParams {
    int count = 12;
    std::uint64_t seed = 1;
    int prompt_min = 3; // prompt length range, inclusive
    int prompt_max = 6;
};
void validate_family(const TaskFamilyParams& params);

// Draws prompts from the family seed and fixes each gold answer by a greedy
// run under `episode` (mode and seed are overridden internally; greedy
// decoding makes the gold independent of the sampling seed). Prompts whose
// greedy answer comes out empty are redrawn.
std::vector<SyntheticTask> generate_tasks(const std::shared_ptr<const Model>& model,
                                          const TaskFamilyParams& params,
                                          const RoutingConfig& episode);

bool judge(const SyntheticTask& task, const std::vector<TokenId>& answer);

} // namespace tr::harness

#endif
