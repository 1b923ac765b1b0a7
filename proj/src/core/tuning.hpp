// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Threshold selection: grid-search tau on a held-out validation subset of
// the samples, then evaluate the remainder once at the winner. Evaluation
// itself is injected as a callback so the search logic stays independent of
// the decoding stack.
#ifndef TR_CORE_TUNING_HPP
#define TR_CORE_TUNING_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace tr::tuning {

struct GridSearchPlan {
    std::vector<double> tau_grid = {0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int validation_size = 10;
    std::vector<std::uint64_t> seeds = {0, 7, 42};
    std::uint64_t split_seed = 0;
};
void validate_plan(const GridSearchPlan& plan);

// Deterministic shuffle split: first `size` shuffled ids form the
// validation set, the rest the test set (disjoint and exhaustive).
std::pair<std::vector<std::string>, std::vector<std::string>>
split_validation(const std::vector<std::string>& sample_ids, int size, std::uint64_t seed);

// Aggregate quality of one configuration on one id set.
struct EvalPoint {
    double pass1 = 0.0;
    double mean_length = 0.0;
};

// Highest pass1 wins; ties go to the shorter mean length, then to the
// smaller tau (more discrete steps, the conservative choice).
double select_tau(const std::vector<std::pair<double, EvalPoint>>& results);

// Runs (tau, ids, seeds) -> EvalPoint. Called once per grid point on the
// validation ids and once on the test ids at the selected tau.
using Evaluator = std::function<EvalPoint(
    double tau, const std::vector<std::string>& sample_ids,
    const std::vector<std::uint64_t>& seeds)>;

struct GridSearchReport {
    double selected_tau = 0.0;
    std::vector<std::pair<double, EvalPoint>> validation_table; // one row per grid tau
    EvalPoint test_report;
    std::vector<std::string> validation_ids;
    std::vector<std::string> test_ids;
};
GridSearchReport grid_search(const std::vector<std::string>& sample_ids,
                             const GridSearchPlan& plan, const Evaluator& evaluate);

// "tau,pass1,mean_length" plus a trailing selected-tau row.
std::string grid_report_csv(const GridSearchReport& report);

} // namespace tr::tuning

#endif
