// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/tuning.hpp"

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

namespace tr::tuning {

void validate_plan(const GridSearchPlan& plan) {
    if (plan.tau_grid.empty()) fail(ErrorKind::InvalidArgument, "tau grid is empty");
    for (size_t i = 0; i < plan.tau_grid.size(); ++i) {
        const double tau = plan.tau_grid[i];
        if (!(tau > 0.0) || tau > 1.0 || !std::isfinite(tau))
            fail(ErrorKind::InvalidArgument, "grid tau values must lie in (0,1]");
        if (i > 0 && tau <= plan.tau_grid[i - 1])
            fail(ErrorKind::InvalidArgument, "tau grid must be strictly increasing");
    }
    if (plan.validation_size < 0)
        fail(ErrorKind::InvalidArgument, "validation_size must be >= 0");
    if (plan.seeds.empty()) fail(ErrorKind::InvalidArgument, "seed list is empty");
    std::set<std::uint64_t> unique_seeds(plan.seeds.begin(), plan.seeds.end());
    if (unique_seeds.size() != plan.seeds.size())
        fail(ErrorKind::InvalidArgument, "seed list contains duplicates");
}

std::pair<std::vector<std::string>, std::vector<std::string>>
split_validation(const std::vector<std::string>& sample_ids, int size, std::uint64_t seed) {
    if (size < 0) fail(ErrorKind::InvalidArgument, "split size must be >= 0");
    std::set<std::string> unique_ids(sample_ids.begin(), sample_ids.end());
    if (unique_ids.size() != sample_ids.size())
        fail(ErrorKind::InvalidArgument, "sample ids contain duplicates");
    if (static_cast<size_t>(size) >= sample_ids.size())
        fail(ErrorKind::InvalidArgument,
             "validation size " + std::to_string(size) + " must leave a non-empty test set (" +
                 std::to_string(sample_ids.size()) + " samples)");
    std::vector<std::string> shuffled = sample_ids;
    Rng rng(seed);
    for (size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.next_below(i)]);
    std::vector<std::string> validation(shuffled.begin(), shuffled.begin() + size);
    std::vector<std::string> test(shuffled.begin() + size, shuffled.end());
    return {std::move(validation), std::move(test)};
}

double select_tau(const std::vector<std::pair<double, EvalPoint>>& results) {
    if (results.empty()) fail(ErrorKind::InvalidArgument, "select_tau: no results");
    const std::pair<double, EvalPoint>* best = nullptr;
    for (const auto& candidate : results) {
        if (best == nullptr) {
            best = &candidate;
            continue;
        }
        const auto& [tau, point] = candidate;
        const auto& [best_tau, best_point] = *best;
        if (point.pass1 > best_point.pass1 ||
            (point.pass1 == best_point.pass1 && point.mean_length < best_point.mean_length) ||
            (point.pass1 == best_point.pass1 && point.mean_length == best_point.mean_length &&
             tau < best_tau))
            best = &candidate;
    }
    return best->first;
}

GridSearchReport grid_search(const std::vector<std::string>& sample_ids,
                             const GridSearchPlan& plan, const Evaluator& evaluate) {
    validate_plan(plan);
    GridSearchReport report;
    auto [validation_ids, test_ids] =
        split_validation(sample_ids, plan.validation_size, plan.split_seed);
    report.validation_ids = std::move(validation_ids);
    report.test_ids = std::move(test_ids);

    for (double tau : plan.tau_grid)
        report.validation_table.emplace_back(tau, evaluate(tau, report.validation_ids, plan.seeds));
    report.selected_tau = select_tau(report.validation_table);
    // Only the winner touches the test set, so selection cannot leak from it.
    report.test_report = evaluate(report.selected_tau, report.test_ids, plan.seeds);
    return report;
}

std::string grid_report_csv(const GridSearchReport& report) {
    using metrics::fmt_double;
    std::string out = "set,tau,pass1,mean_length\n";
    for (const auto& [tau, point] : report.validation_table)
        out += "validation," + fmt_double(tau) + "," + fmt_double(point.pass1) + "," +
               fmt_double(point.mean_length) + "\n";
    out += "test," + fmt_double(report.selected_tau) + "," + fmt_double(report.test_report.pass1) +
           "," + fmt_double(report.test_report.mean_length) + "\n";
    return out;
}

} // namespace tr::tuning
