// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"

#include "core/error.hpp"

namespace tr::metrics {

int SampleOutcome::c() const {
    int correct = 0;
    for (const SeedRun& r : runs) correct += r.correct ? 1 : 0;
    return correct;
}

std::vector<SampleOutcome> group_outcomes(const std::vector<RunTrace>& traces) {
    std::map<std::string, SampleOutcome> by_sample;
    for (const RunTrace& t : traces) {
        if (!t.correct.has_value())
            fail(ErrorKind::Validation,
                 "run of sample \"" + t.sample_id + "\" has no correct flag; judge the corpus first");
        SampleOutcome& o = by_sample[t.sample_id];
        o.sample_id = t.sample_id;
        SeedRun r;
        r.seed = t.config.seed;
        r.answer = t.answer_tokens;
        r.correct = *t.correct;
        r.generation_length = t.generation_length;
        o.runs.push_back(std::move(r));
    }
    std::vector<SampleOutcome> outcomes;
    outcomes.reserve(by_sample.size());
    for (auto& [id, o] : by_sample) {
        std::sort(o.runs.begin(), o.runs.end(),
                  [](const SeedRun& a, const SeedRun& b) { return a.seed < b.seed; });
        for (size_t i = 1; i < o.runs.size(); ++i)
            if (o.runs[i].seed == o.runs[i - 1].seed)
                fail(ErrorKind::Validation, "sample \"" + id + "\" has two runs with seed " +
                                                std::to_string(o.runs[i].seed));
        outcomes.push_back(std::move(o));
    }
    return outcomes;
}

namespace {

// C(n, k) exactly; n must be small enough that the running product fits
// (the interim product is widened to 128 bits).
std::uint64_t binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 result = 1;
    for (int i = 1; i <= k; ++i) {
        result = result * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    }
    return static_cast<std::uint64_t>(result);
}

} // namespace

double pass_at_k(int n, int c, int k) {
    if (n < 1) fail(ErrorKind::InvalidArgument, "pass_at_k: n must be >= 1");
    if (c < 0 || c > n) fail(ErrorKind::InvalidArgument, "pass_at_k: need 0 <= c <= n");
    if (k < 1 || k > n) fail(ErrorKind::InvalidArgument, "pass_at_k: need 1 <= k <= n");
    if (n <= 62) {
        // C(62,31) < 2^63, so both binomials are exact; the quotient is then
        // a single correctly rounded division.
        const std::uint64_t total = binom(n, k);
        const std::uint64_t all_wrong = binom(n - c, k);
        return static_cast<double>(total - all_wrong) / static_cast<double>(total);
    }
    double miss = 1.0;
    for (int i = 0; i < k; ++i) {
        if (n - c - i <= 0) return 1.0;
        miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - miss;
}

double mean_pass1(const std::vector<SampleOutcome>& outcomes) {
    if (outcomes.empty()) fail(ErrorKind::InvalidArgument, "mean_pass1: no outcomes");
    double sum = 0.0;
    for (const SampleOutcome& o : outcomes) {
        if (o.runs.empty()) fail(ErrorKind::InvalidArgument, "mean_pass1: outcome with no runs");
        sum += pass_at_k(o.n(), o.c(), 1);
    }
    return sum / static_cast<double>(outcomes.size());
}

double mean_generation_length(const std::vector<SampleOutcome>& outcomes) {
    if (outcomes.empty()) fail(ErrorKind::InvalidArgument, "mean_generation_length: no outcomes");
    double sum = 0.0;
    long count = 0;
    for (const SampleOutcome& o : outcomes) {
        for (const SeedRun& r : o.runs) {
            sum += static_cast<double>(r.generation_length);
            count += 1;
        }
    }
    if (count == 0) fail(ErrorKind::InvalidArgument, "mean_generation_length: no runs");
    return sum / static_cast<double>(count);
}

std::vector<TokenId> majority_vote(
    const std::vector<std::pair<std::uint64_t, std::vector<TokenId>>>& seed_answers) {
    if (seed_answers.empty()) fail(ErrorKind::InvalidArgument, "majority_vote: no answers");
    // Per distinct answer: how often it appeared and the lowest seed that
    // produced it (the tie-breaker).
    std::map<std::vector<TokenId>, std::pair<long, std::uint64_t>> tally;
    for (const auto& [seed, answer] : seed_answers) {
        auto it = tally.find(answer);
        if (it == tally.end()) {
            tally.emplace(answer, std::make_pair(1L, seed));
        } else {
            it->second.first += 1;
            it->second.second = std::min(it->second.second, seed);
        }
    }
    const std::vector<TokenId>* best = nullptr;
    long best_count = -1;
    std::uint64_t best_seed = 0;
    for (const auto& [answer, stat] : tally) {
        const auto [count, min_seed] = stat;
        if (count > best_count || (count == best_count && min_seed < best_seed)) {
            best = &answer;
            best_count = count;
            best_seed = min_seed;
        }
    }
    return *best;
}

// ============================================================
// Reports
// ============================================================

std::string fmt_double(double v) { return nlohmann::ordered_json(v).dump(); }

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "mode,tau,pass1,mean_length\n";
    for (const MetricsRow& r : rows) {
        out += r.mode;
        out += ',';
        out += fmt_double(r.tau);
        out += ',';
        out += fmt_double(r.pass1);
        out += ',';
        out += fmt_double(r.mean_length);
        out += '\n';
    }
    return out;
}

} // namespace tr::metrics
