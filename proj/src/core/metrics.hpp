// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Accuracy and cost metrics over judged runs: Pass@k, per-corpus means,
// majority voting. Correctness is an input here — judging happens in the
// harness, never in this module.
#ifndef TR_CORE_METRICS_HPP
#define TR_CORE_METRICS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/trace.hpp"

namespace tr::metrics {

// One judged run of a sample under one seed.
struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<TokenId> answer;
    bool correct = false;
    long generation_length = 0;
};

// All runs of one sample across the seed protocol.
struct SampleOutcome {
    std::string sample_id;
    std::vector<SeedRun> runs; // sorted by seed
    int n() const { return static_cast<int>(runs.size()); }
    int c() const;
};

// Groups judged traces by sample_id (runs sorted by seed, outcomes sorted by
// sample_id). Every trace must carry a correct flag; duplicate
// (sample_id, seed) pairs are rejected.
std::vector<SampleOutcome> group_outcomes(const std::vector<RunTrace>& traces);

// Probability that at least one of k uniformly drawn runs out of n is
// correct, given c correct runs: (C(n,k) - C(n-c,k)) / C(n,k). Evaluated as
// an exact integer ratio (so pass_at_k(3,2,1) is the correctly rounded 2/3),
// with a product fallback for n too large for 64-bit binomials.
double pass_at_k(int n, int c, int k);

// Mean over samples of the per-sample c/n.
double mean_pass1(const std::vector<SampleOutcome>& outcomes);

// Mean generation_length over every (sample, seed) run.
double mean_generation_length(const std::vector<SampleOutcome>& outcomes);

// Most frequent answer; ties go to the answer produced by the lowest seed
// among the tied ones.
std::vector<TokenId> majority_vote(
    const std::vector<std::pair<std::uint64_t, std::vector<TokenId>>>& seed_answers);

// ============================================================
// Report rows
// ============================================================

struct MetricsRow {
    std::string mode;
    double tau = 0.0;
    double pass1 = 0.0;
    double mean_length = 0.0;
};

// "mode,tau,pass1,mean_length" with a header line.
std::string metrics_csv(const std::vector<MetricsRow>& rows);

// Shortest decimal representation that round-trips the double (the same
// encoding the trace files use), so every report path prints floats
// identically.
std::string fmt_double(double v);

} // namespace tr::metrics

#endif
