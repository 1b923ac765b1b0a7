// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_PROB_HPP
#define THINKROUTER_CORE_PROB_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "core/rng.hpp"

namespace tr {

using TokenId = std::int32_t;

// Dense scores over a vocabulary, indexed by token id.
using LogitVector = std::vector<double>;

// Dense probabilities over a vocabulary: entries >= 0, sum == 1 within 1e-9.
using ProbVector = std::vector<double>;

// Serving-style sampling knobs. top_k == 0 means unbounded.
struct SamplingProfile {
    double temperature = 1.0; // softmax temperature, > 0
    int top_k = 0;            // keep the k most probable tokens; 0 = keep all
    double top_p = 1.0;       // nucleus mass in (0,1]
    double min_p = 0.0;       // floor relative to the max surviving prob, in [0,1)

    friend bool operator==(const SamplingProfile&, const SamplingProfile&) = default;
};

// Sparse renormalized weights, ascending token id, each weight in (0,1],
// summing to 1 within 1e-9. Carries the top-j mixture for soft embeddings.
struct SparseWeights {
    std::vector<std::pair<TokenId, double>> entries;

    friend bool operator==(const SparseWeights&, const SparseWeights&) = default;
};

namespace prob {

// Throw ErrorKind::InvalidArgument unless the value satisfies its type
// invariants. Ops below call these on entry; they are cheap (one pass).
void validate_logits(const LogitVector& logits);
void validate_dist(const ProbVector& dist);
void validate_profile(const SamplingProfile& profile);

// softmax(logits / temperature), numerically stable, entry order preserved.
ProbVector temperature_scale(const LogitVector& logits, double temperature);

// (smallest arg-maximal id, max probability).
std::pair<TokenId, double> max_prob(const ProbVector& dist);

// Smallest arg-maximal id.
TokenId argmax_token(const ProbVector& dist);

// Shannon entropy in nats, with 0*log(0) == 0.
double entropy(const ProbVector& dist);

// top-k, then the smallest descending-order prefix whose cumulative raw mass
// reaches top_p (inclusive), then the min_p floor, then one renormalization.
// All ties break toward the lower token id. The argmax always survives, so
// the support is never emptied.
ProbVector sample_filter(const ProbVector& dist, const SamplingProfile& profile);

// Inverse-CDF draw over ascending token ids. One uniform per call; identical
// (dist, rng state) always yields the identical token, on every platform.
TokenId multinomial_draw(const ProbVector& dist, Rng& rng);

// The j most probable tokens (ties toward lower id), zero-probability tokens
// excluded, weights renormalized to sum 1. j >= 1.
SparseWeights top_j_renormalize(const ProbVector& dist, int j);

} // namespace prob
} // namespace tr

#endif
