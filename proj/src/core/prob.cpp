// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "core/error.hpp"
#include "core/fmath.hpp"

namespace tr::prob {

namespace {

constexpr double kSumTolerance = 1e-9;

// ids sorted by (probability desc, id asc) — the shared tie-break order for
// top-k, top-p and top-j.
std::vector<TokenId> ids_by_descending_prob(const ProbVector& dist) {
    std::vector<TokenId> ids(dist.size());
    std::iota(ids.begin(), ids.end(), TokenId{0});
    std::sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) {
        if (dist[static_cast<size_t>(a)] != dist[static_cast<size_t>(b)])
            return dist[static_cast<size_t>(a)] > dist[static_cast<size_t>(b)];
        return a < b;
    });
    return ids;
}

} // namespace

void validate_logits(const LogitVector& logits) {
    if (logits.empty())
        fail(ErrorKind::InvalidArgument, "logit vector is empty");
    for (size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i]))
            fail(ErrorKind::InvalidArgument,
                 "logit " + std::to_string(i) + " is not finite");
    }
}

void validate_dist(const ProbVector& dist) {
    if (dist.empty())
        fail(ErrorKind::InvalidArgument, "probability vector is empty");
    double sum = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        const double p = dist[i];
        if (!(p >= 0.0) || !std::isfinite(p)) // !(>=0) also catches NaN
            fail(ErrorKind::InvalidArgument,
                 "probability " + std::to_string(i) + " is negative or not finite");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        fail(ErrorKind::InvalidArgument,
             "probabilities sum to " + std::to_string(sum) + ", expected 1");
}

void validate_profile(const SamplingProfile& profile) {
    if (!(profile.temperature > 0.0) || !std::isfinite(profile.temperature))
        fail(ErrorKind::InvalidArgument, "temperature must be positive");
    if (profile.top_k < 0)
        fail(ErrorKind::InvalidArgument, "top_k must be >= 0 (0 = unbounded)");
    if (!(profile.top_p > 0.0) || profile.top_p > 1.0)
        fail(ErrorKind::InvalidArgument, "top_p must lie in (0, 1]");
    if (!(profile.min_p >= 0.0) || profile.min_p >= 1.0)
        fail(ErrorKind::InvalidArgument, "min_p must lie in [0, 1)");
}

ProbVector temperature_scale(const LogitVector& logits, double temperature) {
    validate_logits(logits);
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        fail(ErrorKind::InvalidArgument, "temperature must be positive");

    const double m = *std::max_element(logits.begin(), logits.end());
    ProbVector out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        // subtract the max first so exp never overflows
        out[i] = fmath::exp((logits[i] - m) / temperature);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

std::pair<TokenId, double> max_prob(const ProbVector& dist) {
    validate_dist(dist);
    TokenId best = 0;
    double best_p = dist[0];
    for (size_t i = 1; i < dist.size(); ++i) {
        if (dist[i] > best_p) { // strict: ties keep the lower id
            best_p = dist[i];
            best = static_cast<TokenId>(i);
        }
    }
    return {best, best_p};
}

TokenId argmax_token(const ProbVector& dist) {
    return max_prob(dist).first;
}

double entropy(const ProbVector& dist) {
    validate_dist(dist);
    double h = 0.0;
    for (const double p : dist) {
        if (p > 0.0) h -= p * fmath::log(p);
    }
    // rounding can push a delta distribution a hair below zero
    return h < 0.0 ? 0.0 : h;
}

ProbVector sample_filter(const ProbVector& dist, const SamplingProfile& profile) {
    validate_dist(dist);
    validate_profile(profile);

    std::vector<TokenId> order = ids_by_descending_prob(dist);

    // top-k: keep the first k of the descending order
    size_t kept = order.size();
    if (profile.top_k > 0)
        kept = std::min(kept, static_cast<size_t>(profile.top_k));

    // top-p: smallest descending prefix whose cumulative raw mass reaches
    // top_p; if the survivors' total stays below top_p, keep them all
    if (profile.top_p < 1.0) {
        double cum = 0.0;
        size_t prefix = kept;
        for (size_t i = 0; i < kept; ++i) {
            cum += dist[static_cast<size_t>(order[i])];
            if (cum >= profile.top_p) {
                prefix = i + 1;
                break;
            }
        }
        kept = prefix;
    }

    // min-p: floor relative to the largest surviving probability; the first
    // survivor is that maximum, so it can never be dropped
    if (profile.min_p > 0.0) {
        const double floor_p = profile.min_p * dist[static_cast<size_t>(order[0])];
        size_t last = 0;
        for (size_t i = 0; i < kept; ++i) {
            if (dist[static_cast<size_t>(order[i])] >= floor_p) last = i + 1;
        }
        // descending order means everything past the first failure also fails
        kept = std::min(kept, last);
    }

    // single renormalization over the survivors, summed in ascending-id order
    ProbVector out(dist.size(), 0.0);
    for (size_t i = 0; i < kept; ++i)
        out[static_cast<size_t>(order[i])] = dist[static_cast<size_t>(order[i])];
    double sum = 0.0;
    for (const double p : out) sum += p;
    if (sum <= 0.0)
        fail(ErrorKind::Internal, "sample_filter emptied the support");
    for (double& p : out) p /= sum;
    return out;
}

TokenId multinomial_draw(const ProbVector& dist, Rng& rng) {
    validate_dist(dist);
    const double u = rng.next_double();
    double cum = 0.0;
    TokenId last_positive = -1;
    for (size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] <= 0.0) continue;
        cum += dist[i];
        last_positive = static_cast<TokenId>(i);
        if (u < cum) return last_positive;
    }
    // rounding can leave the final cumulative a hair under u; the draw then
    // belongs to the last token with mass
    if (last_positive < 0)
        fail(ErrorKind::Internal, "multinomial_draw on an all-zero vector");
    return last_positive;
}

SparseWeights top_j_renormalize(const ProbVector& dist, int j) {
    validate_dist(dist);
    if (j < 1)
        fail(ErrorKind::InvalidArgument, "top-j requires j >= 1");

    std::vector<TokenId> order = ids_by_descending_prob(dist);
    const size_t take = std::min(order.size(), static_cast<size_t>(j));

    SparseWeights out;
    out.entries.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        const TokenId id = order[i];
        if (dist[static_cast<size_t>(id)] > 0.0)
            out.entries.emplace_back(id, dist[static_cast<size_t>(id)]);
    }
    std::sort(out.entries.begin(), out.entries.end());

    double sum = 0.0;
    for (const auto& [id, w] : out.entries) sum += w;
    for (auto& [id, w] : out.entries) w /= sum;
    return out;
}

} // namespace tr::prob
