// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_TOY_MODEL_HPP
#define THINKROUTER_CORE_TOY_MODEL_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "core/model.hpp"

namespace tr::toy {

// A fixed-weight decoder-only transformer, small enough to run thousands of
// desk-scale decodes per second yet shaped like the real thing: pre-norm
// blocks of single-head causal attention plus a tanh MLP, learned positions,
// and a (tied or untied) output projection. Every weight is drawn from one
// seeded portable stream, so (seed, vocab, dim, layers) fully determines all
// logits, bit for bit, on any platform.

struct Weights {
    int vocab_size = 0;
    int dim = 0;
    int layers = 0;
    int max_positions = 0;
    bool tied = true;

    std::vector<double> embedding; // |V| x d
    std::vector<double> position;  // max_positions x d

    struct Layer {
        std::vector<double> wq, wk, wv, wo; // d x d
        std::vector<double> w1;             // 2d x d
        std::vector<double> w2;             // d x 2d
    };
    std::vector<Layer> layer;
    std::vector<double> wout; // |V| x d, empty when tied
};

// Derive all weights from the seed. vocab_size >= 4, dim >= 4, layers >= 1.
std::shared_ptr<const Weights> build_weights(std::uint64_t seed, int vocab_size, int dim,
                                             int layers, bool tied, int max_positions);

// The embedding table is shared with the session side so that remote sessions
// can reproduce it without the provider.
EmbeddingTable table_from_weights(const Weights& w);

// Incremental forward pass with per-layer KV caches. Appending never changes
// earlier cache entries, so incremental logits equal full recomputation.
class ToyProvider : public Provider {
public:
    ToyProvider(std::shared_ptr<const Weights> weights, const EmbeddingTable& table);

    void reset(const std::vector<TokenId>& prompt) override;
    LogitVector next(const InputElement* element) override;

private:
    void feed(const std::vector<double>& x);
    LogitVector logits_from_last() const;

    std::shared_ptr<const Weights> w_;
    const EmbeddingTable& table_;

    struct Cache {
        std::vector<std::vector<double>> k, v; // one d-vector per fed position
    };
    std::vector<Cache> cache_;         // one per layer
    std::vector<double> last_hidden_;  // final-layer hidden of the last position
    size_t positions_ = 0;
};

} // namespace tr::toy

#endif
