// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/toy_model.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"
#include "core/fmath.hpp"
#include "core/rng.hpp"

namespace tr::toy {

namespace {

// Logit sharpening applied to the output projection. Raw random-weight
// projections give nearly flat distributions whose p_max never reaches the
// routing thresholds; this scale spreads p_max across (0,1) so confidence
// routing has something to route on.
constexpr double kLogitScale = 6.0;
constexpr double kRmsEps = 1e-6;

void fill_uniform(Rng& rng, std::vector<double>& out, size_t n, double scale) {
    out.resize(n);
    for (size_t i = 0; i < n; ++i) out[i] = rng.next_double(-1.0, 1.0) * scale;
}

// y = M x for a row-major (rows x cols) matrix; fixed accumulation order.
void matvec(const std::vector<double>& m, const std::vector<double>& x, size_t rows,
            size_t cols, std::vector<double>& y) {
    y.assign(rows, 0.0);
    for (size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = m.data() + r * cols;
        for (size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

std::vector<double> rms_norm(const std::vector<double>& x) {
    double ss = 0.0;
    for (const double v : x) ss += v * v;
    const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + kRmsEps);
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv;
    return out;
}

} // namespace

std::shared_ptr<const Weights> build_weights(std::uint64_t seed, int vocab_size, int dim,
                                             int layers, bool tied, int max_positions) {
    if (vocab_size < 4) fail(ErrorKind::InvalidArgument, "toy model needs vocab_size >= 4");
    if (dim < 4) fail(ErrorKind::InvalidArgument, "toy model needs dim >= 4");
    if (layers < 1) fail(ErrorKind::InvalidArgument, "toy model needs layers >= 1");
    if (max_positions < 1) fail(ErrorKind::InvalidArgument, "toy model needs max_positions >= 1");

    auto w = std::make_shared<Weights>();
    w->vocab_size = vocab_size;
    w->dim = dim;
    w->layers = layers;
    w->tied = tied;
    w->max_positions = max_positions;

    const auto v = static_cast<size_t>(vocab_size);
    const auto d = static_cast<size_t>(dim);
    const double s_d = 1.0 / std::sqrt(static_cast<double>(dim));
    const double s_2d = 1.0 / std::sqrt(2.0 * static_cast<double>(dim));

    // One stream, fixed draw order. Reordering these lines would silently
    // re-seed every golden trace, so don't.
    Rng rng(seed);
    fill_uniform(rng, w->embedding, v * d, s_d);
    fill_uniform(rng, w->position, static_cast<size_t>(max_positions) * d, s_d);
    w->layer.resize(static_cast<size_t>(layers));
    for (auto& layer : w->layer) {
        fill_uniform(rng, layer.wq, d * d, s_d);
        fill_uniform(rng, layer.wk, d * d, s_d);
        fill_uniform(rng, layer.wv, d * d, s_d);
        fill_uniform(rng, layer.wo, d * d, s_d);
        fill_uniform(rng, layer.w1, 2 * d * d, s_d);
        fill_uniform(rng, layer.w2, d * 2 * d, s_2d);
    }
    if (!tied) fill_uniform(rng, w->wout, v * d, s_d);
    return w;
}

EmbeddingTable table_from_weights(const Weights& w) {
    EmbeddingTable t;
    t.vocab_size = w.vocab_size;
    t.dim = w.dim;
    t.data = w.embedding;
    return t;
}

ToyProvider::ToyProvider(std::shared_ptr<const Weights> weights, const EmbeddingTable& table)
    : w_(std::move(weights)), table_(table) {
    cache_.resize(static_cast<size_t>(w_->layers));
}

void ToyProvider::reset(const std::vector<TokenId>& prompt) {
    for (auto& c : cache_) {
        c.k.clear();
        c.v.clear();
    }
    last_hidden_.clear();
    positions_ = 0;
    for (const TokenId t : prompt) feed(embed(table_, t));
}

LogitVector ToyProvider::next(const InputElement* element) {
    if (element) {
        if (element->is_discrete()) {
            feed(embed(table_, element->token));
        } else {
            if (element->vec.size() != static_cast<size_t>(w_->dim))
                fail(ErrorKind::InvalidArgument,
                     "soft vector has dimension " + std::to_string(element->vec.size()) +
                         ", model expects " + std::to_string(w_->dim));
            feed(element->vec);
        }
    }
    return logits_from_last();
}

void ToyProvider::feed(const std::vector<double>& x) {
    if (positions_ >= static_cast<size_t>(w_->max_positions))
        fail(ErrorKind::Provider,
             "toy model context exceeds max_positions=" + std::to_string(w_->max_positions));

    const auto d = static_cast<size_t>(w_->dim);
    std::vector<double> h(d);
    const double* pos = w_->position.data() + positions_ * d;
    for (size_t i = 0; i < d; ++i) h[i] = x[i] + pos[i];

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w_->dim));
    std::vector<double> n, q, k, v, proj;
    for (size_t li = 0; li < w_->layer.size(); ++li) {
        const Weights::Layer& L = w_->layer[li];
        Cache& c = cache_[li];

        // attention over all cached positions plus this one
        n = rms_norm(h);
        matvec(L.wq, n, d, d, q);
        matvec(L.wk, n, d, d, k);
        matvec(L.wv, n, d, d, v);
        c.k.push_back(k);
        c.v.push_back(v);

        const size_t t = c.k.size();
        std::vector<double> score(t);
        double smax = -1e300;
        for (size_t i = 0; i < t; ++i) {
            double acc = 0.0;
            for (size_t j = 0; j < d; ++j) acc += q[j] * c.k[i][j];
            score[i] = acc * inv_sqrt_d;
            if (score[i] > smax) smax = score[i];
        }
        double ssum = 0.0;
        for (size_t i = 0; i < t; ++i) {
            score[i] = fmath::exp(score[i] - smax);
            ssum += score[i];
        }
        std::vector<double> attn(d, 0.0);
        for (size_t i = 0; i < t; ++i) {
            const double a = score[i] / ssum;
            for (size_t j = 0; j < d; ++j) attn[j] += a * c.v[i][j];
        }
        matvec(L.wo, attn, d, d, proj);
        for (size_t j = 0; j < d; ++j) h[j] += proj[j];

        // tanh MLP
        n = rms_norm(h);
        std::vector<double> mid;
        matvec(L.w1, n, 2 * d, d, mid);
        for (double& m : mid) m = fmath::tanh(m);
        matvec(L.w2, mid, d, 2 * d, proj);
        for (size_t j = 0; j < d; ++j) h[j] += proj[j];
    }

    last_hidden_ = std::move(h);
    ++positions_;
}

LogitVector ToyProvider::logits_from_last() const {
    const auto d = static_cast<size_t>(w_->dim);
    const auto vocab = static_cast<size_t>(w_->vocab_size);

    // Empty context: nothing has been fed, project the zero state. This keeps
    // empty prompts legal; the result is the uniform distribution.
    std::vector<double> n(d, 0.0);
    if (!last_hidden_.empty()) n = rms_norm(last_hidden_);

    const std::vector<double>& out_w = w_->tied ? w_->embedding : w_->wout;
    LogitVector logits(vocab);
    for (size_t r = 0; r < vocab; ++r) {
        double acc = 0.0;
        const double* row = out_w.data() + r * d;
        for (size_t j = 0; j < d; ++j) acc += row[j] * n[j];
        logits[r] = acc * kLogitScale;
    }
    return logits;
}

} // namespace tr::toy
