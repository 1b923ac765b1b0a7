// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_MODEL_HPP
#define THINKROUTER_CORE_MODEL_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/prob.hpp"

namespace tr {

// ============================================================
// Embedding table
// ============================================================

// E in R^{|V| x d}, row-major. Token v embeds as rows[v*dim .. v*dim+dim).
struct EmbeddingTable {
    int vocab_size = 0;
    int dim = 0;
    std::vector<double> data;

    const double* row(TokenId v) const { return data.data() + static_cast<size_t>(v) * dim; }
};

// Row v as an owned vector. Errors on out-of-range ids.
std::vector<double> embed(const EmbeddingTable& table, TokenId token);

// Probability-weighted mixture of embedding rows: sum_v w[v] * E[v].
// Weights must cover valid ids and sum to 1.
std::vector<double> soft_embed(const SparseWeights& weights, const EmbeddingTable& table);

// Identity-like table: row v is the one-hot vector for v (dim == vocab_size).
// Used for scripted models, which carry no embedding space of their own.
EmbeddingTable one_hot_table(int vocab_size);

// ============================================================
// Input elements
// ============================================================

// One context element: a committed vocabulary token or a soft d-vector.
struct InputElement {
    TokenId token = -1;      // valid iff discrete
    std::vector<double> vec; // valid iff soft

    static InputElement discrete(TokenId id) {
        InputElement e;
        e.token = id;
        return e;
    }
    static InputElement soft(std::vector<double> v) {
        InputElement e;
        e.vec = std::move(v);
        return e;
    }
    bool is_discrete() const { return token >= 0; }
};

// ============================================================
// Model specs
// ============================================================

enum class ProviderKind { Scripted, Toy, Remote };

struct ToyParams {
    std::uint64_t seed = 0;
    int layers = 1;
    bool tied = true;        // reuse E as the output projection
    int max_positions = 2048;
};

// How a remote session obtains the embedding table it applies client-side.
struct RemoteEmbedding {
    enum class Kind { OneHot, Toy, Rows };
    Kind kind = Kind::OneHot;
    ToyParams toy;                         // Kind::Toy: same derivation as a toy model
    std::vector<std::vector<double>> rows; // Kind::Rows: explicit table
};

struct ModelSpec {
    ProviderKind kind = ProviderKind::Scripted;
    int vocab_size = 0;
    int dim = 0;
    TokenId eot_token_id = 0;

    // scripted: logit rows replayed in order, inputs ignored
    std::shared_ptr<const std::vector<LogitVector>> rows;
    std::string script_path; // set when the rows came from a file

    // toy
    ToyParams toy;

    // remote: child process speaking the NDJSON protocol on its stdio
    std::vector<std::string> remote_command;
    RemoteEmbedding remote_embedding;
};

// Structural equality (scripted rows compared by content, not pointer).
bool operator==(const ModelSpec& a, const ModelSpec& b);

// Parse/serialize a ModelSpec from the JSON used in configs and traces.
// Round-trips exactly; see README for the schema.
ModelSpec model_spec_from_json(const std::string& json_text);
std::string model_spec_to_json(const ModelSpec& spec);

// Load the scripted-model file format {"vocab_size":N,"eot":ID,"rows":[[...]]}.
ModelSpec load_scripted_file(const std::string& path);

// ============================================================
// Providers and sessions
// ============================================================

// A next-logits source. reset() discards all context; next() appends one
// element (nullptr = none, legal only as the first step after reset) and
// returns the logits for the following position. Deterministic in the fed
// element history.
class Provider {
public:
    virtual ~Provider() = default;
    virtual void reset(const std::vector<TokenId>& prompt) = 0;
    virtual LogitVector next(const InputElement* element) = 0;

    // Worst-case per-logit deviation when the same element history is
    // replayed. In-process providers are bitwise reproducible (0.0); remote
    // providers report whatever the peer declared at handshake.
    virtual double declared_tolerance() const { return 0.0; }
};

// Model = spec + derived immutable state (embedding table, toy weights).
// Cheap to share across sessions and threads; sessions carry all mutable state.
class Model {
public:
    explicit Model(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    const EmbeddingTable& table() const { return table_; }
    int vocab_size() const { return spec_.vocab_size; }
    int dim() const { return spec_.dim; }
    TokenId eot_token_id() const { return spec_.eot_token_id; }

    // Opaque weight blob for the toy provider (null otherwise).
    std::shared_ptr<const void> toy_weights() const { return toy_weights_; }

private:
    ModelSpec spec_;
    EmbeddingTable table_;
    std::shared_ptr<const void> toy_weights_;
};

// Single-owner, strictly sequential decode stream over one provider.
class Session {
public:
    Session(std::shared_ptr<const Model> model, const std::vector<TokenId>& prompt);

    // Feeds `element` (omit for the first call after open/reset) and returns
    // the next position's logits.
    LogitVector next_logits(const std::optional<InputElement>& element);

    void reset(const std::vector<TokenId>& prompt);

    // Elements fed since reset, prompt included.
    size_t context_length() const { return context_length_; }

    double declared_tolerance() const { return provider_->declared_tolerance(); }

    const Model& model() const { return *model_; }
    const EmbeddingTable& table() const { return model_->table(); }

private:
    std::shared_ptr<const Model> model_;
    std::unique_ptr<Provider> provider_;
    size_t context_length_ = 0;
    bool awaiting_first_step_ = true;
};

Session open_session(std::shared_ptr<const Model> model, const std::vector<TokenId>& prompt);

} // namespace tr

#endif
