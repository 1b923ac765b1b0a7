// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/model.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "core/error.hpp"
#include "core/remote.hpp"
#include "core/toy_model.hpp"

namespace tr {

using ordered_json = nlohmann::ordered_json;

// ============================================================
// Embedding operations
// ============================================================

std::vector<double> embed(const EmbeddingTable& table, TokenId token) {
    if (token < 0 || token >= table.vocab_size)
        fail(ErrorKind::InvalidArgument,
             "token id " + std::to_string(token) + " outside vocabulary of " +
                 std::to_string(table.vocab_size));
    const double* r = table.row(token);
    return std::vector<double>(r, r + table.dim);
}

std::vector<double> soft_embed(const SparseWeights& weights, const EmbeddingTable& table) {
    if (weights.entries.empty())
        fail(ErrorKind::InvalidArgument, "soft_embed given empty weights");
    double sum = 0.0;
    for (const auto& [id, w] : weights.entries) {
        if (id < 0 || id >= table.vocab_size)
            fail(ErrorKind::InvalidArgument,
                 "weight id " + std::to_string(id) + " outside vocabulary");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        fail(ErrorKind::InvalidArgument, "soft_embed weights do not sum to 1");

    std::vector<double> out(static_cast<size_t>(table.dim), 0.0);
    for (const auto& [id, w] : weights.entries) {
        const double* r = table.row(id);
        for (int i = 0; i < table.dim; ++i) out[static_cast<size_t>(i)] += w * r[i];
    }
    return out;
}

EmbeddingTable one_hot_table(int vocab_size) {
    EmbeddingTable t;
    t.vocab_size = vocab_size;
    t.dim = vocab_size;
    t.data.assign(static_cast<size_t>(vocab_size) * vocab_size, 0.0);
    for (int v = 0; v < vocab_size; ++v)
        t.data[static_cast<size_t>(v) * vocab_size + v] = 1.0;
    return t;
}

// ============================================================
// Spec JSON
// ============================================================

namespace {

[[noreturn]] void bad_spec(const std::string& why) {
    fail(ErrorKind::Parse, "model spec: " + why);
}

ToyParams toy_params_from_json(const ordered_json& j) {
    ToyParams p;
    p.seed = j.value("seed", std::uint64_t{0});
    p.layers = j.value("layers", 1);
    p.tied = j.value("tied", true);
    p.max_positions = j.value("max_positions", 2048);
    return p;
}

void toy_params_to_json(const ToyParams& p, ordered_json& j) {
    j["seed"] = p.seed;
    j["layers"] = p.layers;
    j["tied"] = p.tied;
    j["max_positions"] = p.max_positions;
}

std::shared_ptr<const std::vector<LogitVector>> rows_from_json(const ordered_json& j,
                                                               int vocab_size) {
    auto rows = std::make_shared<std::vector<LogitVector>>();
    for (const auto& row : j) {
        LogitVector r = row.get<LogitVector>();
        if (r.size() != static_cast<size_t>(vocab_size))
            bad_spec("scripted row of length " + std::to_string(r.size()) +
                     " does not match vocab_size " + std::to_string(vocab_size));
        prob::validate_logits(r);
        rows->push_back(std::move(r));
    }
    return rows;
}

ModelSpec spec_from_json_obj(const ordered_json& j) {
    if (!j.is_object() || !j.contains("kind")) bad_spec("missing \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();

    ModelSpec spec;
    if (kind == "scripted") {
        if (j.contains("path")) return load_scripted_file(j.at("path").get<std::string>());
        spec.kind = ProviderKind::Scripted;
        spec.vocab_size = j.at("vocab_size").get<int>();
        spec.eot_token_id = j.at("eot_token_id").get<TokenId>();
        spec.dim = spec.vocab_size; // scripted models embed one-hot
        if (!j.contains("rows")) bad_spec("scripted spec needs \"rows\" or \"path\"");
        spec.rows = rows_from_json(j.at("rows"), spec.vocab_size);
    } else if (kind == "toy") {
        spec.kind = ProviderKind::Toy;
        spec.vocab_size = j.at("vocab_size").get<int>();
        spec.dim = j.at("dim").get<int>();
        spec.eot_token_id = j.at("eot_token_id").get<TokenId>();
        spec.toy = toy_params_from_json(j);
    } else if (kind == "remote") {
        spec.kind = ProviderKind::Remote;
        spec.vocab_size = j.at("vocab_size").get<int>();
        spec.dim = j.at("dim").get<int>();
        spec.eot_token_id = j.at("eot_token_id").get<TokenId>();
        if (!j.contains("command") || !j.at("command").is_array() || j.at("command").empty())
            bad_spec("remote spec needs a non-empty \"command\" array");
        for (const auto& a : j.at("command"))
            spec.remote_command.push_back(a.get<std::string>());
        const ordered_json emb = j.value("embedding", ordered_json{{"kind", "one_hot"}});
        const std::string ek = emb.value("kind", "one_hot");
        if (ek == "one_hot") {
            spec.remote_embedding.kind = RemoteEmbedding::Kind::OneHot;
        } else if (ek == "toy") {
            spec.remote_embedding.kind = RemoteEmbedding::Kind::Toy;
            spec.remote_embedding.toy = toy_params_from_json(emb);
        } else if (ek == "rows") {
            spec.remote_embedding.kind = RemoteEmbedding::Kind::Rows;
            for (const auto& row : emb.at("rows"))
                spec.remote_embedding.rows.push_back(row.get<std::vector<double>>());
        } else {
            bad_spec("unknown embedding kind \"" + ek + "\"");
        }
    } else {
        bad_spec("unknown kind \"" + kind + "\"");
    }

    if (spec.vocab_size < 1) bad_spec("vocab_size must be positive");
    if (spec.eot_token_id < 0 || spec.eot_token_id >= spec.vocab_size)
        bad_spec("eot_token_id outside vocabulary");
    return spec;
}

} // namespace

bool operator==(const ModelSpec& a, const ModelSpec& b) {
    if (a.kind != b.kind || a.vocab_size != b.vocab_size || a.dim != b.dim ||
        a.eot_token_id != b.eot_token_id)
        return false;
    switch (a.kind) {
    case ProviderKind::Scripted: {
        if (a.script_path != b.script_path) return false;
        const bool ha = static_cast<bool>(a.rows), hb = static_cast<bool>(b.rows);
        return ha == hb && (!ha || *a.rows == *b.rows);
    }
    case ProviderKind::Toy:
        return a.toy.seed == b.toy.seed && a.toy.layers == b.toy.layers &&
               a.toy.tied == b.toy.tied && a.toy.max_positions == b.toy.max_positions;
    case ProviderKind::Remote:
        return a.remote_command == b.remote_command &&
               a.remote_embedding.kind == b.remote_embedding.kind &&
               a.remote_embedding.toy.seed == b.remote_embedding.toy.seed &&
               a.remote_embedding.toy.layers == b.remote_embedding.toy.layers &&
               a.remote_embedding.toy.tied == b.remote_embedding.toy.tied &&
               a.remote_embedding.toy.max_positions == b.remote_embedding.toy.max_positions &&
               a.remote_embedding.rows == b.remote_embedding.rows;
    }
    return false;
}

ModelSpec model_spec_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const ordered_json::exception& e) {
        bad_spec(std::string("invalid JSON: ") + e.what());
    }
    return spec_from_json_obj(j);
}

std::string model_spec_to_json(const ModelSpec& spec) {
    ordered_json j;
    switch (spec.kind) {
    case ProviderKind::Scripted:
        j["kind"] = "scripted";
        if (!spec.script_path.empty()) {
            j["path"] = spec.script_path;
        } else {
            j["vocab_size"] = spec.vocab_size;
            j["eot_token_id"] = spec.eot_token_id;
            j["rows"] = *spec.rows;
        }
        break;
    case ProviderKind::Toy:
        j["kind"] = "toy";
        j["vocab_size"] = spec.vocab_size;
        j["dim"] = spec.dim;
        j["eot_token_id"] = spec.eot_token_id;
        toy_params_to_json(spec.toy, j);
        break;
    case ProviderKind::Remote:
        j["kind"] = "remote";
        j["vocab_size"] = spec.vocab_size;
        j["dim"] = spec.dim;
        j["eot_token_id"] = spec.eot_token_id;
        j["command"] = spec.remote_command;
        switch (spec.remote_embedding.kind) {
        case RemoteEmbedding::Kind::OneHot:
            j["embedding"] = ordered_json{{"kind", "one_hot"}};
            break;
        case RemoteEmbedding::Kind::Toy: {
            ordered_json emb;
            emb["kind"] = "toy";
            toy_params_to_json(spec.remote_embedding.toy, emb);
            j["embedding"] = emb;
            break;
        }
        case RemoteEmbedding::Kind::Rows:
            j["embedding"] = ordered_json{{"kind", "rows"}, {"rows", spec.remote_embedding.rows}};
            break;
        }
        break;
    }
    return j.dump();
}

ModelSpec load_scripted_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open scripted model file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const ordered_json::exception& e) {
        fail(ErrorKind::Parse, "scripted model file " + path + ": " + e.what());
    }
    if (!j.contains("vocab_size") || !j.contains("eot") || !j.contains("rows"))
        fail(ErrorKind::Parse,
             "scripted model file " + path + " needs vocab_size, eot and rows");

    ModelSpec spec;
    spec.kind = ProviderKind::Scripted;
    spec.vocab_size = j.at("vocab_size").get<int>();
    spec.eot_token_id = j.at("eot").get<TokenId>();
    spec.dim = spec.vocab_size;
    spec.rows = rows_from_json(j.at("rows"), spec.vocab_size);
    spec.script_path = path;
    if (spec.eot_token_id < 0 || spec.eot_token_id >= spec.vocab_size)
        fail(ErrorKind::Parse, "scripted model file " + path + ": eot outside vocabulary");
    return spec;
}

// ============================================================
// Scripted provider
// ============================================================

namespace {

// Replays stored logit rows in order; the fed elements are deliberately
// ignored so tests can script exact distribution sequences.
class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(std::shared_ptr<const std::vector<LogitVector>> rows)
        : rows_(std::move(rows)) {}

    void reset(const std::vector<TokenId>&) override { cursor_ = 0; }

    LogitVector next(const InputElement*) override {
        if (cursor_ >= rows_->size())
            fail(ErrorKind::Provider,
                 "scripted model exhausted after " + std::to_string(rows_->size()) + " steps");
        return (*rows_)[cursor_++];
    }

private:
    std::shared_ptr<const std::vector<LogitVector>> rows_;
    size_t cursor_ = 0;
};

EmbeddingTable remote_table(const ModelSpec& spec) {
    const RemoteEmbedding& emb = spec.remote_embedding;
    switch (emb.kind) {
    case RemoteEmbedding::Kind::OneHot:
        if (spec.dim != spec.vocab_size)
            fail(ErrorKind::InvalidArgument,
                 "one_hot embedding requires dim == vocab_size");
        return one_hot_table(spec.vocab_size);
    case RemoteEmbedding::Kind::Toy: {
        auto w = toy::build_weights(emb.toy.seed, spec.vocab_size, spec.dim, emb.toy.layers,
                                    emb.toy.tied, emb.toy.max_positions);
        return toy::table_from_weights(*w);
    }
    case RemoteEmbedding::Kind::Rows: {
        EmbeddingTable t;
        t.vocab_size = spec.vocab_size;
        t.dim = spec.dim;
        if (emb.rows.size() != static_cast<size_t>(spec.vocab_size))
            fail(ErrorKind::InvalidArgument, "embedding rows do not cover the vocabulary");
        for (const auto& row : emb.rows) {
            if (row.size() != static_cast<size_t>(spec.dim))
                fail(ErrorKind::InvalidArgument, "embedding row dimension mismatch");
            t.data.insert(t.data.end(), row.begin(), row.end());
        }
        return t;
    }
    }
    fail(ErrorKind::Internal, "unreachable embedding kind");
}

} // namespace

// ============================================================
// Model and session
// ============================================================

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
    switch (spec_.kind) {
    case ProviderKind::Scripted:
        if (!spec_.rows || spec_.rows->empty())
            fail(ErrorKind::InvalidArgument, "scripted model has no rows");
        table_ = one_hot_table(spec_.vocab_size);
        break;
    case ProviderKind::Toy: {
        auto w = toy::build_weights(spec_.toy.seed, spec_.vocab_size, spec_.dim,
                                    spec_.toy.layers, spec_.toy.tied, spec_.toy.max_positions);
        table_ = toy::table_from_weights(*w);
        toy_weights_ = w;
        break;
    }
    case ProviderKind::Remote:
        table_ = remote_table(spec_);
        break;
    }
}

namespace {

std::unique_ptr<Provider> make_provider(const Model& model) {
    const ModelSpec& spec = model.spec();
    switch (spec.kind) {
    case ProviderKind::Scripted:
        return std::make_unique<ScriptedProvider>(spec.rows);
    case ProviderKind::Toy: {
        auto w = std::static_pointer_cast<const toy::Weights>(model.toy_weights());
        return std::make_unique<toy::ToyProvider>(std::move(w), model.table());
    }
    case ProviderKind::Remote:
        return remote::make_remote_provider(spec);
    }
    fail(ErrorKind::Internal, "unreachable provider kind");
}

void validate_prompt(const std::vector<TokenId>& prompt, int vocab_size) {
    for (const TokenId t : prompt) {
        if (t < 0 || t >= vocab_size)
            fail(ErrorKind::InvalidArgument,
                 "prompt token " + std::to_string(t) + " outside vocabulary");
    }
}

} // namespace

Session::Session(std::shared_ptr<const Model> model, const std::vector<TokenId>& prompt)
    : model_(std::move(model)), provider_(make_provider(*model_)) {
    validate_prompt(prompt, model_->vocab_size());
    provider_->reset(prompt);
    context_length_ = prompt.size();
}

void Session::reset(const std::vector<TokenId>& prompt) {
    validate_prompt(prompt, model_->vocab_size());
    provider_->reset(prompt);
    context_length_ = prompt.size();
    awaiting_first_step_ = true;
}

LogitVector Session::next_logits(const std::optional<InputElement>& element) {
    if (!element) {
        if (!awaiting_first_step_)
            fail(ErrorKind::InvalidArgument,
                 "an input element is required after the first step");
        awaiting_first_step_ = false;
        return provider_->next(nullptr);
    }

    if (element->is_discrete()) {
        if (element->token >= model_->vocab_size())
            fail(ErrorKind::InvalidArgument,
                 "token id " + std::to_string(element->token) + " outside vocabulary");
    } else {
        if (element->vec.size() != static_cast<size_t>(model_->dim()))
            fail(ErrorKind::InvalidArgument,
                 "soft vector dimension " + std::to_string(element->vec.size()) +
                     " does not match model dim " + std::to_string(model_->dim()));
        for (const double v : element->vec)
            if (!std::isfinite(v))
                fail(ErrorKind::InvalidArgument, "soft vector entry is not finite");
    }

    awaiting_first_step_ = false;
    ++context_length_;
    return provider_->next(&*element);
}

Session open_session(std::shared_ptr<const Model> model, const std::vector<TokenId>& prompt) {
    return Session(std::move(model), prompt);
}

} // namespace tr
