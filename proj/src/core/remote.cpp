// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/remote.hpp"

#include <cmath>
#include <csignal>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

#include "core/error.hpp"

namespace tr::remote {
namespace {

using ordered_json = nlohmann::ordered_json;

// ============================================================
// Child process plumbing
// ============================================================

// A peer that vanishes mid-conversation must surface as a Provider error,
// not as a fatal SIGPIPE; writes then fail with EPIPE instead.
void ignore_sigpipe_once() {
    static const bool installed = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)installed;
}

class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv) {
        if (argv.empty()) fail(ErrorKind::InvalidArgument, "remote command is empty");
        ignore_sigpipe_once();

        int to_child[2];
        int from_child[2];
        if (::pipe(to_child) != 0) fail(ErrorKind::Provider, "pipe() failed");
        if (::pipe(from_child) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            fail(ErrorKind::Provider, "pipe() failed");
        }

        pid_ = ::fork();
        if (pid_ < 0) fail(ErrorKind::Provider, "fork() failed");
        if (pid_ == 0) {
            // Child: wire the pipes to stdio and exec. Only async-signal-safe
            // calls are allowed here.
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            std::vector<char*> args;
            args.reserve(argv.size() + 1);
            for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
            args.push_back(nullptr);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }

        ::close(to_child[0]);
        ::close(from_child[1]);
        to_child_ = ::fdopen(to_child[1], "w");
        from_child_ = ::fdopen(from_child[0], "r");
        if (to_child_ == nullptr || from_child_ == nullptr)
            fail(ErrorKind::Provider, "fdopen() failed for remote model pipes");
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        if (to_child_ != nullptr) std::fclose(to_child_);
        if (from_child_ != nullptr) std::fclose(from_child_);
        if (pid_ > 0) ::waitpid(pid_, nullptr, 0);
    }

    void send_line(const std::string& line) {
        if (std::fputs(line.c_str(), to_child_) == EOF || std::fputc('\n', to_child_) == EOF ||
            std::fflush(to_child_) != 0)
            fail(ErrorKind::Provider, "remote model is not accepting input");
    }

    std::string recv_line() {
        std::string line;
        int c;
        while ((c = std::fgetc(from_child_)) != EOF) {
            if (c == '\n') return line;
            line.push_back(static_cast<char>(c));
        }
        fail(ErrorKind::Provider, "remote model closed the connection");
    }

private:
    pid_t pid_ = -1;
    FILE* to_child_ = nullptr;
    FILE* from_child_ = nullptr;
};

// ============================================================
// Client provider
// ============================================================

class RemoteProvider final : public Provider {
public:
    explicit RemoteProvider(const ModelSpec& spec)
        : vocab_size_(spec.vocab_size),
          dim_(spec.dim),
          eot_(spec.eot_token_id),
          child_(spec.remote_command) {
        const ordered_json hello = request(ordered_json{{"op", "hello"}}, "hello");
        const int vocab = json_field<int>(hello, "vocab_size");
        const int dim = json_field<int>(hello, "dim");
        const TokenId eot = json_field<TokenId>(hello, "eot");
        if (vocab != vocab_size_ || dim != dim_ || eot != eot_)
            fail(ErrorKind::Provider,
                 "remote hello metadata (vocab_size=" + std::to_string(vocab) +
                     ", dim=" + std::to_string(dim) + ", eot=" + std::to_string(eot) +
                     ") does not match the configured model");
        tolerance_ = json_field<double>(hello, "tolerance");
        if (!(tolerance_ >= 0.0) || !std::isfinite(tolerance_))
            fail(ErrorKind::Provider, "remote hello declared an invalid tolerance");
    }

    void reset(const std::vector<TokenId>& prompt) override {
        if (prompt.empty())
            fail(ErrorKind::Provider,
                 "the wire protocol has no request for logits over an empty context; "
                 "remote sessions need a non-empty prompt");
        // Keep the last prompt token back: the first no-element next() call
        // asks for the distribution after the full prompt, and the only way
        // to obtain logits on the wire is to feed an element.
        held_back_ = prompt.back();
        ordered_json msg;
        msg["op"] = "reset";
        msg["prompt"] = std::vector<TokenId>(prompt.begin(), prompt.end() - 1);
        request(msg, "ok");
        first_pending_ = true;
    }

    LogitVector next(const InputElement* element) override {
        if (element == nullptr) {
            if (!first_pending_)
                fail(ErrorKind::Provider, "no-element logits are only defined right after reset");
            first_pending_ = false;
            return step_token(held_back_);
        }
        if (first_pending_) {
            // The deferred prompt tail was never flushed (the caller went
            // straight to feeding elements); catch the peer up first.
            first_pending_ = false;
            (void)step_token(held_back_);
        }
        return element->is_discrete() ? step_token(element->token) : step_soft(element->vec);
    }

    double declared_tolerance() const override { return tolerance_; }

private:
    template <typename T>
    static T json_field(const ordered_json& j, const char* key) {
        const auto it = j.find(key);
        if (it == j.end())
            fail(ErrorKind::Provider, std::string("remote reply is missing \"") + key + "\"");
        try {
            return it->get<T>();
        } catch (const ordered_json::exception&) {
            fail(ErrorKind::Provider, std::string("remote reply field \"") + key + "\" has the wrong type");
        }
    }

    ordered_json request(const ordered_json& msg, const char* expected_op) {
        child_.send_line(msg.dump());
        const std::string line = child_.recv_line();
        ordered_json reply;
        try {
            reply = ordered_json::parse(line);
        } catch (const ordered_json::exception&) {
            fail(ErrorKind::Provider, "remote model sent a line that is not valid JSON");
        }
        if (!reply.is_object()) fail(ErrorKind::Provider, "remote model sent a non-object message");
        const std::string op = json_field<std::string>(reply, "op");
        if (op == "error")
            fail(ErrorKind::Provider,
                 "remote model error: " + reply.value("msg", std::string("(no message)")));
        if (op != expected_op)
            fail(ErrorKind::Provider,
                 "remote model replied \"" + op + "\" where \"" + expected_op + "\" was expected");
        return reply;
    }

    LogitVector take_logits(const ordered_json& reply) {
        LogitVector values = json_field<LogitVector>(reply, "values");
        if (static_cast<int>(values.size()) != vocab_size_)
            fail(ErrorKind::Provider,
                 "remote logits carry " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(vocab_size_));
        for (double v : values)
            if (!std::isfinite(v)) fail(ErrorKind::Provider, "remote logits contain non-finite values");
        return values;
    }

    LogitVector step_token(TokenId id) {
        ordered_json msg;
        msg["op"] = "step";
        msg["kind"] = "token";
        msg["id"] = id;
        return take_logits(request(msg, "logits"));
    }

    LogitVector step_soft(const std::vector<double>& vec) {
        ordered_json msg;
        msg["op"] = "step";
        msg["kind"] = "soft";
        msg["vec"] = vec;
        return take_logits(request(msg, "logits"));
    }

    int vocab_size_;
    int dim_;
    TokenId eot_;
    ChildProcess child_;
    double tolerance_ = 0.0;
    TokenId held_back_ = -1;
    bool first_pending_ = false;
};

// ============================================================
// Server loop
// ============================================================

ordered_json error_reply(const std::string& msg) {
    ordered_json j;
    j["op"] = "error";
    j["msg"] = msg;
    return j;
}

ordered_json handle_request(const std::string& line, const std::shared_ptr<const Model>& model,
                            std::optional<Session>& session) {
    ordered_json msg;
    try {
        msg = ordered_json::parse(line);
    } catch (const ordered_json::exception& e) {
        fail(ErrorKind::Parse, std::string("request is not valid JSON: ") + e.what());
    }
    if (!msg.is_object() || !msg.contains("op") || !msg.at("op").is_string())
        fail(ErrorKind::Parse, "request must be an object with a string \"op\"");
    const std::string op = msg.at("op").get<std::string>();

    if (op == "hello") {
        ordered_json reply;
        reply["op"] = "hello";
        reply["vocab_size"] = model->vocab_size();
        reply["dim"] = model->dim();
        reply["eot"] = model->eot_token_id();
        // Logits are produced by the same arithmetic on both ends and floats
        // round-trip exactly through the wire encoding, so this reference
        // server is bit-reproducible.
        reply["tolerance"] = 0.0;
        return reply;
    }
    if (op == "reset") {
        if (!msg.contains("prompt")) fail(ErrorKind::Parse, "reset needs a \"prompt\" array");
        std::vector<TokenId> prompt;
        try {
            prompt = msg.at("prompt").get<std::vector<TokenId>>();
        } catch (const ordered_json::exception&) {
            fail(ErrorKind::Parse, "reset \"prompt\" must be an array of token ids");
        }
        session.emplace(model, prompt);
        ordered_json reply;
        reply["op"] = "ok";
        return reply;
    }
    if (op == "step") {
        if (!session.has_value()) fail(ErrorKind::Provider, "step before reset");
        const std::string kind = msg.value("kind", std::string());
        InputElement element;
        if (kind == "token") {
            if (!msg.contains("id")) fail(ErrorKind::Parse, "token step needs \"id\"");
            element = InputElement::discrete(msg.at("id").get<TokenId>());
        } else if (kind == "soft") {
            if (!msg.contains("vec")) fail(ErrorKind::Parse, "soft step needs \"vec\"");
            std::vector<double> vec;
            try {
                vec = msg.at("vec").get<std::vector<double>>();
            } catch (const ordered_json::exception&) {
                fail(ErrorKind::Parse, "soft step \"vec\" must be an array of numbers");
            }
            element = InputElement::soft(std::move(vec));
        } else {
            fail(ErrorKind::Parse, "step \"kind\" must be \"token\" or \"soft\"");
        }
        ordered_json reply;
        reply["op"] = "logits";
        reply["values"] = session->next_logits(element);
        return reply;
    }
    fail(ErrorKind::Parse, "unknown op \"" + op + "\"");
}

} // namespace

std::unique_ptr<Provider> make_remote_provider(const ModelSpec& spec) {
    return std::make_unique<RemoteProvider>(spec);
}

void serve(std::istream& in, std::ostream& out, std::shared_ptr<const Model> model) {
    std::optional<Session> session;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json reply;
        try {
            reply = handle_request(line, model, session);
        } catch (const Error& e) {
            reply = error_reply(e.what());
        } catch (const std::exception& e) {
            reply = error_reply(std::string("internal: ") + e.what());
        }
        out << reply.dump() << '\n' << std::flush;
    }
}

} // namespace tr::remote
