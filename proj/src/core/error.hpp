// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#ifndef THINKROUTER_CORE_ERROR_HPP
#define THINKROUTER_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tr {

// Coarse failure classes; the C boundary maps these 1:1 onto tr_status codes
// and the CLI folds them into its exit codes.
enum class ErrorKind {
    InvalidArgument, // caller broke a precondition (bad config, bad ids, bad shapes)
    Parse,           // malformed JSON / CSV / protocol message
    Io,              // file or pipe failure
    Provider,        // model provider misbehaved (exhausted script, protocol error)
    Validation,      // well-formed input violating a documented invariant
    Internal,        // broken internal assumption; always a bug
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace tr

#endif
