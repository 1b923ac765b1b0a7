// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Remote model transport: newline-delimited JSON over a byte stream.
//
//   -> {"op":"hello"}                            <- {"op":"hello","vocab_size":N,"dim":D,"eot":ID,"tolerance":T}
//   -> {"op":"reset","prompt":[ids...]}          <- {"op":"ok"}
//   -> {"op":"step","kind":"token","id":v}       <- {"op":"logits","values":[N floats]}
//   -> {"op":"step","kind":"soft","vec":[D floats]}
//
// One message per line; failures answered as {"op":"error","msg":...}.
// Soft inputs travel as full d-dimensional vectors, so the peer never needs
// to know how the client built them.
#ifndef TR_CORE_REMOTE_HPP
#define TR_CORE_REMOTE_HPP

#include <iosfwd>
#include <memory>

#include "core/model.hpp"

namespace tr::remote {

// Client side: spawns `spec.remote_command` as a child process, performs the
// hello handshake (served metadata must match the configured ModelSpec), and
// adapts the wire protocol to the Provider interface. One child per provider.
std::unique_ptr<Provider> make_remote_provider(const ModelSpec& spec);

// Server side: answers the protocol on (in, out) for `model` until EOF.
// Bad requests are answered with an error message and the loop keeps
// serving; only stream EOF terminates it.
void serve(std::istream& in, std::ostream& out, std::shared_ptr<const Model> model);

} // namespace tr::remote

#endif
