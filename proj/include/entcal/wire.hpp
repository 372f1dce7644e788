// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Newline-delimited JSON logits protocol, version 1.
//
//   -> {"type":"hello","proto":1}
//   <- {"type":"hello","proto":1,"vocab_size":V,"bos":b,"eos":e,"unk":u}
//   -> {"id":n,"type":"next_logprobs","context":[ids]}
//   <- {"id":n,"type":"logprobs","values":[V doubles]}
//   -> {"id":n,"type":"encode","text":s}     <- {"id":n,"type":"ids","values":[...]}
//   -> {"id":n,"type":"decode","ids":[...]}  <- {"id":n,"type":"text","value":s}
//   <- {"id":n,"type":"error","message":s}
//
// Doubles are written with 17 significant digits so they round-trip.

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "entcal/provider.hpp"

namespace entcal::wire {

inline constexpr int kProtocolVersion = 1;

std::string hello_request();
std::string hello_reply(const VocabInfo& info);
std::string next_logprobs_request(std::int64_t id, std::span<const TokenId> context);
std::string encode_request(std::int64_t id, std::string_view text);
std::string decode_request(std::int64_t id, std::span<const TokenId> ids);
std::string logprobs_reply(std::int64_t id, std::span<const double> values);
std::string ids_reply(std::int64_t id, std::span<const TokenId> ids);
std::string text_reply(std::int64_t id, std::string_view text);
std::string error_reply(std::int64_t id, std::string_view message);

// Answers one request line on behalf of `provider`. Malformed requests get an
// error reply carrying the request id when one can be recovered.
std::string handle_request(const ModelProvider& provider, std::string_view line);

// Serves `provider` until `in` closes.
void serve_stream(const ModelProvider& provider, std::istream& in, std::ostream& out);

}  // namespace entcal::wire
