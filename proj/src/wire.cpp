// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/wire.hpp"

#include <json.hpp>

#include "entcal/error.hpp"
#include "entcal/util.hpp"

namespace entcal::wire {

using nlohmann::json;

namespace {

std::string id_list(std::span<const TokenId> ids) {
  std::string out = "[";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(ids[i]);
  }
  out.push_back(']');
  return out;
}

std::string quoted(std::string_view s) { return json(std::string(s)).dump(); }

}  // namespace

std::string hello_request() { return R"({"type":"hello","proto":1})"; }

std::string hello_reply(const VocabInfo& info) {
  return R"({"type":"hello","proto":1,"vocab_size":)" + std::to_string(info.vocab_size) +
         R"(,"bos":)" + std::to_string(info.bos) + R"(,"eos":)" + std::to_string(info.eos) +
         R"(,"unk":)" + std::to_string(info.unk) + "}";
}

std::string next_logprobs_request(std::int64_t id, std::span<const TokenId> context) {
  return R"({"id":)" + std::to_string(id) + R"(,"type":"next_logprobs","context":)" +
         id_list(context) + "}";
}

std::string encode_request(std::int64_t id, std::string_view text) {
  return R"({"id":)" + std::to_string(id) + R"(,"type":"encode","text":)" + quoted(text) + "}";
}

std::string decode_request(std::int64_t id, std::span<const TokenId> ids) {
  return R"({"id":)" + std::to_string(id) + R"(,"type":"decode","ids":)" + id_list(ids) + "}";
}

std::string logprobs_reply(std::int64_t id, std::span<const double> values) {
  std::string out = R"({"id":)" + std::to_string(id) + R"(,"type":"logprobs","values":[)";
  out.reserve(out.size() + values.size() * 24);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += format_roundtrip(values[i]);
  }
  out += "]}";
  return out;
}

std::string ids_reply(std::int64_t id, std::span<const TokenId> ids) {
  return R"({"id":)" + std::to_string(id) + R"(,"type":"ids","values":)" + id_list(ids) + "}";
}

std::string text_reply(std::int64_t id, std::string_view text) {
  return R"({"id":)" + std::to_string(id) + R"(,"type":"text","value":)" + quoted(text) + "}";
}

std::string error_reply(std::int64_t id, std::string_view message) {
  return R"({"id":)" + std::to_string(id) + R"(,"type":"error","message":)" + quoted(message) +
         "}";
}

std::string handle_request(const ModelProvider& provider, std::string_view line) {
  json msg = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (msg.is_discarded() || !msg.is_object()) return error_reply(-1, "malformed message");
  const std::int64_t id =
      msg.contains("id") && msg["id"].is_number_integer() ? msg["id"].get<std::int64_t>() : -1;
  const std::string type = msg.value("type", std::string{});
  try {
    if (type == "hello") {
      if (msg.value("proto", 0) != kProtocolVersion) {
        return error_reply(id, "unsupported protocol version");
      }
      return hello_reply(provider.vocab_info());
    }
    if (type == "next_logprobs") {
      auto ctx = msg.at("context").get<std::vector<TokenId>>();
      auto dist = provider.next_distribution(ctx);
      return logprobs_reply(id, dist.logprobs);
    }
    if (type == "encode") {
      auto seq = provider.encode(msg.at("text").get<std::string>());
      return ids_reply(id, seq.ids);
    }
    if (type == "decode") {
      auto ids = msg.at("ids").get<std::vector<TokenId>>();
      return text_reply(id, provider.decode(ids));
    }
    return error_reply(id, "unknown message type '" + type + "'");
  } catch (const std::exception& e) {
    return error_reply(id, e.what());
  }
}

void serve_stream(const ModelProvider& provider, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << handle_request(provider, line) << '\n';
    out.flush();
  }
}

}  // namespace entcal::wire
