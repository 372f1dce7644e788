// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include "entcal/provider.hpp"

namespace entcal {

// Line-oriented byte stream to a protocol server: a TCP socket or the
// standard streams of a child process. Owns its descriptors.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void write_line(const std::string& line) = 0;
  // Throws kProviderIo on timeout or end of stream.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

// "tcp:HOST:PORT" or "cmd:SHELL COMMAND".
std::unique_ptr<LineTransport> open_transport(const std::string& endpoint);

struct RemoteOptions {
  std::chrono::milliseconds handshake_timeout{10000};
  std::chrono::milliseconds request_timeout{60000};
};

// Provider backed by the logits wire protocol. One request in flight per
// connection; calls from several threads are serialized.
class RemoteProvider final : public ModelProvider {
 public:
  RemoteProvider(std::unique_ptr<LineTransport> transport, RemoteOptions options = {});

  VocabInfo vocab_info() const override { return info_; }
  ConditionalDistribution next_distribution(std::span<const TokenId> context) const override;
  TokenSequence encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::string fingerprint() const override { return fingerprint_; }

  // Reply line of the most recent request, unparsed.
  std::string last_reply() const;

 private:
  std::string round_trip(const std::string& request) const;

  std::unique_ptr<LineTransport> transport_;
  RemoteOptions options_;
  VocabInfo info_;
  std::string fingerprint_;
  mutable std::mutex mu_;
  mutable std::int64_t next_id_ = 1;
  mutable std::string last_reply_;
};

std::unique_ptr<RemoteProvider> connect_remote_provider(const std::string& endpoint,
                                                        RemoteOptions options = {});

// Log-probabilities below log(kRemoteFloor) are raised to it before the
// vector is renormalized.
inline constexpr double kRemoteFloor = 1e-12;

// Floors and renormalizes a received logprob vector in place. Vectors whose
// mass is already within 1e-12 of one are left untouched.
void normalize_remote_logprobs(std::vector<double>& logprobs);

}  // namespace entcal
