// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#include "entcal/remote_provider.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <json.hpp>

#include "entcal/error.hpp"
#include "entcal/util.hpp"
#include "entcal/wire.hpp"

namespace entcal {

using nlohmann::json;

namespace {

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::kProviderIo, what);
}

[[noreturn]] void protocol_error(const std::string& what) {
  throw Error(ErrorCode::kProtocol, what);
}

class FdTransport final : public LineTransport {
 public:
  FdTransport(int read_fd, int write_fd, pid_t child)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}

  ~FdTransport() override {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (child_ > 0) {
      int status = 0;
      // Closing stdin asks the child to exit; reap it or kill it.
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(child_, &status, WNOHANG) == child_) return;
        ::usleep(10000);
      }
      ::kill(child_, SIGTERM);
      ::waitpid(child_, &status, 0);
    }
  }

  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void write_line(const std::string& line) override {
    std::string buf = line + "\n";
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
      ssize_t n = send_or_write(write_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        io_error(std::string("write failed: ") + std::strerror(errno));
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) io_error("timed out waiting for reply");
      pollfd pfd{read_fd_, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        io_error(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) io_error("timed out waiting for reply");
      char chunk[65536];
      ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        io_error(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) io_error("connection closed by server");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  static ssize_t send_or_write(int fd, const char* p, std::size_t n) {
    ssize_t r = ::send(fd, p, n, MSG_NOSIGNAL);
    if (r < 0 && errno == ENOTSOCK) r = ::write(fd, p, n);
    return r;
  }

  int read_fd_;
  int write_fd_;
  pid_t child_;
  std::string buffer_;
};

std::unique_ptr<LineTransport> open_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    io_error("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) io_error("cannot connect to " + host + ":" + port);
  return std::make_unique<FdTransport>(fd, fd, -1);
}

std::unique_ptr<LineTransport> open_child(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0) {
    io_error(std::string("pipe failed: ") + std::strerror(errno));
  }
  pid_t pid = ::fork();
  if (pid < 0) io_error(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdTransport>(from_child[0], to_child[1], pid);
}

}  // namespace

std::unique_ptr<LineTransport> open_transport(const std::string& endpoint) {
  if (endpoint.rfind("tcp:", 0) == 0) {
    std::string rest = endpoint.substr(4);
    auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kConfig, "tcp endpoint must be tcp:HOST:PORT");
    }
    return open_tcp(rest.substr(0, colon), rest.substr(colon + 1));
  }
  if (endpoint.rfind("cmd:", 0) == 0) return open_child(endpoint.substr(4));
  throw Error(ErrorCode::kConfig,
              "unknown endpoint '" + endpoint + "' (expected tcp:HOST:PORT or cmd:COMMAND)");
}

void normalize_remote_logprobs(std::vector<double>& logprobs) {
  const double floor = std::log(kRemoteFloor);
  double mass = 0.0;
  for (double& lp : logprobs) {
    if (lp < floor) lp = floor;
    mass += std::exp(lp);
  }
  if (std::abs(mass - 1.0) <= 1e-12) return;
  const double shift = std::log(mass);
  for (double& lp : logprobs) lp -= shift;
}

RemoteProvider::RemoteProvider(std::unique_ptr<LineTransport> transport, RemoteOptions options)
    : transport_(std::move(transport)), options_(options) {
  transport_->write_line(wire::hello_request());
  std::string line = transport_->read_line(options_.handshake_timeout);
  json msg = json::parse(line, nullptr, false);
  if (msg.is_discarded() || !msg.is_object() || msg.value("type", "") != "hello") {
    protocol_error("bad handshake reply: " + line);
  }
  if (msg.value("proto", -1) != wire::kProtocolVersion) {
    protocol_error("protocol version mismatch: server speaks " +
                   std::to_string(msg.value("proto", -1)));
  }
  try {
    info_.vocab_size = msg.at("vocab_size").get<std::size_t>();
    info_.bos = msg.at("bos").get<TokenId>();
    info_.eos = msg.at("eos").get<TokenId>();
    info_.unk = msg.at("unk").get<TokenId>();
  } catch (const json::exception& e) {
    protocol_error(std::string("incomplete handshake: ") + e.what());
  }
  if (info_.vocab_size == 0) protocol_error("server advertises an empty vocabulary");
  std::string ident = "remote/" + std::to_string(info_.vocab_size) + "/" +
                      std::to_string(info_.bos) + "/" + std::to_string(info_.eos) + "/" +
                      std::to_string(info_.unk);
  if (msg.contains("model") && msg["model"].is_string()) ident += "/" + msg["model"].get<std::string>();
  fingerprint_ = hash_hex(fnv1a(ident));
}

std::string RemoteProvider::round_trip(const std::string& request) const {
  transport_->write_line(request);
  last_reply_ = transport_->read_line(options_.request_timeout);
  return last_reply_;
}

namespace {

json parse_reply(const std::string& line, std::int64_t id, const std::string& expect_type) {
  json msg = json::parse(line, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) protocol_error("malformed reply: " + line.substr(0, 200));
  if (!msg.contains("id") || !msg["id"].is_number_integer() || msg["id"].get<std::int64_t>() != id) {
    protocol_error("reply id does not match request " + std::to_string(id));
  }
  const std::string type = msg.value("type", "");
  if (type == "error") protocol_error("server error: " + msg.value("message", std::string{}));
  if (type != expect_type) protocol_error("expected '" + expect_type + "' reply, got '" + type + "'");
  return msg;
}

}  // namespace

ConditionalDistribution RemoteProvider::next_distribution(std::span<const TokenId> context) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::int64_t id = next_id_++;
  json msg = parse_reply(round_trip(wire::next_logprobs_request(id, context)), id,
                         "logprobs");
  const json& values = msg["values"];
  if (!values.is_array()) protocol_error("logprobs reply without values array");
  if (values.size() != info_.vocab_size) {
    protocol_error("logprobs length " + std::to_string(values.size()) +
                   " does not match vocab_size " + std::to_string(info_.vocab_size));
  }
  ConditionalDistribution d;
  d.step = context.size();
  d.logprobs.reserve(values.size());
  for (const auto& v : values) {
    if (!v.is_number()) protocol_error("non-numeric logprob");
    double x = v.get<double>();
    if (!std::isfinite(x)) protocol_error("non-finite logprob");
    d.logprobs.push_back(x);
  }
  normalize_remote_logprobs(d.logprobs);
  return d;
}

TokenSequence RemoteProvider::encode(std::string_view text) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::int64_t id = next_id_++;
  json msg = parse_reply(round_trip(wire::encode_request(id, text)), id, "ids");
  TokenSequence seq;
  try {
    seq.ids = msg.at("values").get<std::vector<TokenId>>();
  } catch (const json::exception& e) {
    protocol_error(std::string("bad ids reply: ") + e.what());
  }
  for (TokenId t : seq.ids) {
    if (t < 0 || static_cast<std::size_t>(t) >= info_.vocab_size) protocol_error("encoded id out of range");
  }
  return seq;
}

std::string RemoteProvider::decode(std::span<const TokenId> ids) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::int64_t id = next_id_++;
  json msg = parse_reply(round_trip(wire::decode_request(id, ids)), id, "text");
  try {
    return msg.at("value").get<std::string>();
  } catch (const json::exception& e) {
    protocol_error(std::string("bad text reply: ") + e.what());
  }
}

std::string RemoteProvider::last_reply() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_reply_;
}

std::unique_ptr<RemoteProvider> connect_remote_provider(const std::string& endpoint,
                                                        RemoteOptions options) {
  return std::make_unique<RemoteProvider>(open_transport(endpoint), options);
}

}  // namespace entcal
