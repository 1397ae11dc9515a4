// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/wire.hpp"

#include <poll.h>
#include <signal.h>
#include <sodium.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include <json.hpp>

namespace lds {

namespace {

using nlohmann::json;

std::string excerpt(std::string_view line) {
  constexpr std::size_t kMax = 200;
  if (line.size() <= kMax) return std::string(line);
  return std::string(line.substr(0, kMax)) + "...";
}

[[noreturn]] void malformed(std::string_view line, const std::string& why) {
  fail(ErrorKind::kBackend, "malformed wire line (" + why + "): " + excerpt(line));
}

json parse_object(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) malformed(line, "not JSON");
  if (!j.is_object()) malformed(line, "not an object");
  return j;
}

template <typename T>
T field(const json& j, const char* key, std::string_view line) {
  const auto it = j.find(key);
  if (it == j.end()) malformed(line, std::string("missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    malformed(line, std::string("bad type for '") + key + "'");
  }
}

std::uint64_t unsigned_field(const json& j, const char* key, std::string_view line) {
  const auto it = j.find(key);
  if (it == j.end()) malformed(line, std::string("missing '") + key + "'");
  if (!it->is_number_unsigned()) malformed(line, std::string("'") + key + "' is not unsigned");
  return it->get<std::uint64_t>();
}

json array_json(const LatentSet& a) {
  return json{{"rows", a.rows()}, {"cols", a.cols()}, {"f32le", encode_f32(a)}};
}

LatentSet array_from(const json& j, std::string_view line) {
  const auto it = j.find("array");
  if (it == j.end() || !it->is_object()) malformed(line, "missing 'array'");
  const auto rows = unsigned_field(*it, "rows", line);
  const auto cols = unsigned_field(*it, "cols", line);
  if (rows > kMaxBatch) malformed(line, "array exceeds the batch cap");
  if (cols > (std::uint64_t{1} << 20)) malformed(line, "array too wide");
  return decode_f32(field<std::string>(*it, "f32le", line), rows, cols);
}

void ensure_sodium() {
  static const int status = sodium_init();
  require(status >= 0, ErrorKind::kIo, "libsodium failed to initialize");
}

}  // namespace

std::string_view to_string(WireOp op) {
  switch (op) {
    case WireOp::kSamplePrior: return "sample_prior";
    case WireOp::kScore: return "score";
    case WireOp::kTransform: return "transform";
  }
  return "?";
}

std::string encode_f32(const LatentSet& values) {
  ensure_sodium();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(values.size()) * 4);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values(i, j)));
      for (int b = 0; b < 4; ++b) bytes[k++] = static_cast<unsigned char>(bits >> (8 * b));
    }
  }
  const auto variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

LatentSet decode_f32(std::string_view text, std::size_t rows, std::size_t cols) {
  ensure_sodium();
  const std::size_t expected = rows * cols * 4;
  std::vector<unsigned char> bytes(expected + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  const int rc = sodium_base642bin(bytes.data(), bytes.size(), text.data(), text.size(), nullptr,
                                   &len, &end, sodium_base64_VARIANT_ORIGINAL);
  if (rc != 0 || end != text.data() + text.size()) malformed(text, "invalid base64 payload");
  if (len != expected) {
    fail(ErrorKind::kBackend, "wire array length mismatch: header says " + std::to_string(rows) +
                                  "x" + std::to_string(cols) + " floats, payload has " +
                                  std::to_string(len) + " bytes");
  }
  LatentSet out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t k = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[k++]} << (8 * b);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::bit_cast<float>(bits);
    }
  }
  return out;
}

std::string encode_handshake(const Handshake& h) {
  json ops = json::array();
  if (h.can_sample) ops.push_back("sample_prior");
  if (h.can_score) ops.push_back("score");
  if (h.can_transform) ops.push_back("transform");
  return json{{"lds_wire", h.version}, {"dim", h.dim}, {"attributes", h.attributes}, {"ops", ops}}
      .dump();
}

std::string encode_request(const WireRequest& r) {
  json j{{"id", r.id}, {"op", to_string(r.op)}};
  if (r.op == WireOp::kSamplePrior) {
    j["n"] = r.n;
    j["seed"] = r.seed;
  } else {
    j["array"] = array_json(r.array);
  }
  return j.dump();
}

std::string encode_response(const WireResponse& r) {
  json j{{"id", r.id}};
  switch (r.status) {
    case WireStatus::kOk:
      j["status"] = "ok";
      j["array"] = array_json(r.array);
      break;
    case WireStatus::kError:
      j["status"] = "error";
      j["message"] = r.message;
      break;
    case WireStatus::kUnsupported:
      j["status"] = "unsupported";
      j["message"] = r.message;
      break;
  }
  return j.dump();
}

Handshake parse_handshake(std::string_view line) {
  const json j = parse_object(line);
  Handshake h;
  const auto version = j.find("lds_wire");
  if (version == j.end() || !version->is_number_integer()) malformed(line, "not a handshake");
  h.version = version->get<int>();
  if (h.version != kWireVersion) {
    fail(ErrorKind::kIncompatibleBackend, "backend speaks wire protocol v" +
                                              std::to_string(h.version) + ", expected v" +
                                              std::to_string(kWireVersion));
  }
  h.dim = unsigned_field(j, "dim", line);
  h.attributes = field<std::vector<std::string>>(j, "attributes", line);
  const auto ops = field<std::vector<std::string>>(j, "ops", line);
  auto has = [&](const char* op) { return std::find(ops.begin(), ops.end(), op) != ops.end(); };
  h.can_sample = has("sample_prior");
  h.can_score = has("score");
  h.can_transform = has("transform");
  if (h.dim == 0) malformed(line, "dim must be positive");
  return h;
}

WireRequest parse_request(std::string_view line) {
  const json j = parse_object(line);
  WireRequest r;
  r.id = unsigned_field(j, "id", line);
  const auto op = field<std::string>(j, "op", line);
  if (op == "sample_prior") {
    r.op = WireOp::kSamplePrior;
    r.n = unsigned_field(j, "n", line);
    r.seed = unsigned_field(j, "seed", line);
    if (r.n > kMaxBatch) malformed(line, "n exceeds the batch cap");
  } else if (op == "score" || op == "transform") {
    r.op = op == "score" ? WireOp::kScore : WireOp::kTransform;
    r.array = array_from(j, line);
  } else {
    fail(ErrorKind::kUnsupportedOp, "unsupported op '" + op + "'");
  }
  return r;
}

WireResponse parse_response(std::string_view line) {
  const json j = parse_object(line);
  WireResponse r;
  r.id = unsigned_field(j, "id", line);
  const auto status = field<std::string>(j, "status", line);
  if (status == "ok") {
    r.status = WireStatus::kOk;
    r.array = array_from(j, line);
  } else if (status == "error" || status == "unsupported") {
    r.status = status == "error" ? WireStatus::kError : WireStatus::kUnsupported;
    const auto it = j.find("message");
    if (it != j.end() && it->is_string()) r.message = it->get<std::string>();
  } else {
    malformed(line, "unknown status '" + status + "'");
  }
  return r;
}

std::uint64_t salvage_id(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return 0;
  const auto it = j.find("id");
  return it != j.end() && it->is_number_unsigned() ? it->get<std::uint64_t>() : 0;
}

ExternalBackend::ExternalBackend(const std::string& command, ExternalConfig config)
    : command_(command), config_(config) {
  require(!command.empty(), ErrorKind::kInvalidInput, "external backend: empty command");
  int fds[2];
  require(::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) == 0, ErrorKind::kIo,
          std::string("socketpair: ") + std::strerror(errno));
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    fail(ErrorKind::kIo, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::setpgid(0, 0);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(fds[1]);
  fd_ = fds[0];
  pid_ = pid;
  try {
    const Handshake h = parse_handshake(read_line());
    info_.dim = h.dim;
    info_.attributes = h.attributes;
    info_.can_sample = h.can_sample;
    info_.can_score = h.can_score;
    info_.can_transform = h.can_transform;
  } catch (...) {
    close();
    throw;
  }
}

ExternalBackend::~ExternalBackend() { close(); }

void ExternalBackend::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (std::chrono::steady_clock::now() > deadline) {
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
  }
}

void ExternalBackend::write_line(const std::string& line) {
  require(fd_ >= 0, ErrorKind::kBackendLost, "external backend is closed");
  std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      fail(ErrorKind::kBackendLost, "external backend '" + command_ + "' stopped reading: " +
                                        std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalBackend::read_line() {
  require(fd_ >= 0, ErrorKind::kBackendLost, "external backend is closed");
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(config_.timeout_ms);
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                          deadline - std::chrono::steady_clock::now())
                          .count();
    if (left <= 0) {
      fail(ErrorKind::kBackend, "external backend '" + command_ + "' timed out after " +
                                    std::to_string(config_.timeout_ms) + " ms");
    }
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) continue;
    char chunk[65536];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      std::string msg = "external backend '" + command_ + "' exited";
      if (!buffer_.empty()) msg += " after partial line: " + excerpt(buffer_);
      fail(ErrorKind::kBackendLost, msg);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

WireResponse ExternalBackend::call(WireRequest request) {
  request.id = next_id_++;
  write_line(encode_request(request));
  const std::string line = read_line();
  WireResponse r = parse_response(line);
  if (r.id != request.id) {
    fail(ErrorKind::kBackend, "wire response id " + std::to_string(r.id) + " does not match request " +
                                  std::to_string(request.id) + ": " + excerpt(line));
  }
  if (r.status == WireStatus::kUnsupported) {
    fail(ErrorKind::kUnsupportedOp, "external backend does not support " +
                                        std::string(to_string(request.op)) + ": " + r.message);
  }
  if (r.status == WireStatus::kError) {
    fail(ErrorKind::kBackend, "external backend error on " + std::string(to_string(request.op)) +
                                  ": " + r.message);
  }
  return r;
}

LatentSet ExternalBackend::sample_prior(std::size_t n, Rng& rng) {
  require(info_.can_sample, ErrorKind::kUnsupportedOp, "external backend cannot sample");
  LatentSet out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(info_.dim));
  for (std::size_t begin = 0; begin < n; begin += kMaxBatch) {
    WireRequest req;
    req.op = WireOp::kSamplePrior;
    req.n = std::min(kMaxBatch, n - begin);
    req.seed = rng.next_u64();
    WireResponse r = call(std::move(req));
    require(r.array.rows() == static_cast<Eigen::Index>(std::min(kMaxBatch, n - begin)) &&
                r.array.cols() == out.cols(),
            ErrorKind::kBackend, "external sample_prior returned the wrong shape");
    out.middleRows(static_cast<Eigen::Index>(begin), r.array.rows()) = r.array;
  }
  return out;
}

ScoreMatrix ExternalBackend::score(const LatentSet& latents) {
  require(latents.rows() == 0 || latents.cols() == static_cast<Eigen::Index>(info_.dim),
          ErrorKind::kDimension, "external score: dimension mismatch");
  require(latents.rows() <= static_cast<Eigen::Index>(kMaxBatch), ErrorKind::kInvalidInput,
          "external score: batch exceeds the cap");
  WireRequest req;
  req.op = WireOp::kScore;
  req.array = latents;
  WireResponse r = call(std::move(req));
  require(r.array.rows() == latents.rows() &&
              r.array.cols() == static_cast<Eigen::Index>(info_.attributes.size()),
          ErrorKind::kBackend, "external score returned the wrong shape");
  return r.array;
}

LatentSet ExternalBackend::transform(const LatentSet& latents) {
  require(info_.can_transform, ErrorKind::kUnsupportedOp, "external backend has no transform");
  require(latents.rows() <= static_cast<Eigen::Index>(kMaxBatch), ErrorKind::kInvalidInput,
          "external transform: batch exceeds the cap");
  WireRequest req;
  req.op = WireOp::kTransform;
  req.array = latents;
  WireResponse r = call(std::move(req));
  require(r.array.rows() == latents.rows() && r.array.cols() == latents.cols(),
          ErrorKind::kBackend, "external transform returned the wrong shape");
  return r.array;
}

std::unique_ptr<ExternalBackend> spawn_external(const std::string& command, ExternalConfig config) {
  return std::make_unique<ExternalBackend>(command, config);
}

}  // namespace lds
