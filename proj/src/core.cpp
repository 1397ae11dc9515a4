// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/core.hpp"

#include <algorithm>
#include <cmath>

namespace lds {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kSupportMismatch: return "support-mismatch";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kLowYield: return "low-yield";
    case ErrorKind::kBackend: return "backend";
    case ErrorKind::kBackendLost: return "backend-lost";
    case ErrorKind::kIncompatibleBackend: return "incompatible-backend";
    case ErrorKind::kUnsupportedOp: return "unsupported-op";
    case ErrorKind::kPipeline: return "pipeline";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kMissingArtifact: return "missing-artifact";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// AttributeSchema

AttributeSchema::AttributeSchema(std::vector<std::string> names,
                                 std::vector<std::size_t> target_indices)
    : names_(std::move(names)), targets_(std::move(target_indices)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (std::find(targets_.begin(), targets_.end(), i) == targets_.end()) {
      contexts_.push_back(i);
    }
  }
  validate();
}

AttributeSchema::AttributeSchema(std::vector<std::string> names,
                                 std::vector<std::size_t> target_indices,
                                 std::vector<std::size_t> context_indices)
    : names_(std::move(names)),
      targets_(std::move(target_indices)),
      contexts_(std::move(context_indices)) {
  validate();
}

AttributeSchema AttributeSchema::from_names(std::vector<std::string> names,
                                            const std::vector<std::string>& targets) {
  std::vector<std::size_t> idx;
  for (const auto& t : targets) {
    auto it = std::find(names.begin(), names.end(), t);
    require(it != names.end(), ErrorKind::kInvalidInput, "unknown target attribute '" + t + "'");
    idx.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  return AttributeSchema(std::move(names), std::move(idx));
}

void AttributeSchema::validate() const {
  require(!targets_.empty(), ErrorKind::kInvalidInput, "schema needs at least one target attribute");
  require(names_.size() <= 30, ErrorKind::kInvalidInput, "schema supports at most 30 attributes");
  std::vector<int> seen(names_.size(), 0);
  auto mark = [&](std::size_t i) {
    require(i < names_.size(), ErrorKind::kInvalidInput, "attribute index out of range");
    require(seen[i] == 0, ErrorKind::kInvalidInput,
            "attribute '" + names_[i] + "' listed twice in schema");
    seen[i] = 1;
  };
  for (auto i : targets_) mark(i);
  for (auto i : contexts_) mark(i);
  require(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }),
          ErrorKind::kInvalidInput, "target and context attributes must cover the schema");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    require(!names_[i].empty(), ErrorKind::kInvalidInput, "empty attribute name");
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      require(names_[i] != names_[j], ErrorKind::kInvalidInput,
              "duplicate attribute name '" + names_[i] + "'");
    }
  }
}

std::size_t AttributeSchema::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  require(it != names_.end(), ErrorKind::kInvalidInput, "unknown attribute '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<std::string> AttributeSchema::target_names() const {
  std::vector<std::string> out;
  for (auto i : targets_) out.push_back(names_[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Labels

AttributeLabel::AttributeLabel(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    require(b <= 1, ErrorKind::kInvalidInput, "label bits must be 0 or 1");
  }
}

AttributeLabel AttributeLabel::select(std::span<const std::size_t> indices) const {
  std::vector<std::uint8_t> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    require(i < bits_.size(), ErrorKind::kDimension, "label index out of range");
    out.push_back(bits_[i]);
  }
  return AttributeLabel(std::move(out));
}

std::string AttributeLabel::to_string() const {
  std::string s;
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

AttributeLabel make_label(std::span<const double> scores) {
  std::vector<std::uint8_t> bits;
  bits.reserve(scores.size());
  for (double s : scores) {
    require(std::isfinite(s), ErrorKind::kInvalidInput, "non-finite attribute score");
    bits.push_back(s >= 0.0 ? 1 : 0);
  }
  return AttributeLabel(std::move(bits));
}

double dot(const CodeRef& a, const CodeRef& b) {
  require(a.size() == b.size(), ErrorKind::kDimension,
          "dot: length mismatch (" + std::to_string(a.size()) + " vs " +
              std::to_string(b.size()) + ")");
  return a.dot(b);
}

std::size_t subgroup_index(const AttributeLabel& label, std::size_t m) {
  require(label.size() == m, ErrorKind::kDimension,
          "subgroup_index: label has " + std::to_string(label.size()) + " bits, expected " +
              std::to_string(m));
  std::size_t idx = 0;
  for (std::size_t i = 0; i < m; ++i) idx = (idx << 1) | label[i];
  return idx;
}

AttributeLabel subgroup_label(std::size_t index, std::size_t m) {
  require(m < 64 && index < (std::size_t{1} << m), ErrorKind::kInvalidInput,
          "subgroup index out of range");
  std::vector<std::uint8_t> bits(m);
  for (std::size_t i = 0; i < m; ++i) bits[i] = (index >> (m - 1 - i)) & 1u;
  return AttributeLabel(std::move(bits));
}

// ---------------------------------------------------------------------------
// Randomness

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SplitMix64::result_type SplitMix64::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seeded_engine(seed, stream)) {}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return uniform_(engine_); }

std::uint64_t Rng::next_u64() { return engine_(); }

std::size_t Rng::index(std::size_t n) {
  require(n > 0, ErrorKind::kInvalidInput, "Rng::index on empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Rng Rng::derive(std::uint64_t substream) const {
  return Rng(seed_, mix64(stream_ ^ mix64(substream + 0x5bd1e995ULL)));
}

void require_finite(const LatentSet& set, const char* what) {
  require(set.allFinite(), ErrorKind::kInvalidInput, std::string(what) + ": non-finite entries");
}

}  // namespace lds
