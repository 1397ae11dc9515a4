// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/artifacts.hpp"

#include <sodium.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace lds {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void corrupt(const std::string& source, const std::string& why) {
  fail(ErrorKind::kCorruption, source + ": " + why);
}

json parse_payload(std::string_view payload, const char* what) {
  json j = json::parse(payload, nullptr, false);
  require(!j.is_discarded(), ErrorKind::kCorruption, std::string(what) + " payload is not JSON");
  return j;
}

// NaN and infinities are not JSON; store them as null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

Eigen::MatrixXd matrix_from(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) return {};
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = vector_from(rows[static_cast<std::size_t>(i)]);
    require(r.size() == d, ErrorKind::kCorruption, "ragged matrix in payload");
    m.row(i) = r.transpose();
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

json report_json(const FairnessReport& r) {
  return json{{"discrepancy", number(r.discrepancy)},
              {"imbalance", number(r.imbalance)},
              {"conditional_kl", number(r.conditional_kl)},
              {"beta", r.beta},
              {"per_subgroup_counts", r.per_subgroup_counts},
              {"sample_count", r.sample_count},
              {"smoothing", r.smoothing},
              {"reference_id", r.reference_id}};
}

FairnessReport report_from(const json& j) {
  FairnessReport r;
  r.discrepancy = number_from(j.at("discrepancy"));
  r.imbalance = number_from(j.at("imbalance"));
  r.conditional_kl = number_from(j.at("conditional_kl"));
  r.beta = j.at("beta").get<double>();
  r.per_subgroup_counts = j.at("per_subgroup_counts").get<std::vector<std::size_t>>();
  r.sample_count = j.at("sample_count").get<std::size_t>();
  r.smoothing = j.at("smoothing").get<double>();
  r.reference_id = j.at("reference_id").get<std::string>();
  return r;
}

AttributeLabel label_from(const json& j) {
  std::vector<std::uint8_t> bits;
  for (char c : j.get<std::string>()) {
    require(c == '0' || c == '1', ErrorKind::kCorruption, "bad label in payload");
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return AttributeLabel(std::move(bits));
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorKind::kCorruption, std::string(what) + " payload: " + e.what());
  }
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

void put_u64(std::string& s, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint64_t get_le(std::string_view s, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    v |= std::uint64_t{static_cast<unsigned char>(s[at + static_cast<std::size_t>(b)])} << (8 * b);
  }
  return v;
}

}  // namespace

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kBoundary: return "boundary";
    case ArtifactKind::kGmm: return "gmm";
    case ArtifactKind::kLatentSet: return "latent-set";
    case ArtifactKind::kReport: return "report";
  }
  return "?";
}

ArtifactKind parse_artifact_kind(std::string_view name) {
  for (auto k : {ArtifactKind::kBoundary, ArtifactKind::kGmm, ArtifactKind::kLatentSet,
                 ArtifactKind::kReport}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::kCorruption, "unknown artifact kind '" + std::string(name) + "'");
}

std::string sha256_hex(std::string_view data) {
  require(sodium_init() >= 0, ErrorKind::kIo, "libsodium failed to initialize");
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(data.data()), data.size());
  char hex[2 * crypto_hash_sha256_BYTES + 1];
  sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
  return hex;
}

std::string render_envelope(const Envelope& e) {
  std::ostringstream out;
  out << "lds-artifact " << e.version << '\n'
      << "kind: " << to_string(e.kind) << '\n'
      << "seed: " << e.seed << '\n'
      << "config_digest: " << e.config_digest << '\n'
      << "created: " << e.created << '\n'
      << "payload_digest: " << sha256_hex(e.payload) << '\n'
      << "---\n"
      << e.payload;
  return out.str();
}

Envelope parse_envelope(std::string_view text, const std::string& source) {
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) corrupt(source, "truncated envelope header");
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  const auto first = next_line();
  constexpr std::string_view kMagic = "lds-artifact ";
  if (!first.starts_with(kMagic)) corrupt(source, "not an lds artifact");
  Envelope e;
  try {
    e.version = std::stoi(std::string(first.substr(kMagic.size())));
  } catch (const std::exception&) {
    corrupt(source, "bad version field");
  }
  if (e.version > kArtifactVersion) {
    fail(ErrorKind::kVersion, source + ": artifact format v" + std::to_string(e.version) +
                                  " is newer than this reader (v" +
                                  std::to_string(kArtifactVersion) + ")");
  }
  if (e.version < 1) corrupt(source, "bad version field");
  std::string payload_digest;
  bool seen[5] = {};
  while (true) {
    const auto line = next_line();
    if (line == "---") break;
    const auto colon = line.find(": ");
    if (colon == std::string_view::npos) corrupt(source, "bad header line");
    const auto key = line.substr(0, colon);
    const std::string value(line.substr(colon + 2));
    if (key == "kind") {
      e.kind = parse_artifact_kind(value);
      seen[0] = true;
    } else if (key == "seed") {
      try {
        e.seed = std::stoull(value);
      } catch (const std::exception&) {
        corrupt(source, "bad seed field");
      }
      seen[1] = true;
    } else if (key == "config_digest") {
      e.config_digest = value;
      seen[2] = true;
    } else if (key == "created") {
      e.created = value;
      seen[3] = true;
    } else if (key == "payload_digest") {
      payload_digest = value;
      seen[4] = true;
    } else {
      corrupt(source, "unknown header field '" + std::string(key) + "'");
    }
  }
  for (bool s : seen) {
    if (!s) corrupt(source, "envelope header is incomplete");
  }
  e.payload = std::string(text.substr(pos));
  if (sha256_hex(e.payload) != payload_digest) corrupt(source, "payload digest mismatch");
  return e;
}

std::string creation_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    require(end != nullptr && *end == '\0' && v >= 0, ErrorKind::kInvalidInput,
            "SOURCE_DATE_EPOCH must be a non-negative integer");
    t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::kIo, "write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  require(!ec, ErrorKind::kIo, "cannot rename " + tmp + ": " + ec.message());
}

bool file_exists(const std::string& path) { return fs::exists(path); }

std::string encode_latent_file(const LatentSet& latents) {
  std::string out = "LDSL";
  put_u32(out, 1);
  put_u64(out, static_cast<std::uint64_t>(latents.rows()));
  put_u64(out, static_cast<std::uint64_t>(latents.cols()));
  out.reserve(kLatentHeaderBytes + static_cast<std::size_t>(latents.size()) * 4);
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    for (Eigen::Index j = 0; j < latents.cols(); ++j) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(latents(i, j))));
    }
  }
  return out;
}

LatentSet decode_latent_file(std::string_view bytes, const std::string& source) {
  if (bytes.size() < kLatentHeaderBytes) corrupt(source, "latent file shorter than its header");
  if (bytes.substr(0, 4) != "LDSL") corrupt(source, "bad latent file magic");
  const auto version = get_le(bytes, 4, 4);
  if (version > 1) {
    fail(ErrorKind::kVersion, source + ": latent file v" + std::to_string(version) +
                                  " is newer than this reader");
  }
  const auto rows = get_le(bytes, 8, 8);
  const auto cols = get_le(bytes, 16, 8);
  if (cols != 0 && rows > (bytes.size() / 4) / cols + 1) corrupt(source, "implausible header");
  if (bytes.size() != kLatentHeaderBytes + rows * cols * 4) {
    corrupt(source, "expected " + std::to_string(kLatentHeaderBytes + rows * cols * 4) +
                        " bytes, found " + std::to_string(bytes.size()));
  }
  LatentSet out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t at = kLatentHeaderBytes;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j, at += 4) {
      out(i, j) = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, at, 4)));
    }
  }
  return out;
}

std::string boundaries_payload(const std::vector<SemanticBoundary>& boundaries) {
  json list = json::array();
  for (const auto& b : boundaries) {
    list.push_back(json{{"attribute", b.attribute},
                        {"normal", vector_json(b.normal)},
                        {"intercept", b.intercept},
                        {"corpus_size", b.meta.corpus_size},
                        {"extreme_fraction", b.meta.extreme_fraction},
                        {"train_accuracy", b.meta.train_accuracy}});
  }
  return json{{"boundaries", list}}.dump(2) + "\n";
}

std::vector<SemanticBoundary> parse_boundaries_payload(std::string_view payload) {
  const json j = parse_payload(payload, "boundary");
  return guarded("boundary", [&] {
    std::vector<SemanticBoundary> out;
    for (const auto& e : j.at("boundaries")) {
      SemanticBoundary b;
      b.attribute = e.at("attribute").get<std::string>();
      b.normal = vector_from(e.at("normal"));
      b.intercept = e.at("intercept").get<double>();
      b.meta.corpus_size = e.at("corpus_size").get<std::size_t>();
      b.meta.extreme_fraction = e.at("extreme_fraction").get<double>();
      b.meta.train_accuracy = e.at("train_accuracy").get<double>();
      out.push_back(std::move(b));
    }
    return out;
  });
}

std::string mixtures_payload(const std::vector<AttributeLabel>& targets,
                             const std::vector<std::optional<GaussianMixture>>& mixtures) {
  require(targets.size() == mixtures.size(), ErrorKind::kInvalidInput,
          "mixtures_payload: one target per mixture required");
  json list = json::array();
  for (std::size_t s = 0; s < mixtures.size(); ++s) {
    json e{{"subgroup", targets[s].to_string()}};
    if (!mixtures[s]) {
      e["mixture"] = nullptr;
      list.push_back(std::move(e));
      continue;
    }
    const auto& m = *mixtures[s];
    json g{{"covariance", m.mode == CovarianceMode::kFull ? "full" : "diagonal"},
           {"weights", vector_json(m.weights)},
           {"means", matrix_json(m.means)},
           {"log_likelihood", number(m.fit_meta.log_likelihood)},
           {"iterations", m.fit_meta.iterations},
           {"restarts", m.fit_meta.restarts},
           {"converged", m.fit_meta.converged}};
    if (m.mode == CovarianceMode::kFull) {
      json covs = json::array();
      for (const auto& c : m.covariances) covs.push_back(matrix_json(c));
      g["covariances"] = std::move(covs);
    } else {
      g["variances"] = matrix_json(m.variances);
    }
    e["mixture"] = std::move(g);
    list.push_back(std::move(e));
  }
  return json{{"mixtures", list}}.dump(2) + "\n";
}

std::vector<std::optional<GaussianMixture>> parse_mixtures_payload(std::string_view payload) {
  const json j = parse_payload(payload, "gmm");
  return guarded("gmm", [&] {
    std::vector<std::optional<GaussianMixture>> out;
    for (const auto& e : j.at("mixtures")) {
      const auto& g = e.at("mixture");
      if (g.is_null()) {
        out.emplace_back();
        continue;
      }
      GaussianMixture m;
      m.mode = g.at("covariance").get<std::string>() == "full" ? CovarianceMode::kFull
                                                               : CovarianceMode::kDiagonal;
      m.weights = vector_from(g.at("weights"));
      m.means = matrix_from(g.at("means"));
      if (m.mode == CovarianceMode::kFull) {
        for (const auto& c : g.at("covariances")) m.covariances.push_back(matrix_from(c));
      } else {
        m.variances = matrix_from(g.at("variances"));
      }
      m.fit_meta.log_likelihood = number_from(g.at("log_likelihood"));
      m.fit_meta.iterations = g.at("iterations").get<std::size_t>();
      m.fit_meta.restarts = g.at("restarts").get<std::size_t>();
      m.fit_meta.converged = g.at("converged").get<bool>();
      m.validate();
      out.emplace_back(std::move(m));
    }
    return out;
  });
}

std::string fairness_payload(const std::string& title, const FairnessReport& fair,
                             const FairnessReport& baseline) {
  const double ratio = fair.discrepancy > 0.0 ? baseline.discrepancy / fair.discrepancy
                                              : std::numeric_limits<double>::infinity();
  return json{{"title", title},
              {"fair", report_json(fair)},
              {"baseline", report_json(baseline)},
              {"reduction", number(ratio)}}
             .dump(2) +
         "\n";
}

FairnessReport parse_fairness_payload(std::string_view payload, FairnessReport* baseline) {
  const json j = parse_payload(payload, "report");
  return guarded("report", [&] {
    if (baseline != nullptr) *baseline = report_from(j.at("baseline"));
    return report_from(j.at("fair"));
  });
}

std::string sweep_payload(const SweepReport& report) {
  json rows = json::array();
  for (const auto& e : report.entries) {
    json r{{"value", e.value}};
    if (e.report) {
      r["discrepancy"] = number(e.report->discrepancy);
      r["imbalance"] = number(e.report->imbalance);
      r["conditional_kl"] = number(e.report->conditional_kl);
    } else {
      r["error"] = e.error;
    }
    rows.push_back(std::move(r));
  }
  return json{{"param", to_string(report.param)},
              {"baseline", number(report.baseline.discrepancy)},
              {"points", rows}}
             .dump(2) +
         "\n";
}

std::string error_audit_payload(const ErrorAuditReport& report) {
  json rows = json::array();
  for (std::size_t s = 0; s < report.subgroups.size(); ++s) {
    rows.push_back(json{{"subgroup", report.subgroups[s].to_string()},
                        {"error_rate", number(report.error_rates[s])},
                        {"size", report.sizes[s]},
                        {"skipped", report.skipped[s]}});
  }
  return json{{"note", kCircularityNote},
              {"attribute", report.attribute},
              {"subgroups", rows},
              {"positive_mean", number(report.positive_mean)},
              {"negative_mean", number(report.negative_mean)}}
             .dump(2) +
         "\n";
}

std::string alternation_payload(const AlternationReport& report) {
  json rows = json::array();
  for (std::size_t s = 0; s < report.subgroups.size(); ++s) {
    json rates = json::object();
    for (std::size_t a = 0; a < report.attributes.size(); ++a) {
      rates[report.attributes[a]] = number(report.rates[a][s]);
    }
    rows.push_back(json{{"subgroup", report.subgroups[s].to_string()},
                        {"alternation", rates},
                        {"size", report.sizes[s]},
                        {"skipped", report.skipped[s]}});
  }
  return json{{"note", kCircularityNote}, {"attributes", report.attributes}, {"subgroups", rows}}
             .dump(2) +
         "\n";
}

std::string latent_meta_payload(const LatentSetMeta& meta) {
  json groups = json::array();
  for (std::size_t s = 0; s < meta.targets.size(); ++s) {
    const auto& p = meta.provenance[s];
    groups.push_back(json{{"subgroup", meta.targets[s].to_string()},
                          {"count", meta.counts[s]},
                          {"n_edited", p.n_edited},
                          {"n_kept_after_filter", p.n_kept_after_filter},
                          {"n_gmm_sampled", p.n_gmm_sampled},
                          {"shortfall", p.shortfall},
                          {"resample_rejections", p.resample_rejections}});
  }
  return json{{"target_names", meta.target_names},
              {"data_sha256", meta.data_sha256},
              {"subgroups", groups}}
             .dump(2) +
         "\n";
}

LatentSetMeta parse_latent_meta_payload(std::string_view payload) {
  const json j = parse_payload(payload, "latent-set");
  return guarded("latent-set", [&] {
    LatentSetMeta meta;
    meta.target_names = j.at("target_names").get<std::vector<std::string>>();
    meta.data_sha256 = j.at("data_sha256").get<std::string>();
    for (const auto& g : j.at("subgroups")) {
      meta.targets.push_back(label_from(g.at("subgroup")));
      meta.counts.push_back(g.at("count").get<std::size_t>());
      Provenance p;
      p.n_edited = g.at("n_edited").get<std::size_t>();
      p.n_kept_after_filter = g.at("n_kept_after_filter").get<std::size_t>();
      p.n_gmm_sampled = g.at("n_gmm_sampled").get<std::size_t>();
      p.shortfall = g.at("shortfall").get<std::size_t>();
      p.resample_rejections = g.at("resample_rejections").get<std::size_t>();
      meta.provenance.push_back(p);
    }
    return meta;
  });
}

std::string save_fair_set(const std::string& path, const FairLatentSet& set,
                          const Envelope& header) {
  const std::string bytes = encode_latent_file(set.stacked());
  LatentSetMeta meta;
  meta.target_names = set.config.schema.target_names();
  for (const auto& g : set.subgroups) {
    meta.targets.push_back(g.target);
    meta.counts.push_back(static_cast<std::size_t>(g.latents.rows()));
    meta.provenance.push_back(g.provenance);
  }
  meta.data_sha256 = sha256_hex(bytes);
  Envelope e = header;
  e.kind = ArtifactKind::kLatentSet;
  e.payload = latent_meta_payload(meta);
  const std::string sidecar = render_envelope(e);
  write_file(path, bytes);
  write_file(path + ".meta", sidecar);
  return sidecar;
}

std::vector<SubgroupLatentSet> load_fair_set(const std::string& path, LatentSetMeta* meta_out,
                                             Envelope* header) {
  const Envelope e = parse_envelope(read_file(path + ".meta"), path + ".meta");
  if (e.kind != ArtifactKind::kLatentSet) corrupt(path + ".meta", "not a latent-set sidecar");
  const LatentSetMeta meta = parse_latent_meta_payload(e.payload);
  const std::string bytes = read_file(path);
  if (sha256_hex(bytes) != meta.data_sha256) corrupt(path, "data digest does not match sidecar");
  const LatentSet all = decode_latent_file(bytes, path);
  std::size_t total = 0;
  for (auto c : meta.counts) total += c;
  if (total != static_cast<std::size_t>(all.rows())) corrupt(path, "subgroup counts do not add up");
  std::vector<SubgroupLatentSet> out;
  Eigen::Index at = 0;
  for (std::size_t s = 0; s < meta.targets.size(); ++s) {
    const auto n = static_cast<Eigen::Index>(meta.counts[s]);
    out.push_back(SubgroupLatentSet{meta.targets[s], all.middleRows(at, n), meta.provenance[s]});
    at += n;
  }
  if (meta_out != nullptr) *meta_out = meta;
  if (header != nullptr) *header = e;
  return out;
}

}  // namespace lds
