// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/commands.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "lds/artifacts.hpp"
#include "lds/audit.hpp"

namespace lds {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// Artifact directory held under an exclusive advisory lock for the lifetime
/// of one command. Records every output in the manifest.
class Workspace {
 public:
  Workspace(const RunConfig& config, std::string command)
      : dir_(config.artifacts), command_(std::move(command)), digest_(config_digest(config)),
        seed_(config.pipeline.seed) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    require(!ec, ErrorKind::kIo, "cannot create artifact directory " + dir_ + ": " + ec.message());
    const std::string lock = path(kLockFile);
    fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    require(fd_ >= 0, ErrorKind::kIo, "cannot open " + lock + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fail(ErrorKind::kPrecondition, "artifact directory " + dir_ + " is locked by another lds process");
    }
  }
  ~Workspace() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  const std::string& digest() const { return digest_; }

  Envelope header(ArtifactKind kind) const {
    Envelope e;
    e.kind = kind;
    e.seed = seed_;
    e.config_digest = digest_;
    e.created = creation_timestamp();
    return e;
  }

  void write_envelope(const std::string& name, ArtifactKind kind, std::string payload) {
    Envelope e = header(kind);
    e.payload = std::move(payload);
    const std::string text = render_envelope(e);
    write_file(path(name), text);
    record(name, kind, text);
  }

  void record(const std::string& name, ArtifactKind kind, std::string_view bytes) {
    outputs_[name] = json{{"kind", to_string(kind)},
                          {"sha256", sha256_hex(bytes)},
                          {"command", command_},
                          {"config_digest", digest_},
                          {"seed", seed_}};
  }

  /// Merges this command's outputs into the manifest on disk.
  void commit() {
    const std::string file = path(kManifestFile);
    json manifest{{"version", kArtifactVersion}, {"outputs", json::object()}};
    if (file_exists(file)) {
      json old = json::parse(read_file(file), nullptr, false);
      require(!old.is_discarded() && old.contains("outputs"), ErrorKind::kCorruption,
              file + " is not a valid manifest");
      manifest["outputs"] = old["outputs"];
    }
    for (auto& [name, entry] : outputs_.items()) manifest["outputs"][name] = entry;
    write_file(file, manifest.dump(2) + "\n");
  }

 private:
  std::string dir_;
  std::string command_;
  std::string digest_;
  std::uint64_t seed_;
  int fd_ = -1;
  json outputs_ = json::object();
};

struct Session {
  RunConfig config;
  std::unique_ptr<Backend> backend;
};

Session open_session(const RunConfig& config) {
  Session s{config, make_backend(config)};
  resolve_schema(s.config, s.backend->info());
  return s;
}

std::string fmt(double x, int digits = 6) {
  if (std::isnan(x)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

[[noreturn]] void missing(const std::string& file, const std::string& producer) {
  fail(ErrorKind::kMissingArtifact, file + " not found; run `lds " + producer + "` first");
}

std::vector<SemanticBoundary> load_boundaries(const Workspace& ws) {
  const std::string file = ws.path(kBoundariesFile);
  if (!file_exists(file)) missing(file, "boundaries train");
  const Envelope e = parse_envelope(read_file(file), file);
  require(e.kind == ArtifactKind::kBoundary, ErrorKind::kCorruption, file + " is not a boundary artifact");
  if (e.config_digest != ws.digest()) {
    fail(ErrorKind::kPrecondition, file + " was produced under a different config (digest " +
                                       e.config_digest.substr(0, 12) +
                                       "); re-run `lds boundaries train` with this config");
  }
  return parse_boundaries_payload(e.payload);
}

std::vector<SemanticBoundary> boundaries_or_train(Workspace& ws, Session& s) {
  if (file_exists(ws.path(kBoundariesFile))) return load_boundaries(ws);
  auto b = train_target_boundaries(*s.backend, s.config.pipeline);
  ws.write_envelope(kBoundariesFile, ArtifactKind::kBoundary, boundaries_payload(b));
  return b;
}

std::string fairness_table(const std::string& title, const FairnessReport& fair,
                           const FairnessReport& baseline, const std::vector<AttributeLabel>& groups) {
  std::ostringstream out;
  out << "# " << title << '\n';
  out << "metric              baseline    fair\n";
  out << "f (discrepancy)     " << fmt(baseline.discrepancy) << "    " << fmt(fair.discrepancy) << '\n';
  out << "f_u (imbalance)     " << fmt(baseline.imbalance) << "    " << fmt(fair.imbalance) << '\n';
  out << "conditional KL      " << fmt(baseline.conditional_kl) << "    " << fmt(fair.conditional_kl) << '\n';
  out << "reduction           " << (fair.discrepancy > 0.0 ? fmt(baseline.discrepancy / fair.discrepancy, 1) + "x" : "inf") << '\n';
  out << "subgroup counts (re-scored):";
  for (std::size_t s = 0; s < fair.per_subgroup_counts.size(); ++s) {
    out << ' ' << (s < groups.size() ? groups[s].to_string() : std::to_string(s)) << '='
        << fair.per_subgroup_counts[s];
  }
  out << '\n';
  return out.str();
}

std::vector<AttributeLabel> all_subgroups(const AttributeSchema& schema) {
  std::vector<AttributeLabel> out;
  for (std::size_t s = 0; s < schema.subgroup_count(); ++s) {
    out.push_back(subgroup_label(s, schema.target_count()));
  }
  return out;
}

std::string finish_fair_run(Workspace& ws, const Session& s, const PipelineResult& r,
                            const std::string& stem, const std::string& title) {
  const std::string set_file = stem + ".ldsl";
  const std::string sidecar = save_fair_set(ws.path(set_file), r.fair, ws.header(ArtifactKind::kLatentSet));
  ws.record(set_file, ArtifactKind::kLatentSet, read_file(ws.path(set_file)));
  ws.record(set_file + ".meta", ArtifactKind::kLatentSet, sidecar);
  std::vector<AttributeLabel> targets;
  for (const auto& g : r.fair.subgroups) targets.push_back(g.target);
  if (stem == "fair_set") {
    ws.write_envelope(kMixturesFile, ArtifactKind::kGmm, mixtures_payload(targets, r.mixtures));
  }
  const std::string payload = fairness_payload(title, r.report, r.baseline);
  ws.write_envelope(stem == "fair_set" ? std::string(kFairReportFile) : stem + "_report.lds",
                    ArtifactKind::kReport, payload);
  ws.commit();
  if (s.config.format == ReportFormat::kStructured) return payload;
  return fairness_table(title, r.report, r.baseline, all_subgroups(s.config.pipeline.schema));
}

std::vector<SubgroupLatentSet> load_fair_subgroups(const Workspace& ws, const Session& s) {
  const std::string file = ws.path(kFairSetFile);
  if (!file_exists(file) || !file_exists(file + ".meta")) missing(file, "sample fair");
  LatentSetMeta meta;
  auto sets = load_fair_set(file, &meta);
  require(meta.target_names == s.config.pipeline.schema.target_names(), ErrorKind::kPrecondition,
          file + " was sampled for different target attributes; re-run `lds sample fair`");
  return sets;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
      return 2;
    case ErrorKind::kPrecondition:
    case ErrorKind::kMissingArtifact:
    case ErrorKind::kInvalidInput:
    case ErrorKind::kDimension:
      return 3;
    case ErrorKind::kBackend:
    case ErrorKind::kBackendLost:
    case ErrorKind::kIncompatibleBackend:
    case ErrorKind::kUnsupportedOp:
      return 4;
    case ErrorKind::kPipeline:
    case ErrorKind::kLowYield:
    case ErrorKind::kNumeric:
    case ErrorKind::kSupportMismatch:
      return 5;
    case ErrorKind::kIo:
    case ErrorKind::kCorruption:
    case ErrorKind::kVersion:
      return 6;
  }
  return 1;
}

std::string cmd_boundaries_train(const RunConfig& config) {
  Session s = open_session(config);
  Workspace ws(s.config, "boundaries train");
  const auto b = train_target_boundaries(*s.backend, s.config.pipeline);
  const std::string payload = boundaries_payload(b);
  ws.write_envelope(kBoundariesFile, ArtifactKind::kBoundary, payload);
  ws.commit();
  if (s.config.format == ReportFormat::kStructured) return payload;
  std::ostringstream out;
  out << "# boundaries (" << s.config.pipeline.corpus_n << " corpus, "
      << s.config.pipeline.extreme_fraction << " extremes)\n";
  out << "attribute  train_acc  intercept\n";
  for (const auto& x : b) {
    out << x.attribute << std::string(x.attribute.size() < 11 ? 11 - x.attribute.size() : 1, ' ')
        << fmt(x.meta.train_accuracy, 4) << "     " << fmt(x.intercept, 4) << '\n';
  }
  if (b.size() < 2) return out.str();
  const auto ortho = orthogonality_matrix(b, s.config.pipeline.orthogonality_threshold);
  for (const auto& [i, j] : ortho.flagged) {
    out << "warning: |cos(" << b[i].attribute << ", " << b[j].attribute << ")| = "
        << fmt(std::abs(ortho.cosines(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))), 3)
        << '\n';
  }
  return out.str();
}

std::string cmd_sample_fair(const RunConfig& config) {
  Session s = open_session(config);
  Workspace ws(s.config, "sample fair");
  const auto b = boundaries_or_train(ws, s);
  const PipelineResult r = run_pipeline(*s.backend, s.config.pipeline, &b);
  return finish_fair_run(ws, s, r, "fair_set", "sample fair");
}

std::string cmd_sample_ablation(const RunConfig& config, AblationVariant variant) {
  Session s = open_session(config);
  const std::string name(to_string(variant));
  Workspace ws(s.config, "sample ablation " + name);
  const auto b = boundaries_or_train(ws, s);
  const PipelineResult r = run_ablation(variant, *s.backend, s.config.pipeline, &b);
  return finish_fair_run(ws, s, r, "ablation_" + name, "sample ablation " + name);
}

std::string cmd_sweep(const RunConfig& config, SweepParam param, const std::vector<double>& values) {
  Session s = open_session(config);
  const std::string name(to_string(param));
  Workspace ws(s.config, "sweep " + name);
  const auto b = boundaries_or_train(ws, s);
  const SweepReport r = hyperparameter_sweep(param, values, *s.backend, s.config.pipeline, &b);
  const std::string payload = sweep_payload(r);
  ws.write_envelope("sweep_" + name + ".lds", ArtifactKind::kReport, payload);
  ws.commit();
  if (s.config.format == ReportFormat::kStructured) return payload;
  std::ostringstream out;
  out << "# sweep " << name << " (baseline f = " << fmt(r.baseline.discrepancy) << ")\n";
  out << name << "\tf\tf_u\tconditional_kl\n";
  for (const auto& e : r.entries) {
    out << e.value << '\t';
    if (e.report) {
      out << fmt(e.report->discrepancy) << '\t' << fmt(e.report->imbalance) << '\t'
          << fmt(e.report->conditional_kl) << '\n';
    } else {
      out << "error: " << e.error << '\n';
    }
  }
  return out.str();
}

std::string cmd_metrics_report(const RunConfig& config) {
  Session s = open_session(config);
  Workspace ws(s.config, "metrics report");
  const auto sets = load_fair_subgroups(ws, s);
  LatentSet all(0, 0);
  {
    std::size_t n = 0;
    for (const auto& g : sets) n += static_cast<std::size_t>(g.latents.rows());
    all.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.backend->info().dim));
    Eigen::Index at = 0;
    for (const auto& g : sets) {
      all.middleRows(at, g.latents.rows()) = g.latents;
      at += g.latents.rows();
    }
  }
  const auto& p = s.config.pipeline;
  const auto labels = rescore_labels(*s.backend, all, p.schema);
  require(!labels.empty(), ErrorKind::kPipeline, "no fair-set code could be scored");
  const JointDistribution ref = baseline_distribution(*s.backend, p);
  const std::string ref_id = "baseline seed=" + std::to_string(p.seed);
  const FairnessReport fair =
      fairness_discrepancy(estimate_distribution(labels, p.schema, p.pseudo_count), ref, p.beta, ref_id);
  const FairnessReport baseline = fairness_discrepancy(ref, ref, p.beta, ref_id);
  const std::string payload = fairness_payload("metrics report", fair, baseline);
  ws.write_envelope(kMetricsReportFile, ArtifactKind::kReport, payload);
  ws.commit();
  if (s.config.format == ReportFormat::kStructured) return payload;
  return fairness_table("metrics report", fair, baseline, all_subgroups(p.schema));
}

std::string cmd_audit_classifier(const RunConfig& config, const std::string& attribute,
                                 const std::optional<BackendSelection>& classifier) {
  Session s = open_session(config);
  Workspace ws(s.config, "audit classifier");
  const auto sets = load_fair_subgroups(ws, s);
  const std::string attr = attribute.empty() ? s.config.pipeline.schema.target_names().front() : attribute;
  std::unique_ptr<Backend> external;
  if (classifier) {
    RunConfig c = s.config;
    c.backend = *classifier;
    external = make_backend(c);
  }
  Backend& judge = external ? *external : *s.backend;
  const ErrorAuditReport r =
      classifier_error_audit(sets, s.config.pipeline.schema.target_names(), judge, attr);
  const std::string payload = error_audit_payload(r);
  ws.write_envelope("audit_classifier_" + attr + ".lds", ArtifactKind::kReport, payload);
  ws.commit();
  return s.config.format == ReportFormat::kStructured ? payload : format_table(r);
}

std::string cmd_audit_transform(const RunConfig& config, const std::vector<std::string>& attributes,
                                const std::optional<BackendSelection>& transform) {
  Session s = open_session(config);
  Workspace ws(s.config, "audit transform");
  const auto sets = load_fair_subgroups(ws, s);
  std::unique_ptr<Backend> external;
  if (transform) {
    RunConfig c = s.config;
    c.backend = *transform;
    external = make_backend(c);
  }
  Backend& mover = external ? *external : *s.backend;
  const auto attrs = attributes.empty() ? s.config.pipeline.schema.names() : attributes;
  const AlternationReport r = transform_alternation_audit(sets, mover, *s.backend, attrs);
  const std::string payload = alternation_payload(r);
  ws.write_envelope("audit_transform.lds", ArtifactKind::kReport, payload);
  ws.commit();
  return s.config.format == ReportFormat::kStructured ? payload : format_table(r);
}

}  // namespace lds
