// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "lds/artifacts.hpp"
#include "lds/audit.hpp"
#include "lds/commands.hpp"
#include "lds/config.hpp"

using namespace lds;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an lds::Error");
  return ErrorKind::kIo;
}

std::string scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lds_test_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

const char* kSmall = R"(
[schema]
attributes = a0, a1, c0
targets = a0, a1

[pipeline]
total_n = 400
corpus_n = 4000
n_edit = 800
gmm_k = 4
seed = 3

[svm]
epochs = 300

[synthetic]
dim = 8
)";

}  // namespace

TEST_CASE("an empty config yields the defaults") {
  CHECK(parse_config("") == default_run_config());
  CHECK(parse_config("# comment only\n\n; another\n") == default_run_config());
}

TEST_CASE("config parse errors name the line") {
  try {
    parse_config("[pipeline]\ntotal_n = 1001\n[schema]\nattributes = a,b,c\ntargets = a,b\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("total_n") != std::string::npos);
  }
  try {
    parse_config("[pipeline]\n\nalhpa = 3\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(kind_of([] { parse_config("[nowhere]\n"); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config("[pipeline]\nalpha = 1\nalpha = 2\n"); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config("[pipeline]\nalpha = three\n"); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config("alpha = 3\n"); }) == ErrorKind::kParse);
  CHECK(kind_of([] { parse_config("[backend]\nkind = exec\n"); }) == ErrorKind::kParse);
}

TEST_CASE("emitted configs round trip") {
  auto c = parse_config(kSmall);
  c.pipeline.alpha_magnitude = 0.1 + 0.2;
  c.pipeline.em.mode = CovarianceMode::kFull;
  c.synthetic.world.positive_rates = {1.0 / 3.0, 0.2, 0.7};
  c.backend = parse_backend_flag("exec:python -m fairlds.serve --dim 8");
  c.format = ReportFormat::kStructured;
  const auto text = emit_config(c);
  CHECK(parse_config(text) == c);
  CHECK(emit_config(parse_config(text)) == text);

  auto moved = c;
  moved.artifacts = "elsewhere";
  CHECK(config_digest(moved) == config_digest(c));
  moved.pipeline.seed += 1;
  CHECK(config_digest(moved) != config_digest(c));
  CHECK(kind_of([] { parse_backend_flag("grpc:foo"); }) == ErrorKind::kParse);
}

TEST_CASE("envelopes detect version and corruption") {
  Envelope e;
  e.kind = ArtifactKind::kBoundary;
  e.seed = 9;
  e.config_digest = sha256_hex("x");
  e.created = "2026-01-01T00:00:00Z";
  e.payload = "{\"a\": 1}";
  const auto text = render_envelope(e);
  const auto back = parse_envelope(text, "t");
  CHECK(back.kind == ArtifactKind::kBoundary);
  CHECK(back.seed == 9);
  CHECK(back.payload == e.payload);

  auto newer = text;
  newer.replace(newer.find("lds-artifact 1"), 14, "lds-artifact 9");
  CHECK(kind_of([&] { parse_envelope(newer, "t"); }) == ErrorKind::kVersion);
  auto tampered = text;
  tampered[tampered.size() - 3] = '2';
  CHECK(kind_of([&] { parse_envelope(tampered, "t"); }) == ErrorKind::kCorruption);
  CHECK(kind_of([] { parse_envelope("hello", "t"); }) == ErrorKind::kCorruption);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("latent files have a fixed layout") {
  LatentSet x(10000, 512);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(i % 977) * 0.25f;
  const auto bytes = encode_latent_file(x);
  CHECK(bytes.size() == kLatentHeaderBytes + 10000u * 512u * 4u);
  CHECK(bytes.substr(0, 4) == "LDSL");
  CHECK(decode_latent_file(bytes, "t") == x);
  CHECK(kind_of([&] { decode_latent_file(bytes.substr(0, bytes.size() - 1), "t"); }) ==
        ErrorKind::kCorruption);
  CHECK(kind_of([&] { decode_latent_file("LDS", "t"); }) == ErrorKind::kCorruption);
}

TEST_CASE("boundary payloads round trip in 512 dimensions") {
  SemanticBoundary b;
  b.attribute = "smile";
  b.normal = Eigen::VectorXd::LinSpaced(512, -1.0, 1.0).normalized();
  b.intercept = -0.125;
  b.meta = {50000, 0.02, 0.987};
  const auto back = parse_boundaries_payload(boundaries_payload({b}));
  REQUIRE(back.size() == 1);
  CHECK(back[0].attribute == "smile");
  CHECK(back[0].normal == b.normal);
  CHECK(back[0].intercept == b.intercept);
  CHECK(back[0].meta.train_accuracy == b.meta.train_accuracy);
}

TEST_CASE("exit codes by error class") {
  CHECK(exit_code(ErrorKind::kParse) == 2);
  CHECK(exit_code(ErrorKind::kMissingArtifact) == 3);
  CHECK(exit_code(ErrorKind::kPrecondition) == 3);
  CHECK(exit_code(ErrorKind::kBackendLost) == 4);
  CHECK(exit_code(ErrorKind::kLowYield) == 5);
  CHECK(exit_code(ErrorKind::kCorruption) == 6);
}

TEST_CASE("commands share one artifact directory") {
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  auto cfg = parse_config(kSmall);
  cfg.artifacts = scratch_dir("flow");

  CHECK(kind_of([&] { cmd_metrics_report(cfg); }) == ErrorKind::kMissingArtifact);
  CHECK(kind_of([&] { cmd_audit_classifier(cfg, "a0", std::nullopt); }) == ErrorKind::kMissingArtifact);

  cmd_boundaries_train(cfg);
  const auto boundaries = read_file(cfg.artifacts + "/" + kBoundariesFile);
  const auto out = cmd_sample_fair(cfg);
  CHECK(out.find("baseline") != std::string::npos);
  CHECK(read_file(cfg.artifacts + "/" + kBoundariesFile) == boundaries);

  LatentSetMeta meta;
  const auto sets = load_fair_set(cfg.artifacts + "/" + kFairSetFile, &meta);
  CHECK(sets.size() == 4);
  CHECK(meta.counts == std::vector<std::size_t>{100, 100, 100, 100});

  FairnessReport baseline;
  const auto stored = parse_fairness_payload(
      parse_envelope(read_file(cfg.artifacts + "/" + kFairReportFile), "r").payload, &baseline);
  cmd_metrics_report(cfg);
  FairnessReport baseline2;
  const auto again = parse_fairness_payload(
      parse_envelope(read_file(cfg.artifacts + "/" + kMetricsReportFile), "r").payload, &baseline2);
  CHECK(again.discrepancy == stored.discrepancy);
  CHECK(baseline2.discrepancy == baseline.discrepancy);
  CHECK(stored.discrepancy < baseline.discrepancy);

  const auto audit = cmd_audit_classifier(cfg, "a0", std::nullopt);
  CHECK(audit.find(kCircularityNote) != std::string::npos);
  CHECK(file_exists(cfg.artifacts + "/audit_classifier_a0.lds"));
  CHECK(file_exists(cfg.artifacts + "/" + kManifestFile));

  auto other = cfg;
  other.pipeline.svm.epochs = 301;
  CHECK(kind_of([&] { cmd_sample_fair(other); }) == ErrorKind::kPrecondition);

  auto broken = read_file(cfg.artifacts + "/" + kFairSetFile);
  broken[broken.size() / 2] ^= 0x55;
  write_file(cfg.artifacts + "/" + kFairSetFile, broken);
  CHECK(kind_of([&] { cmd_metrics_report(cfg); }) == ErrorKind::kCorruption);
  fs::remove_all(cfg.artifacts);
}
