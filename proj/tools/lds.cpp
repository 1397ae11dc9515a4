// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lds/commands.hpp"

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string artifacts;
  std::string backend;
  std::string format;
};

lds::RunConfig build_config(const Globals& g) {
  lds::RunConfig c = g.config.empty() ? lds::default_run_config() : lds::load_config(g.config);
  if (g.seed) c.pipeline.seed = *g.seed;
  if (!g.artifacts.empty()) c.artifacts = g.artifacts;
  if (!g.backend.empty()) {
    const lds::BackendSelection b = lds::parse_backend_flag(g.backend);
    c.backend.kind = b.kind;
    c.backend.command = b.command;
  }
  if (g.format == "structured") c.format = lds::ReportFormat::kStructured;
  if (g.format == "table") c.format = lds::ReportFormat::kTable;
  return c;
}

std::optional<lds::BackendSelection> optional_backend(const std::string& flag) {
  if (flag.empty()) return std::nullopt;
  return lds::parse_backend_flag(flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent distribution shifting: fair latent sampling, metrics and audits"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Run seed (overrides pipeline.seed)");
  app.add_option("--artifacts", g.artifacts, "Artifact directory (overrides output.artifacts)");
  app.add_option("--backend", g.backend, "synthetic | exec:<command>");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"table", "structured"}));
  app.fallthrough();

  std::function<std::string()> action;

  auto* boundaries = app.add_subcommand("boundaries", "Semantic boundaries")->require_subcommand(1);
  boundaries->add_subcommand("train", "Train one boundary per target attribute")
      ->callback([&] { action = [&] { return lds::cmd_boundaries_train(build_config(g)); }; });

  auto* sample = app.add_subcommand("sample", "Fair latent sets")->require_subcommand(1);
  sample->add_subcommand("fair", "Run the full pipeline")
      ->callback([&] { action = [&] { return lds::cmd_sample_fair(build_config(g)); }; });
  std::string variant;
  auto* ablation = sample->add_subcommand("ablation", "Run one ablation variant");
  ablation->add_option("variant", variant, "full | no_edit | no_filter | no_gmm")->required();
  ablation->callback([&] {
    action = [&] { return lds::cmd_sample_ablation(build_config(g), lds::parse_variant(variant)); };
  });

  std::string param;
  std::vector<double> values;
  auto* sweep = app.add_subcommand("sweep", "Hyper-parameter sweep");
  sweep->add_option("param", param, "alpha | n_edit | gmm_k")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->callback([&] {
    action = [&] { return lds::cmd_sweep(build_config(g), lds::parse_sweep_param(param), values); };
  });

  auto* metrics = app.add_subcommand("metrics", "Fairness metrics")->require_subcommand(1);
  metrics->add_subcommand("report", "Re-score the fair set and report f against the baseline")
      ->callback([&] { action = [&] { return lds::cmd_metrics_report(build_config(g)); }; });

  auto* audit = app.add_subcommand("audit", "Bias audits on the fair set")->require_subcommand(1);
  std::string attribute;
  std::string classifier;
  auto* audit_cls = audit->add_subcommand("classifier", "Per-subgroup classifier error rates");
  audit_cls->add_option("--attribute", attribute, "Audited target attribute (default: first)");
  audit_cls->add_option("--classifier", classifier, "Classifier backend (default: --backend)");
  audit_cls->callback([&] {
    action = [&] {
      return lds::cmd_audit_classifier(build_config(g), attribute, optional_backend(classifier));
    };
  });
  std::vector<std::string> attributes;
  std::string transform;
  auto* audit_tr = audit->add_subcommand("transform", "Per-subgroup attribute alternation");
  audit_tr->add_option("--attributes", attributes, "Audited attributes (default: all)")->delimiter(',');
  audit_tr->add_option("--transform", transform, "Transform backend (default: --backend)");
  audit_tr->callback([&] {
    action = [&] {
      return lds::cmd_audit_transform(build_config(g), attributes, optional_backend(transform));
    };
  });

  auto* config = app.add_subcommand("config", "Configuration helpers")->require_subcommand(1);
  config->add_subcommand("emit", "Print the effective config with every key")
      ->callback([&] { action = [&] { return lds::emit_config(build_config(g)); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::cout << action();
    return 0;
  } catch (const lds::Error& e) {
    std::cerr << "lds: " << lds::to_string(e.kind()) << ": " << e.what() << '\n';
    return lds::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lds: " << e.what() << '\n';
    return 1;
  }
}
