// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lds/artifacts.hpp"
#include "lds/config.hpp"
#include "lds/editing.hpp"
#include "lds/metrics.hpp"
#include "lds/sampler.hpp"

namespace py = pybind11;

namespace {

py::dict report_dict(const lds::FairnessReport& r) {
  py::dict d;
  d["discrepancy"] = r.discrepancy;
  d["imbalance"] = r.imbalance;
  d["conditional_kl"] = r.conditional_kl;
  d["beta"] = r.beta;
  d["per_subgroup_counts"] = r.per_subgroup_counts;
  d["sample_count"] = r.sample_count;
  return d;
}

lds::JointDistribution table(const std::vector<std::string>& attributes,
                             const std::vector<std::string>& targets, std::vector<double> probs) {
  return lds::JointDistribution::from_probabilities(
      lds::AttributeSchema::from_names(attributes, targets), std::move(probs));
}

}  // namespace

PYBIND11_MODULE(_fairlds, m) {
  m.doc() = "Latent distribution shifting core";

  static py::exception<lds::Error> error(m, "LdsError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const lds::Error& e) {
      py::set_error(error, py::make_tuple(std::string(lds::to_string(e.kind())), e.what()));
    }
  });

  m.def("kl_divergence", [](const std::vector<double>& p, const std::vector<double>& q) {
    return lds::kl_divergence(p, q);
  }, py::arg("p"), py::arg("q"));

  m.def("imbalance_score",
        [](const std::vector<std::string>& attributes, const std::vector<std::string>& targets,
           std::vector<double> probs) { return lds::imbalance_score(table(attributes, targets, std::move(probs))); },
        py::arg("attributes"), py::arg("targets"), py::arg("probs"),
        "Probabilities over all 2^n cells, most significant bit first in attribute order.");

  m.def("fairness_discrepancy",
        [](const std::vector<std::string>& attributes, const std::vector<std::string>& targets,
           std::vector<double> fair, std::vector<double> reference, double beta) {
          return report_dict(lds::fairness_discrepancy(table(attributes, targets, std::move(fair)),
                                                       table(attributes, targets, std::move(reference)),
                                                       beta));
        },
        py::arg("attributes"), py::arg("targets"), py::arg("fair"), py::arg("reference"),
        py::arg("beta") = 0.1);

  m.def("edit",
        [](const lds::LatentSet& latents, const Eigen::MatrixXd& normals, const std::vector<int>& target,
           double alpha, bool allow_non_orthogonal) {
          std::vector<lds::SemanticBoundary> bs;
          for (Eigen::Index i = 0; i < normals.rows(); ++i) {
            lds::SemanticBoundary b;
            b.attribute = "n" + std::to_string(i);
            b.normal = normals.row(i).transpose();
            bs.push_back(std::move(b));
          }
          std::vector<std::uint8_t> bits(target.begin(), target.end());
          lds::EditOptions opts;
          opts.allow_non_orthogonal = allow_non_orthogonal;
          return lds::edit_set(latents, lds::EditPlan::make(std::move(bs), lds::AttributeLabel(bits), alpha),
                               opts);
        },
        py::arg("latents"), py::arg("normals"), py::arg("target"), py::arg("alpha") = 3.0,
        py::arg("allow_non_orthogonal") = false,
        "Moves each row to signed distance +/-alpha from every hyperplane (one unit normal per row of `normals`).");

  m.def("sample_fair",
        [](const std::string& config_text) {
          lds::RunConfig cfg = lds::parse_config(config_text);
          auto backend = lds::make_backend(cfg);
          lds::resolve_schema(cfg, backend->info());
          lds::PipelineResult r;
          {
            py::gil_scoped_release release;
            r = lds::run_pipeline(*backend, cfg.pipeline);
          }
          std::vector<std::string> labels;
          for (const auto& l : r.fair.membership()) labels.push_back(l.to_string());
          py::dict out;
          out["latents"] = r.fair.stacked();
          out["subgroups"] = labels;
          out["targets"] = cfg.pipeline.schema.target_names();
          out["fair"] = report_dict(r.report);
          out["baseline"] = report_dict(r.baseline);
          return out;
        },
        py::arg("config") = std::string(),
        "Runs the full pipeline on the backend described by an INI config document.");

  m.def("default_config", [] { return lds::emit_config(lds::default_run_config()); });

  m.def("read_latent_file", [](const std::string& path) {
    return lds::decode_latent_file(lds::read_file(path), path);
  }, py::arg("path"));

  m.def("write_latent_file", [](const std::string& path, const lds::LatentSet& latents) {
    lds::write_file(path, lds::encode_latent_file(latents));
  }, py::arg("path"), py::arg("latents"));
}
