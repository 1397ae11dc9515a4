// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lds {

namespace {

constexpr std::uint64_t kStreamBoundaries = 0x626e6479ULL;
constexpr std::uint64_t kStreamSubgroups = 0x73756267ULL;
constexpr std::uint64_t kStreamBaseline = 0x62617365ULL;

enum : std::uint64_t { kEdit = 1, kEditRetry, kFit, kSample, kResample };

template <class F>
auto staged(const std::string& stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
  }
}

LatentSet draw_prior(Backend& backend, std::size_t n, Rng& rng) {
  const auto dim = static_cast<Eigen::Index>(backend.info().dim);
  LatentSet out(static_cast<Eigen::Index>(n), dim);
  for (std::size_t begin = 0; begin < n; begin += kMaxBatch) {
    const std::size_t count = std::min(kMaxBatch, n - begin);
    LatentSet chunk = backend.sample_prior(count, rng);
    require(chunk.rows() == static_cast<Eigen::Index>(count) && chunk.cols() == dim,
            ErrorKind::kBackend, "backend returned a prior batch of the wrong shape");
    out.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) = chunk;
  }
  return out;
}

LatentSet select_rows(const LatentSet& x, const std::vector<bool>& mask, std::size_t limit) {
  std::size_t count = 0;
  for (bool b : mask) count += b ? 1 : 0;
  count = std::min(count, limit);
  LatentSet out(static_cast<Eigen::Index>(count), x.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < x.rows() && r < out.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) out.row(r++) = x.row(i);
  }
  return out;
}

std::vector<SemanticBoundary> boundaries_for_targets(const std::vector<SemanticBoundary>& all,
                                                     const PipelineConfig& config,
                                                     std::size_t dim) {
  std::vector<SemanticBoundary> out;
  for (const auto& name : config.schema.target_names()) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const SemanticBoundary& b) { return b.attribute == name; });
    require(it != all.end(), ErrorKind::kPrecondition, "no boundary for target attribute '" + name + "'");
    require(static_cast<std::size_t>(it->normal.size()) == dim, ErrorKind::kDimension,
            "boundary '" + name + "' does not match the backend dimension");
    out.push_back(*it);
  }
  return out;
}

EditOptions edit_options(const PipelineConfig& c) {
  return EditOptions{c.orthogonality_threshold, c.allow_non_orthogonal};
}

std::size_t min_fit_points(const PipelineConfig& c) {
  return c.gmm_k * std::max<std::size_t>(c.em.min_points_per_component, 1);
}

// Redraws GMM samples whose labels miss the target, up to the retry cap.
void resample_check(SubgroupRun& run, Backend& backend, const std::vector<std::size_t>& cols,
                    const PipelineConfig& config, Rng& rng) {
  LatentSet& x = run.set.latents;
  for (std::size_t round = 0;; ++round) {
    const auto mask = label_mask(score_batch(backend, x), run.set.target, cols);
    std::vector<Eigen::Index> bad;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) bad.push_back(static_cast<Eigen::Index>(i));
    }
    if (bad.empty()) {
      run.set.provenance.shortfall = 0;
      return;
    }
    if (round >= config.resample_retry_cap) {
      // Cap hit: the remaining unverified draws stay, and are reported.
      run.set.provenance.shortfall = bad.size();
      return;
    }
    run.set.provenance.resample_rejections += bad.size();
    Rng local = rng.derive(round);
    const LatentSet fresh = sample_gmm(*run.mixture, bad.size(), local);
    for (std::size_t i = 0; i < bad.size(); ++i) x.row(bad[i]) = fresh.row(static_cast<Eigen::Index>(i));
  }
}

void fit_and_sample(SubgroupRun& run, const LatentSet& training, std::size_t n,
                    Backend& backend, const std::vector<std::size_t>& cols,
                    const PipelineConfig& config, Rng& rng) {
  Rng fit_rng = rng.derive(kFit);
  run.mixture = staged("gmm fit", [&] { return fit_gmm(training, config.gmm_k, config.em, fit_rng); });
  Rng sample_rng = rng.derive(kSample);
  run.set.latents = sample_gmm(*run.mixture, n, sample_rng);
  run.set.provenance.n_gmm_sampled = n;
  if (config.resample_gmm_check) {
    Rng check_rng = rng.derive(kResample);
    resample_check(run, backend, cols, config, check_rng);
  }
}

struct Attempt {
  LatentSet candidates;
  FilterResult filtered;
  bool ok = false;
  std::string reason;
};

// Edits (or draws, when `edit` is false) a batch and filters it by label.
Attempt edit_and_filter(Backend& backend, const EditPlan& plan, std::size_t n_edit, bool edit,
                        const std::vector<std::size_t>& cols, const PipelineConfig& config,
                        Rng rng) {
  Attempt a;
  a.candidates = edit ? build_edit_batch(backend, plan, n_edit, rng, edit_options(config))
                      : draw_prior(backend, n_edit, rng);
  try {
    a.filtered = filter_by_label(a.candidates, plan.target, backend, cols, config.min_acceptance);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kLowYield) throw;
    a.reason = e.what();
    return a;
  }
  if (static_cast<std::size_t>(a.filtered.kept.rows()) < min_fit_points(config)) {
    std::ostringstream msg;
    msg << "filter kept " << a.filtered.kept.rows() << " codes, fewer than the "
        << min_fit_points(config) << " needed to fit k=" << config.gmm_k;
    a.reason = msg.str();
    return a;
  }
  a.ok = true;
  return a;
}

SubgroupRun sample_subgroup(AblationVariant variant, Backend& backend,
                            const std::vector<SemanticBoundary>& boundaries,
                            const AttributeLabel& target, std::size_t n,
                            const PipelineConfig& config, Rng& rng) {
  require(n >= 1, ErrorKind::kInvalidInput, "conditional_sample: n must be >= 1");
  require(boundaries.size() == target.size(), ErrorKind::kPrecondition,
          "conditional_sample: one boundary per target attribute required");
  std::vector<std::string> names;
  for (const auto& b : boundaries) names.push_back(b.attribute);
  const auto cols = attribute_columns(backend.info(), names);
  const EditPlan plan = EditPlan::make(boundaries, target, config.alpha_magnitude);

  SubgroupRun run;
  run.set.target = target;
  auto& prov = run.set.provenance;

  switch (variant) {
    case AblationVariant::kNoGmm: {
      Rng edit_rng = rng.derive(kEdit);
      run.set.latents = build_edit_batch(backend, plan, n, edit_rng, edit_options(config));
      prov.n_edited = n;
      prov.n_kept_after_filter = n;
      return run;
    }
    case AblationVariant::kNoFilter: {
      Rng edit_rng = rng.derive(kEdit);
      const LatentSet edited =
          build_edit_batch(backend, plan, config.n_edit, edit_rng, edit_options(config));
      prov.n_edited = config.n_edit;
      prov.n_kept_after_filter = config.n_edit;
      fit_and_sample(run, edited, n, backend, cols, config, rng);
      return run;
    }
    case AblationVariant::kFull:
    case AblationVariant::kNoEdit:
      break;
  }

  const bool edit = variant == AblationVariant::kFull;
  Attempt a = edit_and_filter(backend, plan, config.n_edit, edit, cols, config, rng.derive(kEdit));
  if (!a.ok) {
    a = edit_and_filter(backend, plan, 2 * config.n_edit, edit, cols, config,
                        rng.derive(kEditRetry));
  }
  prov.n_edited = static_cast<std::size_t>(a.candidates.rows());
  if (!a.ok) {
    if (edit) {
      fail(ErrorKind::kPipeline,
           "subgroup " + target.to_string() + " failed after doubling n_edit: " + a.reason);
    }
    // Without editing a rare subgroup may stay underfilled; keep what matched.
    const auto mask = label_mask(score_batch(backend, a.candidates), target, cols);
    run.set.latents = select_rows(a.candidates, mask, n);
    prov.n_kept_after_filter = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    prov.shortfall = n - static_cast<std::size_t>(run.set.latents.rows());
    return run;
  }
  prov.n_kept_after_filter = static_cast<std::size_t>(a.filtered.kept.rows());
  fit_and_sample(run, a.filtered.kept, n, backend, cols, config, rng);
  return run;
}

FairLatentSet compose(std::vector<SubgroupLatentSet> parts, const PipelineConfig& config,
                      bool strict) {
  const std::size_t k = config.schema.subgroup_count();
  const std::size_t m = config.schema.target_count();
  require(parts.size() == k, ErrorKind::kInvalidInput,
          "compose_fair_set: expected " + std::to_string(k) + " subgroups, got " +
              std::to_string(parts.size()));
  std::vector<int> seen(k, 0);
  for (const auto& p : parts) {
    require(p.target.size() == m, ErrorKind::kInvalidInput, "compose_fair_set: wrong label length");
    const std::size_t idx = subgroup_index(p.target, m);
    require(seen[idx]++ == 0, ErrorKind::kInvalidInput,
            "compose_fair_set: duplicate subgroup " + p.target.to_string());
  }
  if (strict) {
    for (const auto& p : parts) {
      require(p.latents.rows() == parts.front().latents.rows(), ErrorKind::kInvalidInput,
              "compose_fair_set: subgroup sizes differ");
    }
  }
  const auto dim = parts.front().latents.cols();
  for (const auto& p : parts) {
    require(p.latents.rows() == 0 || p.latents.cols() == dim, ErrorKind::kDimension,
            "compose_fair_set: subgroup dimensions differ");
  }
  std::sort(parts.begin(), parts.end(), [&](const SubgroupLatentSet& a, const SubgroupLatentSet& b) {
    return subgroup_index(a.target, m) < subgroup_index(b.target, m);
  });
  FairLatentSet out;
  out.subgroups = std::move(parts);
  out.config = config;
  return out;
}

FairnessReport measure(Backend& backend, const FairLatentSet& fair, const JointDistribution& ref,
                       const PipelineConfig& config) {
  const auto labels = rescore_labels(backend, fair.stacked(), config.schema);
  require(!labels.empty(), ErrorKind::kPipeline, "no fair-set code could be scored");
  const JointDistribution dist = estimate_distribution(labels, config.schema, config.pseudo_count);
  return fairness_discrepancy(dist, ref, config.beta,
                              "baseline seed=" + std::to_string(config.seed));
}

PipelineResult run_variant(AblationVariant variant, Backend& backend, const PipelineConfig& config,
                           const std::vector<SemanticBoundary>* preloaded) {
  config.validate();
  PipelineResult result;
  if (preloaded != nullptr) {
    result.boundaries = boundaries_for_targets(*preloaded, config, backend.info().dim);
  } else {
    result.boundaries = staged("boundaries", [&] { return train_target_boundaries(backend, config); });
  }
  const std::size_t m = config.schema.target_count();
  const std::size_t per = config.per_subgroup();
  std::vector<SubgroupLatentSet> parts;
  for (std::size_t s = 0; s < config.schema.subgroup_count(); ++s) {
    const AttributeLabel target = subgroup_label(s, m);
    Rng rng = Rng(config.seed, kStreamSubgroups).derive(s);
    SubgroupRun run = staged("subgroup " + target.to_string(), [&] {
      return sample_subgroup(variant, backend, result.boundaries, target, per, config, rng);
    });
    parts.push_back(std::move(run.set));
    result.mixtures.push_back(std::move(run.mixture));
  }
  result.fair = compose(std::move(parts), config, variant != AblationVariant::kNoEdit);
  const JointDistribution ref =
      staged("baseline", [&] { return baseline_distribution(backend, config); });
  result.report = staged("report", [&] { return measure(backend, result.fair, ref, config); });
  result.baseline = fairness_discrepancy(ref, ref, config.beta,
                                         "baseline seed=" + std::to_string(config.seed));
  return result;
}

}  // namespace

void PipelineConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorKind::kInvalidInput, "pipeline config: " + msg); };
  if (schema.target_count() == 0) bad("schema has no target attributes");
  if (total_n == 0 || total_n % schema.subgroup_count() != 0) {
    bad("total_n=" + std::to_string(total_n) + " is not a positive multiple of K=" +
        std::to_string(schema.subgroup_count()));
  }
  if (!(alpha_magnitude > 0.0) || !std::isfinite(alpha_magnitude)) bad("alpha must be positive");
  if (n_edit == 0 || gmm_k == 0) bad("n_edit and gmm_k must be positive");
  if (!(beta >= 0.0)) bad("beta must be >= 0");
  if (!(extreme_fraction > 0.0 && extreme_fraction <= 0.5)) bad("extreme_fraction must lie in (0, 0.5]");
  if (corpus_n < 100) bad("corpus_n must be >= 100");
  if (!(pseudo_count >= 0.0)) bad("pseudo_count must be >= 0");
  if (!(min_acceptance >= 0.0 && min_acceptance <= 1.0)) bad("min_acceptance must lie in [0, 1]");
}

std::size_t FairLatentSet::size() const {
  std::size_t n = 0;
  for (const auto& s : subgroups) n += static_cast<std::size_t>(s.latents.rows());
  return n;
}

LatentSet FairLatentSet::stacked() const {
  Eigen::Index dim = 0;
  for (const auto& s : subgroups) dim = std::max(dim, s.latents.cols());
  LatentSet out(static_cast<Eigen::Index>(size()), dim);
  Eigen::Index r = 0;
  for (const auto& s : subgroups) {
    if (s.latents.rows() == 0) continue;
    out.middleRows(r, s.latents.rows()) = s.latents;
    r += s.latents.rows();
  }
  return out;
}

std::vector<AttributeLabel> FairLatentSet::membership() const {
  std::vector<AttributeLabel> out;
  out.reserve(size());
  for (const auto& s : subgroups) {
    for (Eigen::Index i = 0; i < s.latents.rows(); ++i) out.push_back(s.target);
  }
  return out;
}

SubgroupRun conditional_sample(Backend& backend, const std::vector<SemanticBoundary>& boundaries,
                               const AttributeLabel& target, std::size_t n,
                               const PipelineConfig& config, Rng& rng) {
  return sample_subgroup(AblationVariant::kFull, backend, boundaries, target, n, config, rng);
}

FairLatentSet compose_fair_set(std::vector<SubgroupLatentSet> parts, const PipelineConfig& config) {
  return compose(std::move(parts), config, true);
}

std::vector<SemanticBoundary> train_target_boundaries(Backend& backend, const PipelineConfig& config) {
  BoundaryTrainingConfig bc;
  bc.corpus_n = config.corpus_n;
  bc.extreme_fraction = config.extreme_fraction;
  bc.svm = config.svm;
  bc.svm.seed = config.seed;
  Rng rng(config.seed, kStreamBoundaries);
  return train_boundaries(backend, config.schema.target_names(), bc, rng);
}

std::vector<AttributeLabel> rescore_labels(Backend& backend, const LatentSet& latents,
                                           const AttributeSchema& schema, std::size_t* skipped) {
  const auto cols = attribute_columns(backend.info(), schema.names());
  const ScoreMatrix scores = score_batch(backend, latents);
  std::vector<AttributeLabel> labels;
  labels.reserve(static_cast<std::size_t>(latents.rows()));
  std::size_t dropped = 0;
  std::vector<double> row(cols.size());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    bool finite = true;
    for (std::size_t a = 0; a < cols.size(); ++a) {
      row[a] = scores(i, static_cast<Eigen::Index>(cols[a]));
      finite = finite && std::isfinite(row[a]);
    }
    if (!finite) {
      ++dropped;
      continue;
    }
    labels.push_back(make_label(row));
  }
  if (skipped != nullptr) *skipped = dropped;
  return labels;
}

JointDistribution baseline_distribution(Backend& backend, const PipelineConfig& config) {
  Rng rng(config.seed, kStreamBaseline);
  const LatentSet prior = draw_prior(backend, config.total_n, rng);
  const auto labels = rescore_labels(backend, prior, config.schema);
  require(!labels.empty(), ErrorKind::kPipeline, "no baseline code could be scored");
  return estimate_distribution(labels, config.schema, config.pseudo_count);
}

PipelineResult run_pipeline(Backend& backend, const PipelineConfig& config,
                            const std::vector<SemanticBoundary>* boundaries) {
  return run_variant(AblationVariant::kFull, backend, config, boundaries);
}

std::string_view to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoEdit: return "no_edit";
    case AblationVariant::kNoFilter: return "no_filter";
    case AblationVariant::kNoGmm: return "no_gmm";
  }
  return "full";
}

AblationVariant parse_variant(std::string_view name) {
  for (auto v : {AblationVariant::kFull, AblationVariant::kNoEdit, AblationVariant::kNoFilter,
                 AblationVariant::kNoGmm}) {
    if (to_string(v) == name) return v;
  }
  fail(ErrorKind::kInvalidInput, "unknown ablation variant '" + std::string(name) +
                                     "' (expected full, no_edit, no_filter or no_gmm)");
}

PipelineResult run_ablation(AblationVariant variant, Backend& backend, const PipelineConfig& config,
                            const std::vector<SemanticBoundary>* boundaries) {
  return run_variant(variant, backend, config, boundaries);
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kAlpha: return "alpha";
    case SweepParam::kNEdit: return "n_edit";
    case SweepParam::kGmmK: return "gmm_k";
  }
  return "alpha";
}

SweepParam parse_sweep_param(std::string_view name) {
  for (auto p : {SweepParam::kAlpha, SweepParam::kNEdit, SweepParam::kGmmK}) {
    if (to_string(p) == name) return p;
  }
  fail(ErrorKind::kInvalidInput,
       "unknown sweep parameter '" + std::string(name) + "' (expected alpha, n_edit or gmm_k)");
}

SweepReport hyperparameter_sweep(SweepParam param, const std::vector<double>& values,
                                 Backend& backend, const PipelineConfig& config,
                                 const std::vector<SemanticBoundary>* boundaries) {
  require(values.size() >= 2, ErrorKind::kInvalidInput, "sweep needs at least two values");
  for (double v : values) {
    require(std::isfinite(v) && v > 0.0, ErrorKind::kInvalidInput, "sweep values must be positive");
    if (param != SweepParam::kAlpha) {
      require(v == std::floor(v), ErrorKind::kInvalidInput, "n_edit and gmm_k values must be integers");
    }
  }
  config.validate();
  std::vector<SemanticBoundary> trained;
  if (boundaries == nullptr) {
    trained = staged("boundaries", [&] { return train_target_boundaries(backend, config); });
    boundaries = &trained;
  }
  SweepReport report;
  report.param = param;
  const JointDistribution ref = baseline_distribution(backend, config);
  report.baseline = fairness_discrepancy(ref, ref, config.beta,
                                         "baseline seed=" + std::to_string(config.seed));
  for (double v : values) {
    PipelineConfig c = config;
    switch (param) {
      case SweepParam::kAlpha: c.alpha_magnitude = v; break;
      case SweepParam::kNEdit: c.n_edit = static_cast<std::size_t>(v); break;
      case SweepParam::kGmmK: c.gmm_k = static_cast<std::size_t>(v); break;
    }
    SweepEntry entry;
    entry.value = v;
    try {
      entry.report = run_pipeline(backend, c, boundaries).report;
    } catch (const Error& e) {
      entry.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace lds
