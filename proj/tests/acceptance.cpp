// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances and time budgets are pinned below.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lds/artifacts.hpp"
#include "lds/audit.hpp"
#include "lds/commands.hpp"
#include "lds/config.hpp"
#include "lds/sampler.hpp"
#include "lds/synthetic.hpp"

using namespace lds;
namespace fs = std::filesystem;

namespace {

constexpr double kEditTol = 1e-9;
constexpr double kOracleTol = 1e-12;
constexpr double kCosEach = 0.95;
constexpr double kCosMedian = 0.99;
constexpr double kBaselineFloor = 0.3;
constexpr double kFairCeiling = 0.05;
constexpr double kReduction = 10.0;
constexpr double kMonotoneSlack = 1e-9;
constexpr double kMleTol = 1e-8;
constexpr double kAlphaGain = 0.02;
constexpr double kKSlack = 0.02;
constexpr double kFlipRate = 0.2;
constexpr double kFlipTol = 0.015;
constexpr double kMinorityAlternation = 0.99;
constexpr double kMajorityAlternation = 0.01;

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

SkewedWorldOptions skew_world(std::uint64_t seed) {
  SkewedWorldOptions o;
  o.dim = 64;
  o.attributes = {"a0", "a1", "c0"};
  o.positive_rates = {0.15, 0.2, 0.3};
  o.threshold_skew = true;
  o.seed = seed;
  return o;
}

PipelineConfig two_target_config(std::uint64_t seed) {
  PipelineConfig c;
  c.schema = AttributeSchema::from_names({"a0", "a1", "c0"}, {"a0", "a1"});
  c.total_n = 2000;
  c.seed = seed;
  return c;
}

// 1: distance to the hyperplane after an edit equals alpha.
Outcome edit_exactness() {
  Rng rng(101, 0);
  double worst = 0.0;
  for (std::size_t dim : {8, 64, 512}) {
    for (int t = 0; t < 10000; ++t) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
      Eigen::VectorXd n(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = 3.0 * rng.normal();
        n[i] = rng.normal();
      }
      SemanticBoundary b;
      b.normal = n.normalized();
      const double alpha = rng.uniform() < 0.5 ? 3.0 : -3.0;
      worst = std::max(worst, std::abs(b.normal.dot(edit_single(z, b, alpha)) - alpha));
    }
  }
  return {worst <= kEditTol, "max |n.z' - alpha| = " + fmt("%.3g", worst)};
}

// 2: metrics against direct summation, written independently of the library.
Outcome metric_oracle() {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 3);
    const std::size_t mc = static_cast<std::size_t>((trial / 3) % 3);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < m + mc; ++i) names.push_back("x" + std::to_string(i));
    const auto s = AttributeSchema::from_names(names, std::vector<std::string>(names.begin(), names.begin() + static_cast<long>(m)));
    const std::size_t k = std::size_t{1} << m;
    const std::size_t kc = std::size_t{1} << mc;
    auto draw = [&] {
      std::vector<double> p(k * kc);
      double t = 0.0;
      for (auto& x : p) t += (x = 0.01 + u(gen));
      for (auto& x : p) x /= t;
      return p;
    };
    const auto pf = draw();
    const auto pr = draw();
    const double beta = u(gen);

    double kl = 0.0;
    for (std::size_t i = 0; i < pf.size(); ++i) kl += pf[i] * std::log(pf[i] / pr[i]);
    worst = std::max(worst, std::abs(kl_divergence(pf, pr) - kl));

    double fu = 0.0;
    double cond = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      double mf = 0.0;
      double mr = 0.0;
      for (std::size_t c = 0; c < kc; ++c) {
        mf += pf[t * kc + c];
        mr += pr[t * kc + c];
      }
      fu += mf * std::log(mf / (1.0 / static_cast<double>(k)));
      double inner = 0.0;
      for (std::size_t c = 0; c < kc; ++c) {
        const double a = pf[t * kc + c] / mf;
        inner += a * std::log(a / (pr[t * kc + c] / mr));
      }
      cond += mf * inner;
    }
    const auto jf = JointDistribution::from_probabilities(s, pf);
    const auto jr = JointDistribution::from_probabilities(s, pr);
    worst = std::max(worst, std::abs(imbalance_score(jf) - fu));
    worst = std::max(worst, std::abs(fairness_discrepancy(jf, jr, beta).discrepancy - (fu + beta * cond)));
  }
  return {worst <= kOracleTol, "max deviation = " + fmt("%.3g", worst)};
}

// 3: learned normals line up with the planted ones.
Outcome boundary_recovery() {
  std::vector<double> cosines;
  double least = 1.0;
  for (auto seed : kSeeds) {
    SyntheticBackend be(make_skewed_spec(skew_world(seed)), seed);
    BoundaryTrainingConfig cfg;
    cfg.corpus_n = 10000;
    cfg.extreme_fraction = 0.02;
    Rng rng(seed, 3);
    const auto bs = train_boundaries(be, be.info().attributes, cfg, rng);
    for (std::size_t i = 0; i < bs.size(); ++i) {
      const double c = bs[i].normal.dot(be.ground_truth().attributes[i].normal);
      cosines.push_back(c);
      least = std::min(least, c);
    }
  }
  const double med = median(cosines);
  return {least >= kCosEach && med >= kCosMedian,
          "min cos = " + fmt("%.4f", least) + ", median = " + fmt("%.4f", med)};
}

// 4: end-to-end reduction at default hyper-parameters.
Outcome fairness_reduction() {
  std::vector<double> base;
  std::vector<double> fair;
  std::vector<double> ratio;
  for (auto seed : kSeeds) {
    auto world = skew_world(seed);
    SyntheticBackend be(make_skewed_spec(world), seed);
    const auto r = run_pipeline(be, two_target_config(seed));
    base.push_back(r.baseline.discrepancy);
    fair.push_back(r.report.discrepancy);
    ratio.push_back(r.baseline.discrepancy / std::max(r.report.discrepancy, 1e-300));
  }
  const double b = median(base);
  const double f = median(fair);
  const double x = median(ratio);
  return {b >= kBaselineFloor && f <= kFairCeiling && x >= kReduction,
          "median baseline = " + fmt("%.4f", b) + ", fair = " + fmt("%.5f", f) +
              ", reduction = " + fmt("%.1fx", x)};
}

// 5: each pipeline stage earns its place under score noise.
Outcome ablation_ordering() {
  const std::vector<AblationVariant> variants{AblationVariant::kFull, AblationVariant::kNoEdit,
                                              AblationVariant::kNoFilter, AblationVariant::kNoGmm};
  std::vector<std::vector<double>> f(variants.size());
  for (auto seed : kSeeds) {
    auto world = skew_world(seed);
    world.noise = 0.05;
    world.bump = 5.0;
    world.bump_threshold = 1.5;
    SyntheticBackend be(make_skewed_spec(world), seed);
    auto cfg = two_target_config(seed);
    cfg.corpus_n = 10000;
    const auto bs = train_target_boundaries(be, cfg);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      f[v].push_back(run_ablation(variants[v], be, cfg, &bs).report.discrepancy);
    }
  }
  std::vector<double> med;
  for (const auto& x : f) med.push_back(median(x));
  bool ok = true;
  std::string detail = "medians";
  for (std::size_t v = 0; v < variants.size(); ++v) {
    detail += std::string(" ") + std::string(to_string(variants[v])) + "=" + fmt("%.5f", med[v]);
    ok = ok && med[0] <= med[v];
  }
  return {ok, detail};
}

// 6: EM never loses likelihood and matches the closed-form two-point fit.
Outcome em_monotonicity() {
  double worst_drop = 0.0;
  std::size_t fits = 0;
  for (auto mode : {CovarianceMode::kDiagonal, CovarianceMode::kFull}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng data(seed, 6);
      LatentSet x(400, 4);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double shift = static_cast<double>(i % 3) * 2.5;
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = data.normal() + shift;
      }
      EmConfig cfg;
      cfg.mode = mode;
      cfg.n_init = 1;
      Rng rng(seed, 7);
      const auto g = fit_gmm(x, 1 + seed % 5, cfg, rng);
      ++fits;
      const auto& t = g.fit_meta.trace;
      for (std::size_t i = 1; i < t.size(); ++i) {
        const double slack = kMonotoneSlack * std::max(1.0, std::abs(t[i - 1]));
        worst_drop = std::max(worst_drop, (t[i - 1] - t[i]) - slack);
      }
    }
  }
  LatentSet two(2, 2);
  two << 0, 0, 2, 0;
  EmConfig cfg;
  cfg.min_points_per_component = 1;
  Rng rng(1, 1);
  const auto g = fit_gmm(two, 1, cfg, rng);
  const double floor = cfg.variance_floor;
  const double err = std::max({std::abs(g.means(0, 0) - 1.0), std::abs(g.means(0, 1)),
                               std::abs(g.variances(0, 0) - (1.0 + floor)),
                               std::abs(g.variances(0, 1) - floor)});
  return {worst_drop <= 0.0 && err <= kMleTol,
          std::to_string(fits) + " fits monotone, two-point MLE error = " + fmt("%.3g", err)};
}

// 7: alpha and k sweeps.
Outcome hyperparameter_trend() {
  const std::vector<double> alphas{0.5, 1, 2, 3, 4};
  const std::vector<double> ks{1, 2, 5, 10};
  std::vector<std::vector<double>> fa(alphas.size());
  std::vector<std::vector<double>> fk(ks.size());
  for (auto seed : kSeeds) {
    auto world = skew_world(seed);
    world.positive_rates = {0.35, 0.4, 0.3};
    world.noise = 0.05;
    SyntheticBackend be(make_skewed_spec(world), seed);
    auto cfg = two_target_config(seed);
    cfg.corpus_n = 10000;
    const auto bs = train_target_boundaries(be, cfg);
    const auto a = hyperparameter_sweep(SweepParam::kAlpha, alphas, be, cfg, &bs);
    const auto k = hyperparameter_sweep(SweepParam::kGmmK, ks, be, cfg, &bs);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      fa[i].push_back(a.entries[i].report ? a.entries[i].report->discrepancy : INFINITY);
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
      fk[i].push_back(k.entries[i].report ? k.entries[i].report->discrepancy : INFINITY);
    }
  }
  std::vector<double> ma;
  std::vector<double> mk;
  for (const auto& x : fa) ma.push_back(median(x));
  for (const auto& x : fk) mk.push_back(median(x));
  bool ok = ma[3] <= ma[0] - kAlphaGain && mk[3] <= mk[0] + kKSlack;
  for (std::size_t i = 1; i < mk.size(); ++i) ok = ok && mk[i] <= mk[i - 1] + kKSlack;
  std::string detail = "alpha:";
  for (double v : ma) detail += " " + fmt("%.4f", v);
  detail += "; k:";
  for (double v : mk) detail += " " + fmt("%.4f", v);
  return {ok, detail};
}

// 8: audits recover planted error and alternation rates.
Outcome audit_correctness() {
  auto world = skew_world(8);
  world.dim = 16;
  auto spec = make_skewed_spec(world);
  spec.transform.kind = TransformSpec::Kind::kIdentity;
  SyntheticBackend identity(spec, 8);
  // a0 is positive for 15% of the prior; the regressor pulls every code to the
  // majority (negative) side.
  spec.transform = {TransformSpec::Kind::kMajorityRegressor, 0, 1.0, 0.0};
  SyntheticBackend regressor(spec, 8);

  // 2 500 prior draws per (a0, a1) subgroup, grouped by their scored labels.
  constexpr Eigen::Index kPerGroup = 2500;
  std::vector<SubgroupLatentSet> sets(4);
  std::vector<Eigen::Index> filled(4, 0);
  for (std::size_t g = 0; g < 4; ++g) {
    sets[g].target = subgroup_label(g, 2);
    sets[g].latents.resize(kPerGroup, static_cast<Eigen::Index>(world.dim));
  }
  Rng draw(8, 8);
  while (*std::min_element(filled.begin(), filled.end()) < kPerGroup) {
    const auto x = identity.sample_prior(kMaxBatch, draw);
    const auto s = identity.score(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const std::size_t g = (s(i, 0) >= 0.0 ? 2u : 0u) + (s(i, 1) >= 0.0 ? 1u : 0u);
      if (filled[g] < kPerGroup) sets[g].latents.row(filled[g]++) = x.row(i);
    }
  }
  const std::vector<std::string> targets{"a0", "a1"};

  // Flip a0 on the (a0=1, a1=1) subgroup only.
  FlipClassifier flip(identity, {0, kFlipRate, {{0, 1}, {1, 1}}}, 88);
  const auto err = classifier_error_audit(sets, targets, flip, "a0");
  const double measured = err.error_rates[3];

  const auto same = transform_alternation_audit(sets, identity, identity, {"a0", "a1"});
  double identity_max = 0.0;
  for (const auto& row : same.rates) {
    for (double v : row) identity_max = std::max(identity_max, v);
  }
  const auto moved = transform_alternation_audit(sets, regressor, identity, {"a0"});
  const double minority = std::min(moved.rates[0][2], moved.rates[0][3]);
  const double majority = std::max(moved.rates[0][0], moved.rates[0][1]);

  return {std::abs(measured - kFlipRate) <= kFlipTol &&
              identity_max == 0.0 && minority >= kMinorityAlternation && majority <= kMajorityAlternation,
          "flip " + fmt("%.4f", measured) + " on n=2500, identity " + fmt("%.3f", identity_max) +
              ", alternation minority " + fmt("%.4f", minority) + " / majority " + fmt("%.4f", majority)};
}

// 9: two sample-fair runs write identical bytes.
Outcome reproducibility() {
  ::setenv("SOURCE_DATE_EPOCH", "1767225600", 1);
  const auto root = fs::temp_directory_path() / ("lds_acceptance_" + std::to_string(::getpid()));
  std::vector<fs::path> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    auto cfg = default_run_config();
    cfg.artifacts = d.string();
    cmd_sample_fair(cfg);
  }
  std::size_t files = 0;
  bool same = true;
  std::string diff;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    if (name == kLockFile) continue;
    ++files;
    const auto other = dirs[1] / name;
    if (!fs::exists(other) || read_file(entry.path().string()) != read_file(other.string())) {
      same = false;
      diff += " " + name.string();
    }
  }
  std::size_t files_b = 0;
  for (const auto& entry : fs::directory_iterator(dirs[1])) files_b += entry.path().filename() != kLockFile;
  fs::remove_all(root);
  same = same && files == files_b && files > 0;
  return {same, std::to_string(files) + " files compared" + (diff.empty() ? "" : ", differing:" + diff)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "edit exactness", 5, edit_exactness},
      {2, "metric oracle equivalence", 10, metric_oracle},
      {3, "boundary recovery", 60, boundary_recovery},
      {4, "end-to-end fairness reduction", 180, fairness_reduction},
      {5, "ablation ordering", 600, ablation_ordering},
      {6, "EM monotonicity", 5, em_monotonicity},
      {7, "hyper-parameter trend", 600, hyperparameter_trend},
      {8, "audit correctness", 60, audit_correctness},
      {9, "reproducibility", 600, reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %d %-30s %s  %s  [%.1fs / %.0fs%s]\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
