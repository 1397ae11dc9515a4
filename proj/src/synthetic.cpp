// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/synthetic.hpp"

#include <bit>
#include <cmath>

namespace lds {

namespace {

constexpr double kMaxCondition = 100.0;
constexpr double kUnitTolerance = 1e-9;

void validate(const SyntheticSpec& spec) {
  auto invalid = [](const std::string& msg) { fail(ErrorKind::kInvalidInput, "invalid synthetic spec: " + msg); };
  if (spec.dim == 0 || spec.base_dim == 0) invalid("dimensions must be positive");
  if (spec.mapping.rows() != static_cast<Eigen::Index>(spec.dim) ||
      spec.mapping.cols() != static_cast<Eigen::Index>(spec.base_dim)) {
    invalid("mapping must be dim x base_dim");
  }
  if (spec.offset.size() != static_cast<Eigen::Index>(spec.dim)) invalid("offset length != dim");
  if (!spec.mapping.allFinite() || !spec.offset.allFinite()) invalid("non-finite mapping");
  const double cond = condition_number(spec.mapping);
  if (!(cond <= kMaxCondition)) {
    invalid("mapping condition number " + std::to_string(cond) + " exceeds 100");
  }
  if (spec.attributes.empty()) invalid("no attributes");
  for (const auto& a : spec.attributes) {
    if (a.normal.size() != static_cast<Eigen::Index>(spec.dim)) invalid("normal length != dim");
    if (std::abs(a.normal.norm() - 1.0) > kUnitTolerance) invalid("normal of '" + a.name + "' is not unit");
    if (!(a.steepness > 0.0) || !(a.noise >= 0.0)) invalid("steepness must be > 0, noise >= 0");
    if (a.bump != 0.0) {
      if (a.bump_direction.size() != static_cast<Eigen::Index>(spec.dim) ||
          std::abs(a.bump_direction.norm() - 1.0) > kUnitTolerance) {
        invalid("bump direction of '" + a.name + "' must be a unit vector");
      }
      if (!(a.bump_width > 0.0)) invalid("bump width must be positive");
    }
  }
  if (spec.prior.empty()) invalid("empty prior");
  double total = 0.0;
  for (const auto& c : spec.prior) {
    if (!(c.weight >= 0.0) || !(c.scale > 0.0)) invalid("prior weights >= 0 and scales > 0 required");
    if (c.mean.size() != static_cast<Eigen::Index>(spec.base_dim)) invalid("prior mean length != base_dim");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) invalid("prior weights must sum to 1");
  if (spec.transform.kind == TransformSpec::Kind::kMajorityRegressor &&
      spec.transform.attribute >= spec.attributes.size()) {
    invalid("transform attribute out of range");
  }
}

}  // namespace

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] <= 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

SyntheticBackend::SyntheticBackend(SyntheticSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
  validate(spec_);
  info_.dim = spec_.dim;
  for (const auto& a : spec_.attributes) info_.attributes.push_back(a.name);
  info_.can_transform = spec_.transform.kind != TransformSpec::Kind::kNone;
  double acc = 0.0;
  for (const auto& c : spec_.prior) {
    acc += c.weight;
    cumulative_weights_.push_back(acc);
  }
}

LatentSet SyntheticBackend::sample_prior(std::size_t n, Rng& rng) {
  LatentSet out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec_.dim));
  Eigen::VectorXd z(static_cast<Eigen::Index>(spec_.base_dim));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * cumulative_weights_.back();
    std::size_t j = 0;
    while (j + 1 < cumulative_weights_.size() && u >= cumulative_weights_[j]) ++j;
    const auto& comp = spec_.prior[j];
    for (Eigen::Index d = 0; d < z.size(); ++d) z[d] = comp.mean[d] + comp.scale * rng.normal();
    out.row(static_cast<Eigen::Index>(i)) = (spec_.mapping * z + spec_.offset).transpose();
  }
  return out;
}

double SyntheticBackend::clean_score(const CodeRef& w, std::size_t attribute) const {
  const auto& a = spec_.attributes.at(attribute);
  double t = a.normal.dot(w) - a.offset;
  if (a.bump != 0.0) {
    double u = a.bump_direction.dot(w);
    if (a.bump_two_sided) u = std::abs(u);
    t += a.bump / (1.0 + std::exp(-(u - a.bump_threshold) / a.bump_width));
  }
  t *= a.steepness;
  return spec_.mode == ScoreMode::kTanh ? std::tanh(t) : t;
}

ScoreMatrix SyntheticBackend::score(const LatentSet& latents) {
  require(latents.rows() == 0 || latents.cols() == static_cast<Eigen::Index>(spec_.dim),
          ErrorKind::kDimension, "synthetic score: dimension mismatch");
  const auto n_attr = static_cast<Eigen::Index>(spec_.attributes.size());
  ScoreMatrix out(latents.rows(), n_attr);
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    const Eigen::VectorXd w = latents.row(i).transpose();
    bool noisy = false;
    for (const auto& a : spec_.attributes) noisy = noisy || a.noise > 0.0;
    // Noise is keyed on the latent's bits so repeated scoring is exact.
    SplitMix64 gen(noisy ? hash_latent(w, seed_) : 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index k = 0; k < n_attr; ++k) {
      double s = clean_score(w, static_cast<std::size_t>(k));
      const double sigma = spec_.attributes[static_cast<std::size_t>(k)].noise;
      if (noisy) {
        const double e = gauss(gen);
        s += sigma * e;
      }
      out(i, k) = s;
    }
  }
  return out;
}

LatentSet SyntheticBackend::transform(const LatentSet& latents) {
  const auto& t = spec_.transform;
  switch (t.kind) {
    case TransformSpec::Kind::kNone:
      fail(ErrorKind::kUnsupportedOp, "synthetic backend has no transform configured");
    case TransformSpec::Kind::kIdentity:
      return latents;
    case TransformSpec::Kind::kMajorityRegressor: {
      const auto& n = spec_.attributes[t.attribute].normal;
      LatentSet out = latents;
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double d = out.row(i).dot(n.transpose());
        out.row(i) -= (t.gamma * (d - t.center)) * n.transpose();
      }
      return out;
    }
  }
  return latents;
}

std::uint64_t hash_latent(const CodeRef& w, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ 0x6c64732d6e6f6973ULL);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    h = mix64(h ^ std::bit_cast<std::uint64_t>(w[i]));
  }
  return h;
}

FlipClassifier::FlipClassifier(Backend& inner, FlipRule rule, std::uint64_t seed)
    : inner_(inner), rule_(std::move(rule)), seed_(seed) {
  const auto n_attr = inner_.info().attributes.size();
  require(rule_.attribute < n_attr, ErrorKind::kInvalidInput, "flip rule: attribute out of range");
  require(rule_.rate >= 0.0 && rule_.rate <= 1.0, ErrorKind::kInvalidInput,
          "flip rule: rate must lie in [0, 1]");
  for (const auto& [column, bit] : rule_.when) {
    require(column < n_attr && bit <= 1, ErrorKind::kInvalidInput, "flip rule: bad condition");
  }
}

ScoreMatrix FlipClassifier::score(const LatentSet& latents) {
  ScoreMatrix out = inner_.score(latents);
  const auto col = static_cast<Eigen::Index>(rule_.attribute);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    bool applies = true;
    for (const auto& [column, bit] : rule_.when) {
      const double s = out(i, static_cast<Eigen::Index>(column));
      applies = applies && std::isfinite(s) && (s >= 0.0 ? 1u : 0u) == bit;
    }
    if (!applies) continue;
    SplitMix64 gen(hash_latent(latents.row(i).transpose(), seed_));
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    if (u >= rule_.rate) continue;
    // Negate, mapping 0 to a negative value so the label really flips.
    const double s = out(i, col);
    out(i, col) = s >= 0.0 ? -(s + 1.0) : -s;
  }
  return out;
}

std::unique_ptr<SyntheticBackend> make_synthetic(SyntheticSpec spec, std::uint64_t seed) {
  return std::make_unique<SyntheticBackend>(std::move(spec), seed);
}

namespace {

// x with P(N(0,1) > x) = p, by bisection on erfc.
double upper_normal_quantile(double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SyntheticSpec make_skewed_spec(const SkewedWorldOptions& o) {
  const std::size_t n_attr = o.attributes.size();
  require(n_attr > 0, ErrorKind::kInvalidInput, "skewed world needs attributes");
  require(o.positive_rates.size() == n_attr, ErrorKind::kInvalidInput,
          "one positive rate per attribute required");
  require(n_attr <= 10, ErrorKind::kInvalidInput, "skewed world supports at most 10 attributes");
  require(o.dim >= 2 * n_attr, ErrorKind::kInvalidInput,
          "dim must be at least twice the attribute count");
  require(o.anisotropy >= 1.0 && o.anisotropy <= kMaxCondition, ErrorKind::kInvalidInput,
          "anisotropy must lie in [1, 100]");
  for (double p : o.positive_rates) {
    require(p >= 0.0 && p <= 1.0, ErrorKind::kInvalidInput, "positive rates must lie in [0, 1]");
    require(!o.threshold_skew || (p > 0.0 && p < 1.0), ErrorKind::kInvalidInput,
            "threshold skew needs positive rates strictly inside (0, 1)");
  }

  const auto d = static_cast<Eigen::Index>(o.dim);
  Rng rng(o.seed, 0x736b6577ULL);
  auto random_orthogonal = [&]() {
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Fix column signs so the factorization is unique.
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    return q;
  };

  const Eigen::MatrixXd frame = random_orthogonal();  // columns: normals, then bump directions
  const Eigen::MatrixXd rotation = random_orthogonal();
  Eigen::VectorXd scales(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    scales[i] = std::pow(o.anisotropy, t);
  }

  SyntheticSpec spec;
  spec.dim = o.dim;
  spec.base_dim = o.dim;
  spec.mapping = rotation * scales.asDiagonal();
  spec.offset = Eigen::VectorXd::Zero(d);
  spec.mode = o.mode;

  // Prior std of a projection u.w is |mapping^T u| for unit-scale components.
  for (std::size_t i = 0; i < n_attr; ++i) {
    PlantedAttribute a;
    a.name = o.attributes[i];
    a.normal = frame.col(static_cast<Eigen::Index>(i));
    a.steepness = o.steepness;
    a.noise = o.noise;
    a.bump = o.bump;
    a.bump_direction = frame.col(static_cast<Eigen::Index>(n_attr + i));
    a.bump_threshold = o.bump_threshold * (spec.mapping.transpose() * a.bump_direction).norm();
    a.bump_width = o.bump_width;
    a.bump_two_sided = o.bump_two_sided;
    if (o.threshold_skew) {
      const double sd = (spec.mapping.transpose() * a.normal).norm();
      a.offset = sd * upper_normal_quantile(o.positive_rates[i]);
    }
    spec.attributes.push_back(std::move(a));
  }
  if (o.threshold_skew) {
    spec.prior.push_back(PriorComponent{1.0, Eigen::VectorXd::Zero(d), 1.0});
    return spec;
  }

  const Eigen::MatrixXd inverse = spec.mapping.inverse();
  const std::size_t n_comp = std::size_t{1} << n_attr;
  for (std::size_t c = 0; c < n_comp; ++c) {
    double weight = 1.0;
    Eigen::VectorXd mean_w = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < n_attr; ++i) {
      const bool positive = (c >> (n_attr - 1 - i)) & 1u;
      const auto& a = spec.attributes[i];
      const double sd = (spec.mapping.transpose() * a.normal).norm();
      weight *= positive ? o.positive_rates[i] : 1.0 - o.positive_rates[i];
      mean_w += (positive ? 1.0 : -1.0) * o.separation * sd * a.normal;
    }
    if (weight == 0.0) continue;
    spec.prior.push_back(PriorComponent{weight, inverse * mean_w, 1.0});
  }
  double total = 0.0;
  for (const auto& c : spec.prior) total += c.weight;
  for (auto& c : spec.prior) c.weight /= total;
  return spec;
}

}  // namespace lds
