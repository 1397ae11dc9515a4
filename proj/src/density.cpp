// Copyright 2026 The fairlds Authors
// SPDX-License-Identifier: Apache-2.0

#include "lds/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lds {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double m = v.maxCoeff();
  if (m == kNegInf) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

// Per-component state that is expensive to rebuild on every density query.
struct Prepared {
  std::vector<double> log_norm;  // log w_j - 0.5 (d ln 2pi + ln det Sigma_j)
  Eigen::MatrixXd inv_var;       // diagonal mode
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;  // full mode
};

Prepared prepare(const GaussianMixture& g) {
  Prepared p;
  const auto k = static_cast<Eigen::Index>(g.k());
  const double d = static_cast<double>(g.dim());
  p.log_norm.resize(g.k());
  if (g.mode == CovarianceMode::kDiagonal) {
    p.inv_var = g.variances.cwiseInverse();
    for (Eigen::Index j = 0; j < k; ++j) {
      const double log_det = g.variances.row(j).array().log().sum();
      p.log_norm[static_cast<std::size_t>(j)] = std::log(g.weights[j]) - 0.5 * (d * kLog2Pi + log_det);
    }
  } else {
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::LLT<Eigen::MatrixXd> llt(g.covariances[static_cast<std::size_t>(j)]);
      require(llt.info() == Eigen::Success, ErrorKind::kNumeric,
              "gaussian mixture: covariance is not positive definite");
      const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      p.log_norm[static_cast<std::size_t>(j)] = std::log(g.weights[j]) - 0.5 * (d * kLog2Pi + log_det);
      p.chol.push_back(std::move(llt));
    }
  }
  return p;
}

// N x k matrix of log(w_j N(x_i; mu_j, Sigma_j)).
Eigen::MatrixXd joint_log(const GaussianMixture& g, const Prepared& p, const LatentSet& x) {
  const auto n = x.rows();
  const auto k = static_cast<Eigen::Index>(g.k());
  Eigen::MatrixXd out(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::MatrixXd diff = x.rowwise() - g.means.row(j);
    Eigen::VectorXd maha;
    if (g.mode == CovarianceMode::kDiagonal) {
      maha = (diff.array().square().rowwise() * p.inv_var.row(j).array()).rowwise().sum();
    } else {
      const Eigen::MatrixXd solved =
          p.chol[static_cast<std::size_t>(j)].matrixL().solve(diff.transpose());
      maha = solved.colwise().squaredNorm().transpose();
    }
    out.col(j) = (-0.5 * maha.array() + p.log_norm[static_cast<std::size_t>(j)]).matrix();
  }
  return out;
}

// Log-likelihood and normalized responsibilities for the current parameters.
double e_step(const GaussianMixture& g, const LatentSet& x, Eigen::MatrixXd& resp) {
  const Prepared p = prepare(g);
  resp = joint_log(g, p, x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < resp.rows(); ++i) {
    const double lse = log_sum_exp(resp.row(i));
    require(std::isfinite(lse), ErrorKind::kNumeric, "EM: non-finite log-likelihood");
    total += lse;
    resp.row(i) = (resp.row(i).array() - lse).exp();
  }
  return total;
}

void m_step(GaussianMixture& g, const LatentSet& x, const Eigen::MatrixXd& resp, double floor) {
  const auto n = static_cast<double>(x.rows());
  const Eigen::VectorXd nk = resp.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < nk.size(); ++j) {
    // A component that lost every point keeps its shape with zero weight.
    if (!(nk[j] > 1e-12 * n)) {
      g.weights[j] = 0.0;
      continue;
    }
    g.weights[j] = nk[j] / n;
    const Eigen::RowVectorXd mean = (resp.col(j).transpose() * x) / nk[j];
    g.means.row(j) = mean;
    const Eigen::MatrixXd diff = x.rowwise() - mean;
    if (g.mode == CovarianceMode::kDiagonal) {
      g.variances.row(j) =
          (resp.col(j).transpose() * diff.array().square().matrix()) / nk[j];
      g.variances.row(j).array() += floor;
    } else {
      Eigen::MatrixXd cov =
          (diff.transpose() * resp.col(j).asDiagonal() * diff) / nk[j];
      cov.diagonal().array() += floor;
      g.covariances[static_cast<std::size_t>(j)] = 0.5 * (cov + cov.transpose());
    }
  }
  g.weights /= g.weights.sum();
}

// k-means++ seeding followed by one hard-assignment M-step.
GaussianMixture initialize(const LatentSet& x, std::size_t k, const EmConfig& cfg, Rng& rng) {
  const auto n = x.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  std::vector<Eigen::Index> centers;
  centers.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - x.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<Eigen::Index>(centers.size()) < kk) {
    const double total = d2.sum();
    require(total > 0.0, ErrorKind::kNumeric,
            "fit_gmm: fewer distinct points than mixture components");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += d2[i];
      if (u < acc && d2[i] > 0.0) {
        pick = i;
        break;
      }
    }
    while (d2[pick] == 0.0) --pick;
    centers.push_back(pick);
    d2 = d2.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }

  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, kk);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < kk; ++j) {
      const double dist = (x.row(i) - x.row(centers[static_cast<std::size_t>(j)])).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    resp(i, best) = 1.0;
  }

  GaussianMixture g;
  g.mode = cfg.mode;
  g.weights = Eigen::VectorXd::Constant(kk, 1.0 / static_cast<double>(k));
  g.means.resize(kk, x.cols());
  for (Eigen::Index j = 0; j < kk; ++j) g.means.row(j) = x.row(centers[static_cast<std::size_t>(j)]);
  if (cfg.mode == CovarianceMode::kDiagonal) {
    g.variances = Eigen::MatrixXd::Ones(kk, x.cols());
  } else {
    g.covariances.assign(k, Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  }
  m_step(g, x, resp, cfg.variance_floor);
  return g;
}

GaussianMixture run_em(const LatentSet& x, std::size_t k, const EmConfig& cfg, Rng& rng) {
  GaussianMixture g = initialize(x, k, cfg, rng);
  Eigen::MatrixXd resp;
  FitMeta meta;
  double prev = kNegInf;
  for (std::size_t it = 0;; ++it) {
    const double ll = e_step(g, x, resp);
    meta.trace.push_back(ll);
    if (it > 0) {
      const double slack = 1e-9 * std::max(1.0, std::abs(ll));
      if (ll < prev - slack) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "EM log-likelihood decreased at iteration " << it << ": " << prev << " -> " << ll;
        fail(ErrorKind::kNumeric, msg.str());
      }
      if (std::abs(ll - prev) < cfg.tolerance * std::max(1.0, std::abs(ll))) {
        meta.converged = true;
      }
    }
    meta.log_likelihood = ll;
    meta.iterations = it;
    if (meta.converged || it >= cfg.max_iterations) break;
    prev = ll;
    m_step(g, x, resp, cfg.variance_floor);
  }
  g.fit_meta = std::move(meta);
  return g;
}

}  // namespace

void GaussianMixture::validate() const {
  const auto kk = weights.size();
  require(kk >= 1, ErrorKind::kInvalidInput, "gaussian mixture has no components");
  require(means.rows() == kk && means.cols() >= 1, ErrorKind::kDimension,
          "gaussian mixture: means must be k x dim");
  require((weights.array() >= 0.0).all() && std::abs(weights.sum() - 1.0) <= 1e-12,
          ErrorKind::kInvalidInput, "gaussian mixture: weights must lie on the simplex");
  require(means.allFinite(), ErrorKind::kNumeric, "gaussian mixture: non-finite means");
  if (mode == CovarianceMode::kDiagonal) {
    require(variances.rows() == kk && variances.cols() == means.cols(), ErrorKind::kDimension,
            "gaussian mixture: variances must be k x dim");
    require(variances.allFinite() && (variances.array() > 0.0).all(), ErrorKind::kNumeric,
            "gaussian mixture: variances must be positive");
  } else {
    require(covariances.size() == static_cast<std::size_t>(kk), ErrorKind::kDimension,
            "gaussian mixture: one covariance per component required");
    for (const auto& c : covariances) {
      require(c.rows() == means.cols() && c.cols() == means.cols(), ErrorKind::kDimension,
              "gaussian mixture: covariance must be dim x dim");
      require(c.allFinite() && (c.diagonal().array() > 0.0).all(), ErrorKind::kNumeric,
              "gaussian mixture: covariance diagonal must be positive");
    }
  }
}

GaussianMixture fit_gmm(const LatentSet& latents, std::size_t k, const EmConfig& config, Rng& rng) {
  require(k >= 1, ErrorKind::kInvalidInput, "fit_gmm: k must be >= 1");
  require(config.n_init >= 1 && config.tolerance > 0.0 && config.variance_floor > 0.0,
          ErrorKind::kInvalidInput, "fit_gmm: n_init, tolerance and variance floor must be positive");
  const auto need = k * std::max<std::size_t>(config.min_points_per_component, 1);
  require(static_cast<std::size_t>(latents.rows()) >= need, ErrorKind::kInvalidInput,
          "fit_gmm: " + std::to_string(latents.rows()) + " points is fewer than the " +
              std::to_string(need) + " required for k=" + std::to_string(k));
  require(latents.cols() >= 1, ErrorKind::kDimension, "fit_gmm: zero-dimensional data");
  require_finite(latents, "fit_gmm input");
  const bool identical = (latents.rowwise() - latents.row(0)).cwiseAbs().maxCoeff() == 0.0;
  require(!identical, ErrorKind::kNumeric, "fit_gmm: all points are identical");

  GaussianMixture best;
  bool have = false;
  for (std::size_t r = 0; r < config.n_init; ++r) {
    Rng local = rng.derive(r);
    GaussianMixture g = run_em(latents, k, config, local);
    if (!have || g.fit_meta.log_likelihood > best.fit_meta.log_likelihood) {
      best = std::move(g);
      have = true;
    }
  }
  best.fit_meta.restarts = config.n_init;
  best.validate();
  return best;
}

double gmm_log_density(const GaussianMixture& model, const CodeRef& z) {
  require(static_cast<std::size_t>(z.size()) == model.dim(), ErrorKind::kDimension,
          "gmm_log_density: dimension mismatch");
  const Prepared p = prepare(model);
  LatentSet x = z.transpose();
  return log_sum_exp(joint_log(model, p, x).row(0));
}

double gmm_log_likelihood(const GaussianMixture& model, const LatentSet& latents) {
  require(static_cast<std::size_t>(latents.cols()) == model.dim(), ErrorKind::kDimension,
          "gmm_log_likelihood: dimension mismatch");
  const Prepared p = prepare(model);
  const Eigen::MatrixXd jl = joint_log(model, p, latents);
  double total = 0.0;
  for (Eigen::Index i = 0; i < jl.rows(); ++i) total += log_sum_exp(jl.row(i));
  return total;
}

LatentSet sample_gmm(const GaussianMixture& model, std::size_t n, Rng& rng) {
  require(n >= 1, ErrorKind::kInvalidInput, "sample_gmm: n must be >= 1");
  model.validate();
  const auto d = static_cast<Eigen::Index>(model.dim());
  std::vector<double> cumulative(model.k());
  double acc = 0.0;
  for (std::size_t j = 0; j < model.k(); ++j) {
    acc += model.weights[static_cast<Eigen::Index>(j)];
    cumulative[j] = acc;
  }
  std::vector<Eigen::MatrixXd> factors;
  if (model.mode == CovarianceMode::kFull) {
    for (const auto& c : model.covariances) {
      Eigen::LLT<Eigen::MatrixXd> llt(c);
      require(llt.info() == Eigen::Success, ErrorKind::kNumeric,
              "sample_gmm: covariance is not positive definite");
      factors.push_back(llt.matrixL());
    }
  }
  const Eigen::MatrixXd sd = model.mode == CovarianceMode::kDiagonal
                                 ? Eigen::MatrixXd(model.variances.cwiseSqrt())
                                 : Eigen::MatrixXd();
  LatentSet out(static_cast<Eigen::Index>(n), d);
  Eigen::VectorXd e(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t j = 0;
    while (j + 1 < cumulative.size() &&
           (u >= cumulative[j] || model.weights[static_cast<Eigen::Index>(j)] == 0.0)) {
      ++j;
    }
    for (Eigen::Index c = 0; c < d; ++c) e[c] = rng.normal();
    const auto jj = static_cast<Eigen::Index>(j);
    if (model.mode == CovarianceMode::kDiagonal) {
      out.row(static_cast<Eigen::Index>(i)) = model.means.row(jj).array() + sd.row(jj).array() * e.transpose().array();
    } else {
      out.row(static_cast<Eigen::Index>(i)) = model.means.row(jj) + (factors[j] * e).transpose();
    }
  }
  return out;
}

std::vector<bool> label_mask(const ScoreMatrix& scores, const AttributeLabel& target,
                             const std::vector<std::size_t>& target_columns) {
  require(target.size() == target_columns.size(), ErrorKind::kDimension,
          "label_mask: target length differs from column count");
  std::vector<bool> mask(static_cast<std::size_t>(scores.rows()), false);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    bool ok = true;
    for (std::size_t a = 0; a < target_columns.size() && ok; ++a) {
      const double s = scores(i, static_cast<Eigen::Index>(target_columns[a]));
      ok = std::isfinite(s) && ((s >= 0.0) == (target[a] == 1));
    }
    mask[static_cast<std::size_t>(i)] = ok;
  }
  return mask;
}

FilterResult filter_by_label(const LatentSet& latents, const AttributeLabel& target,
                             Backend& backend, const std::vector<std::size_t>& target_columns,
                             double min_acceptance) {
  require(latents.rows() > 0, ErrorKind::kInvalidInput, "filter_by_label: empty input");
  const ScoreMatrix scores = score_batch(backend, latents);
  const std::vector<bool> mask = label_mask(scores, target, target_columns);
  const auto kept_n = static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), true));
  FilterResult result;
  result.input_count = static_cast<std::size_t>(latents.rows());
  result.acceptance_rate = static_cast<double>(kept_n) / static_cast<double>(latents.rows());
  if (result.acceptance_rate < min_acceptance) {
    std::ostringstream msg;
    msg << "filter for subgroup " << target.to_string() << " kept " << kept_n << " of "
        << latents.rows() << " codes (rate " << result.acceptance_rate << " < floor "
        << min_acceptance << ")";
    fail(ErrorKind::kLowYield, msg.str());
  }
  result.kept.resize(kept_n, latents.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < latents.rows(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) result.kept.row(r++) = latents.row(i);
  }
  return result;
}

}  // namespace lds
