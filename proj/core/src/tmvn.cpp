#include "gpaft/tmvn.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "gpaft/errors.hpp"
#include "gpaft/normal.hpp"

namespace gpaft {

namespace {

constexpr double kTailZ = 6.0;
constexpr double kTailMass = 1e-10;

// Standard normal on [lo, hi] with lo >= 0, both tails far out. Robert's
// shifted-exponential proposal at the optimal rate; a uniform proposal takes
// over on intervals too narrow for the exponential to land in.
double tail_rejection(double lo, double hi, RandomStream& rng) {
  const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  if (std::isfinite(hi) && (hi - lo) * rate < 0.5) {
    for (;;) {
      const double z = lo + (hi - lo) * rng.uniform();
      const double accept = std::exp(-0.5 * (z * z - lo * lo));
      if (rng.uniform() <= accept) return z;
    }
  }
  for (;;) {
    const double z = lo + rng.exponential(1.0 / rate);
    if (z > hi) continue;
    const double d = z - rate;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

}  // namespace

double sample_truncated_univariate(double mu, double sd, double a, double b,
                                   RandomStream& rng) {
  const double alpha = std::isinf(a) ? a : (a - mu) / sd;
  const double beta = std::isinf(b) ? b : (b - mu) / sd;
  double z;
  if (alpha >= 0.0) {
    // Both bounds in the upper half: mix on survival scale, no cancellation.
    const double sf_a = normal_sf(alpha);
    const double sf_b = std::isinf(beta) ? 0.0 : normal_sf(beta);
    if (sf_a - sf_b < kTailMass && alpha > kTailZ) {
      z = tail_rejection(alpha, beta, rng);
    } else {
      z = -normal_quantile(sf_b + rng.uniform_open() * (sf_a - sf_b));
    }
  } else if (beta <= 0.0) {
    const double cdf_b = normal_cdf(beta);
    const double cdf_a = std::isinf(alpha) ? 0.0 : normal_cdf(alpha);
    if (cdf_b - cdf_a < kTailMass && beta < -kTailZ) {
      z = -tail_rejection(-beta, -alpha, rng);
    } else {
      z = normal_quantile(cdf_a + rng.uniform_open() * (cdf_b - cdf_a));
    }
  } else {
    // Interval straddles the mode; CDF mixing is well conditioned here.
    const double cdf_a = std::isinf(alpha) ? 0.0 : normal_cdf(alpha);
    const double cdf_b = std::isinf(beta) ? 1.0 : normal_cdf(beta);
    z = normal_quantile(cdf_a + rng.uniform_open() * (cdf_b - cdf_a));
  }
  double x = mu + sd * z;
  if (x < a) x = a;
  if (x > b) x = b;
  return x;
}

GibbsSampler::GibbsSampler(TruncatedMvnSpec spec, const Eigen::VectorXd& init,
                           int thin)
    : spec_(std::move(spec)) {
  const Eigen::Index n = spec_.mean.size();
  if (spec_.cov.rows() != n || spec_.cov.cols() != n ||
      spec_.lower.size() != n || spec_.upper.size() != n) {
    throw schema_error("truncated normal spec dimensions disagree");
  }
  if ((spec_.lower.array() >= spec_.upper.array()).any()) {
    throw schema_error("truncation bounds must satisfy lower < upper");
  }
  if (init.size() != n) throw schema_error("chain init has wrong length");
  if ((init.array() < spec_.lower.array()).any() ||
      (init.array() > spec_.upper.array()).any()) {
    throw schema_error("chain init violates the truncation bounds");
  }
  if (thin < 1) throw schema_error("thin must be >= 1");
  thin_ = thin;

  Eigen::LLT<Eigen::MatrixXd> llt(spec_.cov);
  if (llt.info() != Eigen::Success) {
    throw numeric_error("conditional covariance not positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
  cond_sd_ = precision_.diagonal().array().inverse().sqrt();
  state_ = init;
}

void GibbsSampler::sweep(RandomStream& rng) {
  const Eigen::Index n = state_.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    // Conditional of coordinate i given the rest, read off the precision row.
    double dot = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) dot += precision_(i, j) * (state_[j] - spec_.mean[j]);
    }
    const double cm = spec_.mean[i] - dot / precision_(i, i);
    state_[i] = sample_truncated_univariate(cm, cond_sd_[i], spec_.lower[i],
                                            spec_.upper[i], rng);
  }
}

void GibbsSampler::run(Eigen::Index count, int burnin, RandomStream& rng,
                       SampleBatch& batch) {
  const Eigen::Index n = state_.size();
  for (int s = 0; s < burnin; ++s) sweep(rng);
  const Eigen::Index start = batch.draws.rows();
  batch.draws.conservativeResize(start + count, n);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (int s = 0; s < thin_; ++s) sweep(rng);
    batch.draws.row(start + r) = state_;
  }
  batch.thin = thin_;
}

SampleBatch gibbs_sample(const TruncatedMvnSpec& spec, Eigen::Index count,
                         int thin, int burnin, const Eigen::VectorXd& init,
                         RandomStream& rng) {
  GibbsSampler chain(spec, init, thin);
  SampleBatch batch;
  batch.draws.resize(0, spec.mean.size());
  batch.burnin = burnin;
  batch.seed = rng.seed();
  chain.run(count, burnin, rng, batch);
  return batch;
}

double mcse_spectral(std::span<const double> series) {
  const auto n = static_cast<Eigen::Index>(series.size());
  if (n < 20) {
    throw std::invalid_argument("mcse_spectral needs length >= 20");
  }
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);

  const auto bandwidth = static_cast<Eigen::Index>(
      std::floor(std::sqrt(static_cast<double>(n))));
  auto autocov = [&](Eigen::Index lag) {
    double acc = 0.0;
    for (Eigen::Index t = 0; t + lag < n; ++t) {
      acc += (series[static_cast<std::size_t>(t)] - mean) *
             (series[static_cast<std::size_t>(t + lag)] - mean);
    }
    return acc / static_cast<double>(n);
  };

  double variance = autocov(0);
  for (Eigen::Index k = 1; k <= bandwidth; ++k) {
    const double w =
        0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(k) /
                              static_cast<double>(bandwidth)));
    variance += 2.0 * w * autocov(k);
  }
  if (variance < 0.0) variance = 0.0;
  return std::sqrt(variance / static_cast<double>(n));
}

}  // namespace gpaft
