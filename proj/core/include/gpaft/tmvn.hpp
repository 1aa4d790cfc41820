#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>

#include "gpaft/rng.hpp"

namespace gpaft {

// Target law: N(mean, cov) restricted to the box [lower, upper]. Infinite
// bounds express one-sided or absent truncation.
struct TruncatedMvnSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct SampleBatch {
  Eigen::MatrixXd draws;   // one row per kept draw, s_r x n_c
  int thin = 1;
  int burnin = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] Eigen::Index count() const { return draws.rows(); }
};

// One draw from N(mu, sd^2) on [a, b]. Inverse CDF at moderate tail mass;
// past 6 sd (box mass < 1e-10) an exponential-proposal rejection step keeps
// the tails exact where the quantile function runs out of precision. The
// returned value is clamped into [a, b].
[[nodiscard]] double sample_truncated_univariate(double mu, double sd,
                                                 double a, double b,
                                                 RandomStream& rng);

// Systematic-scan Gibbs chain whose full conditionals come from the
// precision matrix (one Cholesky inversion at construction). The object owns
// the chain state so later runs continue where the last one stopped; that is
// how a rejected ascent test extends a draw set without re-burn-in.
class GibbsSampler {
 public:
  // init must satisfy the bounds elementwise (callers clamp first).
  GibbsSampler(TruncatedMvnSpec spec, const Eigen::VectorXd& init, int thin);

  // Advances burnin unrecorded sweeps, then appends `count` draws (one per
  // `thin` sweeps) to batch.draws.
  void run(Eigen::Index count, int burnin, RandomStream& rng,
           SampleBatch& batch);

  [[nodiscard]] const Eigen::VectorXd& state() const { return state_; }

 private:
  void sweep(RandomStream& rng);

  TruncatedMvnSpec spec_;
  Eigen::MatrixXd precision_;
  Eigen::VectorXd cond_sd_;
  Eigen::VectorXd state_;
  int thin_ = 1;
};

// Convenience wrapper: fresh chain, burn in, emit `count` thinned draws.
[[nodiscard]] SampleBatch gibbs_sample(const TruncatedMvnSpec& spec,
                                       Eigen::Index count, int thin,
                                       int burnin, const Eigen::VectorXd& init,
                                       RandomStream& rng);

// Standard error of the series mean by spectral variance estimation with a
// Tukey-Hanning lag window, bandwidth floor(sqrt(length)). Length >= 20.
[[nodiscard]] double mcse_spectral(std::span<const double> series);

}  // namespace gpaft
