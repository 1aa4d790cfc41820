#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "gpaft/data_model.hpp"
#include "gpaft/kernels.hpp"
#include "gpaft/mstep.hpp"
#include "gpaft/tmvn.hpp"

namespace gpaft {

struct McemConfig {
  Eigen::Index s1 = 500;          // initial Monte Carlo size
  Eigen::Index s_max = 100000;    // cap; rejection at or past it terminates
  double z_crit = 1.96;
  int thin = 10;
  int burnin = 100;
  double mstep_tol = 1e-8;
  int mstep_max_inner = 500;
  int max_outer = 200;            // safety valve; the algorithm itself only
                                  // stops at the cap
  bool m1_fastpath = true;        // eigen fast path when the stack has M = 1
  std::uint64_t seed = 0;
};

struct AscentRecord {
  int outer = 0;
  Eigen::Index s_r = 0;
  double delta = 0.0;
  double ase = 0.0;
  bool accepted = false;
};

struct AscentResult {
  bool accepted = false;
  double delta = 0.0;
  double ase = 0.0;
};

struct FitResult {
  ModelParams params;
  Eigen::VectorXd t_bar;                  // observed entries = log y exactly
  std::vector<double> loglik_trace;       // objective per outer iteration
  std::vector<Eigen::Index> sr_history;
  std::vector<AscentRecord> diagnostics;
  std::vector<ModelParams> param_trace;
  bool reached_cap = false;
  bool reached_max_outer = false;
  std::uint64_t seed = 0;
};

// Kaplan-Meier conditional-expectation imputation of censored times plus OLS
// starting values; the residual variance is split equally over the M kernel
// variances and the noise. Right-censored subjects use E[T | T > y] on the
// time scale then log; beyond the last event the largest event time stands
// in. Left and interval censored subjects take the mean event log-time
// clamped into their bounds.
[[nodiscard]] std::pair<Eigen::VectorXd, ModelParams> initialize_ipw(
    const SurvivalDataset& ds, Eigen::Index n_kernels);

// Conditional law of the censored log-times given the observed ones:
// mean Z_c b + Kco Koo^-1 (T_o - Z_o b), cov Kcc - Kco Koo^-1 Kco'.
[[nodiscard]] TruncatedMvnSpec conditional_spec(const ModelParams& params,
                                                const KernelStack& stack,
                                                const SurvivalDataset& ds,
                                                const Partition& partition);

// Draws s_r thinned Gibbs samples from the conditional; warm_start empty
// means "start at the conditional mean clamped into bounds".
[[nodiscard]] SampleBatch estep_sample(const ModelParams& params,
                                       const KernelStack& stack,
                                       const SurvivalDataset& ds,
                                       const Partition& partition,
                                       Eigen::Index s_r, RandomStream& rng,
                                       const Eigen::VectorXd& warm_start,
                                       int thin, int burnin);

// Mean and spectral standard error of the per-draw log-likelihood gain of
// candidate over incumbent; accepted when delta > z_crit * ase. Series
// shorter than 20 fall back to the naive iid standard error.
[[nodiscard]] AscentResult ascent_test(const ModelParams& incumbent,
                                       const ModelParams& candidate,
                                       const McSamples& samples,
                                       const KernelStack& stack,
                                       const Eigen::MatrixXd& Z,
                                       double z_crit);

// Ascent-based Monte Carlo EM. Each round draws from the conditional at the
// incumbent, maximizes the Monte Carlo objective, and runs the ascent test;
// acceptance advances the incumbent at unchanged s_r, rejection doubles s_r
// by appending draws from the same chain, and a rejection at s_r >= s_max
// ends the fit at the last maximizer.
[[nodiscard]] FitResult fit(const SurvivalDataset& ds,
                            const KernelStack& stack,
                            const McemConfig& config = {});

}  // namespace gpaft
