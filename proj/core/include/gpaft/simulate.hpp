#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "gpaft/data_model.hpp"
#include "gpaft/kernels.hpp"
#include "gpaft/mcem.hpp"
#include "gpaft/rng.hpp"

namespace gpaft {

// Gompertz baseline hazard lambda * exp(alpha * t), moment-matched so the
// linear-predictor-free survival time has mean 1400 and sd 1200.
struct GompertzParams {
  double alpha = 1.4386395095721937e-4;
  double lambda = 5.9212969322524375e-4;
};

enum class KernelTruth { genome, pathway };

struct SimConfig {
  Eigen::Index n = 250;            // train_size + test_size
  Eigen::Index p = 1000;
  int model = 1;                   // 1..4
  KernelTruth kernel_truth = KernelTruth::genome;
  Eigen::VectorXd beta_true;       // models 1-3: (q+1) with intercept first;
                                   // model 4: q entries, no intercept
  double sigma_g2 = 3.0;           // 3 for models 1-3, 4 for model 4
  double noise_var = 0.5;
  Eigen::Vector4d stage_probs{0.25, 0.25, 0.25, 0.25};
  Eigen::Vector4d censor_quantiles{0.20, 0.50, 0.70, 0.80};
  Eigen::Index train_size = 200;
  Eigen::Index test_size = 50;
  std::uint64_t seed = 0;
  GompertzParams gompertz;

  void validate() const;

  // Canonical per-model settings: regression coefficients and total genomic
  // variance.
  [[nodiscard]] static SimConfig defaults(int model);
};

struct Covariates {
  Eigen::MatrixXd Z;               // [1, stage II, III, IV dummies, age days]
  Eigen::MatrixXd X;               // n x p expression surrogate
  std::vector<int> stages;         // 0 = stage I .. 3 = stage IV
};

// Stage multinomial expanded to dummies, age uniform on [35, 85] years in
// days, X in correlated Gaussian blocks of 50 (within-block correlation .5).
[[nodiscard]] Covariates gen_covariates(const SimConfig& cfg, RandomStream& rng);

struct TruthKernel {
  Eigen::MatrixXd K;               // scaled truth covariance of the effect
  Eigen::VectorXd weights;         // pathway weights; empty for genome truth
};

// Six consecutive pathway blocks of sizes 150,150,100,100,50,50; the drawn
// weight vector has exactly four nonzero Uniform[0,1] entries rescaled to
// total sigma_g2.
[[nodiscard]] std::vector<PathwayMask> truth_pathways();

[[nodiscard]] TruthKernel truth_covariance(const Eigen::MatrixXd& X,
                                           const SimConfig& cfg,
                                           RandomStream& rng);

// Effect draw with covariance truth.K through its symmetric PSD square root.
// Models 1, 2, 4 use Gaussian innovations; model 3 standardized-logistic
// (unit variance, positive excess kurtosis).
[[nodiscard]] Eigen::VectorXd gen_genomic_effect(const TruthKernel& truth,
                                                 const SimConfig& cfg,
                                                 RandomStream& rng);
[[nodiscard]] Eigen::VectorXd gen_genomic_effect(const Eigen::MatrixXd& X,
                                                 const SimConfig& cfg,
                                                 RandomStream& rng);

// Models 1-3: times = exp(Z beta + effect + error) with Gaussian (1) or
// logistic (2, 3) error of variance noise_var. Model 4: Cox model with
// Gompertz baseline, S = (1/alpha) log[1 - alpha log(u) / (lambda e^W)],
// W = Z-without-intercept * beta + effect.
[[nodiscard]] Eigen::VectorXd gen_survival(const SimConfig& cfg,
                                           const Eigen::MatrixXd& Z,
                                           const Eigen::VectorXd& effect,
                                           RandomStream& rng);

struct CensoredTimes {
  Eigen::VectorXd y;               // min(time, censor draw)
  std::vector<int> delta;          // 1 = event observed
};

// Stage s draws exponential censoring with mean equal to the (1 - tau_s)
// quantile of the generated times, so higher-quantile stages are censored
// earlier and more often.
[[nodiscard]] CensoredTimes gen_censoring(const Eigen::VectorXd& times,
                                          const std::vector<int>& stages,
                                          const SimConfig& cfg,
                                          RandomStream& rng);

enum class Method { gpr_k, gpr_m, gpr_i, lmm_k, lmm_m };
[[nodiscard]] std::string method_name(Method method);

struct MethodMetrics {
  std::string method;
  double c_index = 0.0;
  double ibs = 0.0;
  double iauc = 0.0;
  double imputation_corr = 0.0;    // NaN when no censored training subject
};

struct ReplicationRecord {
  int rep = 0;
  double censor_rate = 0.0;        // training-set fraction censored
  double ipw_corr = 0.0;           // Kaplan-Meier imputation baseline
  std::vector<MethodMetrics> methods;
};

// One generate/split/fit/evaluate cycle. The test set is scored on its true
// failure times (oracle censoring), mirroring how simulation truth is used.
[[nodiscard]] ReplicationRecord run_replication(const SimConfig& cfg,
                                                const std::vector<Method>& methods,
                                                const McemConfig& mcem, int rep);

// Replications run on `jobs` threads, one RNG stream per replication.
[[nodiscard]] std::vector<ReplicationRecord> run_replications(
    const SimConfig& cfg, const std::vector<Method>& methods,
    const McemConfig& mcem, int reps, int jobs);

}  // namespace gpaft
