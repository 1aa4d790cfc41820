#pragma once

#include <vector>

#include <Eigen/Core>

#include "gpaft/data_model.hpp"
#include "gpaft/kernels.hpp"
#include "gpaft/tmvn.hpp"

namespace gpaft {

struct ModelParams {
  Eigen::VectorXd beta;     // (q+1)
  Eigen::VectorXd sigma2;   // M, elementwise >= 0
  double noise2 = 0.0;      // > 0
};

struct MStepState {
  ModelParams params;
  double loglik = 0.0;              // Monte Carlo average at params
  int inner_iters = 0;
  int extrapolation_accepts = 0;
  bool converged = false;
  // Objective at entry followed by one value per inner iteration; every
  // accepted update must keep this sequence nondecreasing.
  std::vector<double> objective_trace;
};

// Completed-sample moments shared by one M-step: mean vector T-bar and the
// centered second moment of the censored draws (1/s_r scaling, which is what
// the quadratic-form identity mean_j r_j' B r_j = m'Bm + tr(B_cc C) needs).
class McSamples {
 public:
  // T_o holds observed log-times ordered like partition.observed_idx; draws
  // columns are ordered like partition.censored_idx.
  McSamples(const SampleBatch& batch, const Eigen::VectorXd& T_o,
            const Partition& partition, Eigen::Index n);

  [[nodiscard]] Eigen::Index count() const { return draws_->count(); }
  [[nodiscard]] Eigen::Index n() const { return mean_.size(); }
  [[nodiscard]] Eigen::Index n_censored() const {
    return static_cast<Eigen::Index>(partition_->censored_idx.size());
  }
  [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& censored_scatter() const {
    return scatter_;
  }
  [[nodiscard]] const Partition& partition() const { return *partition_; }
  [[nodiscard]] const SampleBatch& batch() const { return *draws_; }

  // Assembles the j-th completed log-time vector.
  [[nodiscard]] Eigen::VectorXd completed(Eigen::Index j) const;

 private:
  const SampleBatch* draws_;
  const Partition* partition_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;   // n_c x n_c
};

// Products against Omega = Ktilde^{-1} for one (beta, sigma) state. Omega is
// never formed; everything goes through the Cholesky factor. Shared by the
// MM updates within one inner iteration.
class OmegaProducts {
 public:
  OmegaProducts(const CovarianceAssembly& assembly, const McSamples& samples,
                const Eigen::VectorXd& residual_mean);

  // mean_j r_j' Omega k Omega r_j for a kernel Gram k.
  [[nodiscard]] double quad_mean(const Eigen::MatrixXd& k) const;
  // Same with k = I.
  [[nodiscard]] double quad_mean_identity() const;
  [[nodiscard]] double trace_omega_k(const Eigen::MatrixXd& k) const;
  [[nodiscard]] double trace_omega() const;
  // mean_j r_j' Omega r_j, the quadratic form of the objective itself.
  [[nodiscard]] double quad_mean_plain() const;

 private:
  const CovarianceAssembly* assembly_;
  const McSamples* samples_;
  Eigen::VectorXd u_;   // Omega r-bar
  Eigen::MatrixXd W_;   // Omega restricted to censored columns, n x n_c
  double mrm_ = 0.0;    // r-bar' Omega r-bar
};

// Gaussian log-likelihood -(1/2)[n log 2pi + log det Ktilde + r' Ktilde^-1 r].
[[nodiscard]] double log_likelihood(const ModelParams& params,
                                    const KernelStack& stack,
                                    const Eigen::MatrixXd& Z,
                                    const Eigen::VectorXd& T);

// Average completed-data log-likelihood over the draw set (direct loop; the
// optimizer uses the algebraically identical moment form internally).
[[nodiscard]] double mc_objective(const ModelParams& params,
                                  const KernelStack& stack,
                                  const Eigen::MatrixXd& Z,
                                  const McSamples& samples);

// Per-draw completed-data log-likelihoods, one entry per sample; the ascent
// test differences these across parameter values.
[[nodiscard]] Eigen::VectorXd per_sample_loglik(const ModelParams& params,
                                                const KernelStack& stack,
                                                const Eigen::MatrixXd& Z,
                                                const McSamples& samples);

// Weighted normal equations (Z' Omega Z) beta = Z' Omega t_bar.
[[nodiscard]] Eigen::VectorXd gls_beta(const Eigen::MatrixXd& Z,
                                       const CovarianceAssembly& omega,
                                       const Eigen::VectorXd& t_bar);

// Multiplicative variance update; zero is an exact fixed point.
[[nodiscard]] double mm_update_sigma(double sigma2_prev,
                                     const OmegaProducts& omega,
                                     const GramMatrix& gram);

[[nodiscard]] double mm_update_noise(double noise2_prev,
                                     const OmegaProducts& omega);

// curr + (sqrt(b) + 2)^-1 (curr - prev), clamped elementwise at zero.
[[nodiscard]] Eigen::VectorXd extrapolate(const Eigen::VectorXd& prev,
                                          const Eigen::VectorXd& curr, int b);

// Analytic score of mc_objective in (sigma2_1..sigma2_M, noise2):
// -(1/2)[tr(Omega k) - mean_j r_j' Omega k Omega r_j] per component.
[[nodiscard]] Eigen::VectorXd variance_score(const ModelParams& params,
                                             const KernelStack& stack,
                                             const Eigen::MatrixXd& Z,
                                             const McSamples& samples);

// One Monte Carlo M-step: GLS beta, Jacobi MM variance updates sharing the
// iteration's Omega, extrapolation accepted on strict objective increase,
// termination when the gain drops below tol * |entry objective|. Monotone up
// to round-off by MM construction. noise2 is floored at 1e-8 * Var(T-bar).
[[nodiscard]] MStepState maximize(const ModelParams& init,
                                  const KernelStack& stack,
                                  const Eigen::MatrixXd& Z,
                                  const McSamples& samples,
                                  double tol = 1e-8, int max_inner = 500);

// M = 1 specialization: one eigendecomposition of the Gram matrix makes
// Ktilde diagonal in the rotated basis, so likelihood evaluations cost O(n)
// and (sigma2, noise2) are found by blockwise golden-section searches on
// log-scale brackets [1e-10, 1e4] * Var(T-bar).
[[nodiscard]] MStepState single_kernel_maximize(const ModelParams& init,
                                                const GramMatrix& gram,
                                                const Eigen::MatrixXd& Z,
                                                const McSamples& samples,
                                                double tol = 1e-8,
                                                int max_inner = 500);

}  // namespace gpaft
