#pragma once

#include <Eigen/Core>

#include "gpaft/kernels.hpp"
#include "gpaft/mcem.hpp"

namespace gpaft {

struct Prediction {
  double mean_log_time = 0.0;
  double var_log_time = 0.0;
  double risk_score = 0.0;   // negative mean log-time: larger = higher risk
};

// Kriging for new subjects. One factorization of Ktilde and one residual
// solve are shared across every prediction.
class Predictor {
 public:
  Predictor(const FitResult& fit, const KernelStack& stack,
            const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X);

  // mean = beta'z + k*' Ktilde^-1 (T-bar - Z beta),
  // var  = (sum sigma2 + noise2) - k*' Ktilde^-1 k*.
  [[nodiscard]] Prediction predict_log_time(
      const Eigen::VectorXd& z_star, const Eigen::VectorXd& x_star) const;

 private:
  const KernelStack* stack_;
  const Eigen::MatrixXd* X_;
  ModelParams params_;
  CovarianceAssembly assembly_;
  Eigen::VectorXd resid_weights_;   // Ktilde^-1 (T-bar - Z beta)
  double prior_var_ = 0.0;
};

// One-shot wrapper over Predictor.
[[nodiscard]] Prediction predict_log_time(const FitResult& fit,
                                          const KernelStack& stack,
                                          const Eigen::MatrixXd& Z,
                                          const Eigen::VectorXd& z_star,
                                          const Eigen::VectorXd& x_star,
                                          const Eigen::MatrixXd& X);

// P(T_* > t) = 1 - Phi((log t - mean)/sd) under the log-normal predictive.
[[nodiscard]] double survival_probability(const Prediction& prediction,
                                          double t);

}  // namespace gpaft
