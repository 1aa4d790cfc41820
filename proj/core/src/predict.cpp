#include "gpaft/predict.hpp"

#include <cmath>

#include "gpaft/errors.hpp"
#include "gpaft/normal.hpp"

namespace gpaft {

Predictor::Predictor(const FitResult& fit, const KernelStack& stack,
                     const Eigen::MatrixXd& Z, const Eigen::MatrixXd& X)
    : stack_(&stack),
      X_(&X),
      params_(fit.params),
      assembly_(assemble_covariance(stack, fit.params.sigma2,
                                    fit.params.noise2)) {
  if (Z.rows() != stack.n || X.rows() != stack.n ||
      fit.t_bar.size() != stack.n) {
    throw schema_error("training structures disagree on sample count");
  }
  resid_weights_ = assembly_.solve(fit.t_bar - Z * params_.beta);
  prior_var_ = params_.sigma2.sum() + params_.noise2;
}

Prediction Predictor::predict_log_time(const Eigen::VectorXd& z_star,
                                       const Eigen::VectorXd& x_star) const {
  if (z_star.size() != params_.beta.size()) {
    throw schema_error("z_star length != beta length");
  }
  const Eigen::VectorXd k_star =
      cross_covariance(x_star, *X_, *stack_, params_.sigma2);
  Prediction out;
  out.mean_log_time = params_.beta.dot(z_star) + k_star.dot(resid_weights_);
  const Eigen::VectorXd solved = assembly_.solve(k_star);
  out.var_log_time = prior_var_ - k_star.dot(solved);
  out.risk_score = -out.mean_log_time;
  return out;
}

Prediction predict_log_time(const FitResult& fit, const KernelStack& stack,
                            const Eigen::MatrixXd& Z,
                            const Eigen::VectorXd& z_star,
                            const Eigen::VectorXd& x_star,
                            const Eigen::MatrixXd& X) {
  return Predictor(fit, stack, Z, X).predict_log_time(z_star, x_star);
}

double survival_probability(const Prediction& prediction, double t) {
  if (!(t > 0.0)) throw schema_error("survival probability needs t > 0");
  const double sd = std::sqrt(prediction.var_log_time);
  return normal_sf((std::log(t) - prediction.mean_log_time) / sd);
}

}  // namespace gpaft
