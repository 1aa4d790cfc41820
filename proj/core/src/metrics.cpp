#include "gpaft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <vector>

#include "gpaft/errors.hpp"

namespace gpaft {

namespace {

void check_survival_inputs(const Eigen::VectorXd& times,
                           const std::vector<int>& indicators) {
  if (times.size() == 0) throw schema_error("no survival times to score");
  if (static_cast<long>(indicators.size()) != times.size())
    throw schema_error("event indicator length != number of times");
  for (long i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] <= 0.0)
      throw schema_error("times must be positive and finite");
    if (indicators[static_cast<size_t>(i)] != 0 &&
        indicators[static_cast<size_t>(i)] != 1)
      throw schema_error("event indicators must be 0 or 1");
  }
}

}  // namespace

double StepFunction::operator()(double t) const {
  // Right-continuous lookup; the function is 1 before the first jump.
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return values[static_cast<size_t>(it - times.begin()) - 1];
}

StepFunction kaplan_meier(const Eigen::VectorXd& times,
                          const std::vector<int>& indicators) {
  check_survival_inputs(times, indicators);
  const long n = times.size();

  // Group by distinct time; the risk set at t counts everyone with time >= t,
  // so ties between events and censorings resolve with events first.
  std::map<double, long> events;
  for (long i = 0; i < n; ++i)
    if (indicators[static_cast<size_t>(i)] == 1) events[times[i]] += 1;

  std::vector<double> sorted(times.data(), times.data() + n);
  std::sort(sorted.begin(), sorted.end());

  StepFunction fn;
  double surv = 1.0;
  for (const auto& [t, d] : events) {
    const auto first_ge = std::lower_bound(sorted.begin(), sorted.end(), t);
    const long at_risk = static_cast<long>(sorted.end() - first_ge);
    surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
    fn.times.push_back(t);
    fn.values.push_back(surv);
  }
  return fn;
}

double uno_c_index(const Eigen::VectorXd& risk, const Eigen::VectorXd& times,
                   const std::vector<int>& indicators, double tau,
                   const StepFunction& H, long* n_pairs) {
  check_survival_inputs(times, indicators);
  if (risk.size() != times.size())
    throw schema_error("risk score length != number of times");
  if (!(tau > 0.0)) throw schema_error("tau must be positive");

  const long n = times.size();
  double num = 0.0;
  double den = 0.0;
  long pairs = 0;
  bool warned = false;
  for (long i = 0; i < n; ++i) {
    if (indicators[static_cast<size_t>(i)] != 1) continue;
    if (!(times[i] < tau)) continue;
    const double h = H(times[i]);
    if (h <= 0.0) {
      if (!warned) {
        std::cerr << "note: dropping concordance pairs with zero "
                     "censoring-survival weight\n";
        warned = true;
      }
      continue;
    }
    const double w = 1.0 / (h * h);
    for (long j = 0; j < n; ++j) {
      if (!(times[i] < times[j])) continue;
      pairs += 1;
      den += w;
      if (risk[i] > risk[j])
        num += w;
      else if (risk[i] == risk[j])
        num += 0.5 * w;
    }
  }
  if (n_pairs != nullptr) *n_pairs = pairs;
  if (den == 0.0)
    throw numeric_error("concordance undefined: no comparable pairs before tau");
  return num / den;
}

double brier(double t, const Eigen::VectorXd& surv_estimates,
             const Eigen::VectorXd& times, const std::vector<int>& indicators,
             const StepFunction& H) {
  check_survival_inputs(times, indicators);
  if (surv_estimates.size() != times.size())
    throw schema_error("survival estimate length != number of times");
  if (!(t > 0.0)) throw schema_error("evaluation time must be positive");

  const long n = times.size();
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const double s_hat = surv_estimates[i];
    const bool failed = times[i] <= t && indicators[static_cast<size_t>(i)] == 1;
    const bool alive = times[i] > t;
    if (!failed && !alive) continue;  // censored before t: no contribution
    const double h = H(times[i]);
    if (h <= 0.0) continue;  // zero weight, divisor stays n
    if (failed)
      total += (s_hat * s_hat) / h;
    else
      total += (1.0 - s_hat) * (1.0 - s_hat) / h;
  }
  return total / static_cast<double>(n);
}

double integrate_mean(const Eigen::VectorXd& grid, const Eigen::VectorXd& values,
                      double tau) {
  if (grid.size() != values.size())
    throw schema_error("integration grid and values differ in length");
  if (grid.size() == 0) throw schema_error("integration grid is empty");
  if (!(tau > 0.0)) throw schema_error("tau must be positive");
  for (long k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0) || grid[k] > tau + 1e-12 * tau)
      throw schema_error("integration grid must lie inside (0, tau]");
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw schema_error("integration grid must be strictly increasing");
  }

  // Trapezoid over [0, tau] extending the end values as constants.
  double area = grid[0] * values[0];
  for (long k = 1; k < grid.size(); ++k)
    area += 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
  area += (tau - grid[grid.size() - 1]) * values[values.size() - 1];
  return area / tau;
}

double integrated_brier(const Eigen::MatrixXd& surv_matrix,
                        const Eigen::VectorXd& grid,
                        const Eigen::VectorXd& times,
                        const std::vector<int>& indicators,
                        const StepFunction& H, double tau) {
  if (surv_matrix.rows() != times.size())
    throw schema_error("survival matrix rows != number of subjects");
  if (surv_matrix.cols() != grid.size())
    throw schema_error("survival matrix columns != grid length");
  Eigen::VectorXd scores(grid.size());
  for (long k = 0; k < grid.size(); ++k)
    scores[k] = brier(grid[k], surv_matrix.col(k), times, indicators, H);
  return integrate_mean(grid, scores, tau);
}

double integrated_auc(const Eigen::VectorXd& risk, const Eigen::VectorXd& times,
                      const std::vector<int>& indicators, double tau,
                      const Eigen::VectorXd& grid, const StepFunction& H) {
  check_survival_inputs(times, indicators);
  if (risk.size() != times.size())
    throw schema_error("risk score length != number of times");
  if (grid.size() == 0) throw schema_error("integration grid is empty");

  const long n = times.size();

  // Weight each evaluation time by the event-distribution mass the
  // Kaplan-Meier curve assigns to the preceding grid interval.
  const StepFunction event_surv = kaplan_meier(times, indicators);
  Eigen::VectorXd auc(grid.size());
  Eigen::VectorXd weight(grid.size());
  bool warned = false;
  for (long k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    double num = 0.0;
    double den = 0.0;
    long controls = 0;
    for (long j = 0; j < n; ++j)
      if (times[j] > t) controls += 1;
    for (long i = 0; i < n; ++i) {
      if (indicators[static_cast<size_t>(i)] != 1 || times[i] > t) continue;
      const double h = H(times[i]);
      if (h <= 0.0) {
        if (!warned) {
          std::cerr << "note: dropping time-dependent AUC cases with zero "
                       "censoring-survival weight\n";
          warned = true;
        }
        continue;
      }
      const double w = 1.0 / h;
      for (long j = 0; j < n; ++j) {
        if (!(times[j] > t)) continue;
        den += w;
        if (risk[i] > risk[j])
          num += w;
        else if (risk[i] == risk[j])
          num += 0.5 * w;
      }
    }
    if (den > 0.0 && controls > 0) {
      auc[k] = num / den;
      const double prev = k == 0 ? 1.0 : event_surv(grid[k - 1]);
      weight[k] = prev - event_surv(t);
    } else {
      auc[k] = 0.0;
      weight[k] = 0.0;
    }
  }
  const double total = weight.sum();
  if (total <= 0.0)
    throw numeric_error(
        "time-dependent AUC undefined: no usable evaluation times");
  (void)tau;
  return auc.dot(weight) / total;
}

double default_tau(const Eigen::VectorXd& times, bool oracle_censoring) {
  if (times.size() == 0) throw schema_error("no survival times to score");
  if (oracle_censoring) return times.maxCoeff();
  if (times.size() < 2)
    throw schema_error("need at least two subjects to pick a horizon");
  std::vector<double> sorted(times.data(), times.data() + times.size());
  std::sort(sorted.begin(), sorted.end());
  return sorted[sorted.size() - 2];
}

EvalPlan make_eval_plan(const Eigen::VectorXd& times,
                        const std::vector<int>& indicators,
                        const EvalConfig& config) {
  check_survival_inputs(times, indicators);
  EvalPlan plan;
  plan.indicators = indicators;
  if (config.oracle_censoring) {
    // Simulation mode: generated times are true failure times.
    std::fill(plan.indicators.begin(), plan.indicators.end(), 1);
  } else {
    std::vector<int> censored(indicators.size());
    for (size_t i = 0; i < indicators.size(); ++i)
      censored[i] = 1 - indicators[i];
    plan.H = kaplan_meier(times, censored);
  }
  plan.tau = config.tau > 0.0 ? config.tau
                              : default_tau(times, config.oracle_censoring);
  if (config.grid.size() > 0) {
    plan.grid = config.grid;
  } else {
    if (config.grid_size < 1) throw schema_error("grid size must be positive");
    plan.grid.resize(config.grid_size);
    for (int k = 0; k < config.grid_size; ++k)
      plan.grid[k] = plan.tau * static_cast<double>(k + 1) /
                     static_cast<double>(config.grid_size);
  }
  return plan;
}

EvaluationReport evaluate_predictions(const Eigen::VectorXd& risk,
                                      const Eigen::MatrixXd& surv_matrix,
                                      const Eigen::VectorXd& times,
                                      const EvalPlan& plan) {
  EvaluationReport report;
  report.tau = plan.tau;
  report.c_index = uno_c_index(risk, times, plan.indicators, plan.tau, plan.H,
                               &report.n_pairs);
  report.ibs = integrated_brier(surv_matrix, plan.grid, times, plan.indicators,
                                plan.H, plan.tau);
  report.iauc = integrated_auc(risk, times, plan.indicators, plan.tau,
                               plan.grid, plan.H);
  return report;
}

}  // namespace gpaft
