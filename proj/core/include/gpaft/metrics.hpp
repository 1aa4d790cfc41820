#pragma once

#include <Eigen/Core>
#include <vector>

namespace gpaft {

// Right-continuous step function starting at 1; the product-limit estimate.
struct StepFunction {
  std::vector<double> times;    // sorted distinct jump times
  std::vector<double> values;   // level right of each jump, nonincreasing

  // Value at t: 1 before the first jump, else the level at the last jump <= t.
  [[nodiscard]] double operator()(double t) const;
};

// Product-limit estimator over (time, indicator) with indicator 1 = event.
// For the censoring distribution H the caller flips indicators.
[[nodiscard]] StepFunction kaplan_meier(const Eigen::VectorXd& times,
                                        const std::vector<int>& indicators);

// IPCW C-index: events before tau weighted H(S_i)^-2 against all later
// survivors; risk ties count one half. Subjects with H(S_i) = 0 are skipped
// with a stderr note. Throws numeric_error when no comparable pair exists.
// n_pairs (optional out) counts comparable pairs.
[[nodiscard]] double uno_c_index(const Eigen::VectorXd& risk,
                                 const Eigen::VectorXd& times,
                                 const std::vector<int>& indicators,
                                 double tau, const StepFunction& H,
                                 long* n_pairs = nullptr);

// Brier score at horizon t; both the early-failure and the survivor term are
// weighted by H(S_i)^-1 and the early-failure term is gated by
// min{1(S_i <= t), delta_i}.
[[nodiscard]] double brier(double t, const Eigen::VectorXd& surv_estimates,
                           const Eigen::VectorXd& times,
                           const std::vector<int>& indicators,
                           const StepFunction& H);

// Trapezoid of (grid, values) over [0, tau] divided by tau; the curve is
// extended constantly to 0 on the left and to tau on the right.
[[nodiscard]] double integrate_mean(const Eigen::VectorXd& grid,
                                    const Eigen::VectorXd& values, double tau);

// Integrated Brier score: B(t) on each grid time from the survival matrix
// (subject rows, grid columns), integrated by integrate_mean.
[[nodiscard]] double integrated_brier(const Eigen::MatrixXd& surv_matrix,
                                      const Eigen::VectorXd& grid,
                                      const Eigen::VectorXd& times,
                                      const std::vector<int>& indicators,
                                      const StepFunction& H, double tau);

// IPCW time-dependent AUC at each grid time (cases: events by t, weight
// H(S_i)^-1; controls: survivors past t), averaged with event-distribution
// increments as weights, normalized over usable grid times. Grid times with
// no cases or no controls are skipped with a stderr note.
[[nodiscard]] double integrated_auc(const Eigen::VectorXd& risk,
                                    const Eigen::VectorXd& times,
                                    const std::vector<int>& indicators,
                                    double tau, const Eigen::VectorXd& grid,
                                    const StepFunction& H);

struct EvalConfig {
  double tau = 0.0;               // <= 0: derive from the data and mode
  Eigen::VectorXd grid;           // empty: even grid over (0, tau]
  int grid_size = 100;
  bool oracle_censoring = false;  // simulation mode: H = 1 and delta = 1
};

// Resolved evaluation inputs: horizon, grid, censoring-survival estimate,
// and the effective event indicators (all 1 under the oracle flag).
struct EvalPlan {
  double tau = 0.0;
  Eigen::VectorXd grid;
  StepFunction H;                 // empty step function means H = 1
  std::vector<int> indicators;
};

struct EvaluationReport {
  double c_index = 0.0;
  double ibs = 0.0;
  double iauc = 0.0;
  double tau = 0.0;
  long n_pairs = 0;
};

// tau default: largest time (oracle mode) or second largest observed time.
[[nodiscard]] double default_tau(const Eigen::VectorXd& times,
                                 bool oracle_censoring);

// Resolves tau, grid, H, and indicators; callers then evaluate survival
// estimates on plan.grid before scoring.
[[nodiscard]] EvalPlan make_eval_plan(const Eigen::VectorXd& times,
                                      const std::vector<int>& indicators,
                                      const EvalConfig& config);

// Runs all three metrics; surv_matrix columns follow plan.grid.
[[nodiscard]] EvaluationReport evaluate_predictions(
    const Eigen::VectorXd& risk, const Eigen::MatrixXd& surv_matrix,
    const Eigen::VectorXd& times, const EvalPlan& plan);

}  // namespace gpaft
