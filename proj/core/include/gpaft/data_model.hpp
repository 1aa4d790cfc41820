#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace gpaft {

// Status codes match the survival-file encoding.
enum class Censoring : int { right = 0, event = 1, left = 2, interval = 3 };

// One cohort: observation times with censoring codes, log-scale truncation
// bounds, clinical design Z (first column ones), expression X.
// Bounds unify the censoring types: event -> [log y, log y], right ->
// [log y, +inf), left -> (-inf, log y], interval -> [log y, log y2].
struct SurvivalDataset {
  std::vector<std::string> ids;
  Eigen::VectorXd time;             // y_i > 0, study clock units
  Eigen::VectorXd time2;            // interval upper endpoint, NaN elsewhere
  std::vector<Censoring> event;
  Eigen::VectorXd lower;            // L_i, log scale
  Eigen::VectorXd upper;            // U_i, log scale
  Eigen::MatrixXd Z;                // n x (q+1), set by attach_covariates
  Eigen::MatrixXd X;                // n x p, set by attach_expression
  std::vector<std::string> covariate_names;
  std::vector<std::string> gene_names;

  [[nodiscard]] Eigen::Index n() const { return time.size(); }
  [[nodiscard]] Eigen::Index p() const { return X.cols(); }

  // Throws schema_error on any broken invariant: nonpositive time, L > U,
  // dimension mismatch, duplicate id, non-finite Z or X entry, Z first
  // column not identically one.
  void validate() const;
};

struct Partition {
  std::vector<Eigen::Index> censored_idx;   // delta != event, original order
  std::vector<Eigen::Index> observed_idx;   // delta == event, original order
};

struct SurvivalColumns {
  std::string id = "id";
  std::string time = "time";
  std::string status = "status";
  std::string time2 = "time2";   // only consulted for interval rows
};

// Reads a survival CSV (header row; status 1=event, 0=right, 2=left,
// 3=interval). Z and X are left empty for the attach_* steps.
[[nodiscard]] SurvivalDataset load_survival_table(
    const std::string& path, const SurvivalColumns& columns = {});

// Joins a covariate CSV on id and builds Z = [1, covariates] in dataset row
// order. Every dataset id must appear exactly once in the file.
void attach_covariates(SurvivalDataset& ds, const std::string& path,
                       const std::string& id_column = "id");

enum class GeneOrientation { genes_as_cols, genes_as_rows };

// Joins an expression CSV on id and fills X (samples as rows) plus
// gene_names. genes_as_rows expects one row per gene with sample ids in the
// header; genes_as_cols expects one row per sample keyed by id.
void attach_expression(SurvivalDataset& ds, const std::string& path,
                       GeneOrientation orientation,
                       const std::string& id_column = "id");

struct ExpressionFilter {
  Eigen::MatrixXd values;             // n x p', log10((t+1)/q75) per sample
  std::vector<Eigen::Index> kept;     // surviving gene columns of the input
};

// Normalizes raw counts to x_ik = log10((t_ik + 1)/q_{i,.75}) with the
// per-sample 75th percentile taken over ALL genes before filtering, then
// drops genes whose across-sample 75th percentile is <= min_q75.
// Percentiles interpolate linearly between order statistics.
[[nodiscard]] ExpressionFilter preprocess_expression(
    const Eigen::MatrixXd& counts, double min_q75 = 20.0);

// Least-squares residuals of each X column on C; output columns are
// orthogonal to every column of C. Callers include the intercept in C.
[[nodiscard]] Eigen::MatrixXd residualize_confounders(const Eigen::MatrixXd& X,
                                                      const Eigen::MatrixXd& C);

[[nodiscard]] Partition partition_by_censoring(const SurvivalDataset& ds);

// Covariate + expression tables for subjects without outcomes (prediction
// targets). Row order follows the covariate file; the expression file is
// joined on id. Z gets the leading intercept column.
struct PredictionInputs {
  std::vector<std::string> ids;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd X;
  std::vector<std::string> covariate_names;
  std::vector<std::string> gene_names;
};

[[nodiscard]] PredictionInputs load_prediction_inputs(
    const std::string& covariates_path, const std::string& expression_path,
    GeneOrientation orientation, const std::string& id_column = "id");

}  // namespace gpaft
