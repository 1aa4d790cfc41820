#include "gpaft/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/QR>

#include "gpaft/csv.hpp"
#include "gpaft/errors.hpp"

namespace gpaft {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw numeric_error("quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double h = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

std::unordered_map<std::string, std::size_t> index_by_id(
    const detail::CsvTable& table, long id_col, const std::string& path) {
  std::unordered_map<std::string, std::size_t> map;
  map.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& id = table.rows[r][static_cast<std::size_t>(id_col)];
    if (!map.emplace(id, r).second) {
      throw schema_error(path + ": duplicate id '" + id + "'");
    }
  }
  return map;
}

}  // namespace

void SurvivalDataset::validate() const {
  const auto nn = n();
  if (static_cast<Eigen::Index>(ids.size()) != nn ||
      static_cast<Eigen::Index>(event.size()) != nn || lower.size() != nn ||
      upper.size() != nn || time2.size() != nn) {
    throw schema_error("dataset field lengths disagree");
  }
  std::unordered_set<std::string> seen;
  for (Eigen::Index i = 0; i < nn; ++i) {
    std::ostringstream where;
    where << "subject " << ids[static_cast<std::size_t>(i)] << " (row "
          << i + 1 << ")";
    if (!(time[i] > 0.0) || !std::isfinite(time[i])) {
      throw schema_error(where.str() + ": time must be positive");
    }
    if (event[static_cast<std::size_t>(i)] == Censoring::interval) {
      if (!std::isfinite(time2[i]) || !(time2[i] > time[i])) {
        throw schema_error(where.str() +
                           ": interval censoring needs time2 > time");
      }
    }
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i]) {
      throw schema_error(where.str() + ": invalid bounds");
    }
    if (!seen.insert(ids[static_cast<std::size_t>(i)]).second) {
      throw schema_error("duplicate subject id '" +
                         ids[static_cast<std::size_t>(i)] + "'");
    }
  }
  if (Z.size() > 0) {
    if (Z.rows() != nn) throw schema_error("Z row count != n");
    if (!Z.allFinite()) throw schema_error("Z contains non-finite entries");
    if ((Z.col(0).array() != 1.0).any()) {
      throw schema_error("first column of Z must be identically 1");
    }
  }
  if (X.size() > 0) {
    if (X.rows() != nn) throw schema_error("X row count != n");
    if (!X.allFinite()) throw schema_error("X contains non-finite entries");
    if (static_cast<Eigen::Index>(gene_names.size()) != X.cols()) {
      throw schema_error("gene name count != columns of X");
    }
  }
}

SurvivalDataset load_survival_table(const std::string& path,
                                    const SurvivalColumns& columns) {
  const auto table = detail::read_csv(path);
  const long id_col = table.column(columns.id);
  const long time_col = table.column(columns.time);
  const long status_col = table.column(columns.status);
  const long time2_col = table.column(columns.time2);
  if (id_col < 0 || time_col < 0 || status_col < 0) {
    throw schema_error(path + ": need columns '" + columns.id + "', '" +
                       columns.time + "', '" + columns.status + "'");
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  SurvivalDataset ds;
  ds.ids.reserve(table.rows.size());
  ds.time.resize(n);
  ds.time2.setConstant(n, kNaN);
  ds.event.reserve(table.rows.size());
  ds.lower.resize(n);
  ds.upper.resize(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    std::ostringstream where;
    where << path << " row " << i + 1;
    ds.ids.push_back(row[static_cast<std::size_t>(id_col)]);
    ds.time[i] =
        detail::parse_double(row[static_cast<std::size_t>(time_col)],
                             where.str());
    const double status_value = detail::parse_double(
        row[static_cast<std::size_t>(status_col)], where.str());
    const int status = static_cast<int>(status_value);
    if (status_value != status || status < 0 || status > 3) {
      throw schema_error(where.str() + ": status must be 0, 1, 2, or 3");
    }
    const auto censoring = static_cast<Censoring>(status);
    ds.event.push_back(censoring);
    if (!(ds.time[i] > 0.0)) {
      throw schema_error(where.str() + ": time must be positive");
    }
    const double log_t = std::log(ds.time[i]);
    switch (censoring) {
      case Censoring::event:
        ds.lower[i] = log_t;
        ds.upper[i] = log_t;
        break;
      case Censoring::right:
        ds.lower[i] = log_t;
        ds.upper[i] = kInf;
        break;
      case Censoring::left:
        ds.lower[i] = -kInf;
        ds.upper[i] = log_t;
        break;
      case Censoring::interval: {
        if (time2_col < 0) {
          throw schema_error(where.str() +
                             ": interval status needs a time2 column");
        }
        ds.time2[i] = detail::parse_double(
            row[static_cast<std::size_t>(time2_col)], where.str());
        ds.lower[i] = log_t;
        ds.upper[i] = std::log(ds.time2[i]);
        break;
      }
    }
  }
  ds.validate();
  return ds;
}

void attach_covariates(SurvivalDataset& ds, const std::string& path,
                       const std::string& id_column) {
  const auto table = detail::read_csv(path);
  const long id_col = table.column(id_column);
  if (id_col < 0) {
    throw schema_error(path + ": need id column '" + id_column + "'");
  }
  const auto by_id = index_by_id(table, id_col, path);

  const auto q = static_cast<Eigen::Index>(table.header.size()) - 1;
  ds.Z.resize(ds.n(), q + 1);
  ds.Z.col(0).setOnes();
  ds.covariate_names.clear();
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (static_cast<long>(j) != id_col) {
      ds.covariate_names.push_back(table.header[j]);
    }
  }
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const auto& id = ds.ids[static_cast<std::size_t>(i)];
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw schema_error(path + ": no covariate row for id '" + id + "'");
    }
    const auto& row = table.rows[it->second];
    Eigen::Index out = 1;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (static_cast<long>(j) == id_col) continue;
      ds.Z(i, out++) = detail::parse_double(row[j], path + " id " + id);
    }
  }
  ds.validate();
}

void attach_expression(SurvivalDataset& ds, const std::string& path,
                       GeneOrientation orientation,
                       const std::string& id_column) {
  const auto table = detail::read_csv(path);
  if (orientation == GeneOrientation::genes_as_cols) {
    const long id_col = table.column(id_column);
    if (id_col < 0) {
      throw schema_error(path + ": need id column '" + id_column + "'");
    }
    const auto by_id = index_by_id(table, id_col, path);
    const auto p = static_cast<Eigen::Index>(table.header.size()) - 1;
    ds.X.resize(ds.n(), p);
    ds.gene_names.clear();
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      if (static_cast<long>(j) != id_col) ds.gene_names.push_back(table.header[j]);
    }
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      const auto& id = ds.ids[static_cast<std::size_t>(i)];
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw schema_error(path + ": no expression row for id '" + id + "'");
      }
      const auto& row = table.rows[it->second];
      Eigen::Index out = 0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (static_cast<long>(j) == id_col) continue;
        ds.X(i, out++) = detail::parse_double(row[j], path + " id " + id);
      }
    }
  } else {
    // One row per gene; sample ids live in the header past the first column.
    std::unordered_map<std::string, Eigen::Index> col_of_id;
    for (std::size_t j = 1; j < table.header.size(); ++j) {
      if (!col_of_id.emplace(table.header[j], static_cast<Eigen::Index>(j))
               .second) {
        throw schema_error(path + ": duplicate sample id '" + table.header[j] +
                           "'");
      }
    }
    const auto p = static_cast<Eigen::Index>(table.rows.size());
    ds.X.resize(ds.n(), p);
    ds.gene_names.clear();
    for (const auto& row : table.rows) ds.gene_names.push_back(row[0]);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      const auto& id = ds.ids[static_cast<std::size_t>(i)];
      const auto it = col_of_id.find(id);
      if (it == col_of_id.end()) {
        throw schema_error(path + ": no expression column for id '" + id +
                           "'");
      }
      for (Eigen::Index g = 0; g < p; ++g) {
        ds.X(i, g) = detail::parse_double(
            table.rows[static_cast<std::size_t>(g)]
                      [static_cast<std::size_t>(it->second)],
            path + " id " + id);
      }
    }
  }
  ds.validate();
}

ExpressionFilter preprocess_expression(const Eigen::MatrixXd& counts,
                                       double min_q75) {
  if (!counts.allFinite() || (counts.array() < 0.0).any()) {
    throw schema_error("expression counts must be finite and nonnegative");
  }
  const Eigen::Index n = counts.rows();
  const Eigen::Index p = counts.cols();
  if (n == 0 || p == 0) throw schema_error("empty expression matrix");

  // Per-sample normalizers over all genes, before any filtering.
  Eigen::VectorXd q75(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> row(counts.row(i).begin(), counts.row(i).end());
    q75[i] = quantile(std::move(row), 0.75);
    if (q75[i] <= 0.0) {
      std::ostringstream msg;
      msg << "sample " << i + 1
          << " is degenerate: 75th percentile of counts is zero";
      throw schema_error(msg.str());
    }
  }

  ExpressionFilter out;
  for (Eigen::Index k = 0; k < p; ++k) {
    std::vector<double> col(counts.col(k).begin(), counts.col(k).end());
    if (quantile(std::move(col), 0.75) > min_q75) out.kept.push_back(k);
  }
  out.values.resize(n, static_cast<Eigen::Index>(out.kept.size()));
  for (std::size_t j = 0; j < out.kept.size(); ++j) {
    const Eigen::Index k = out.kept[j];
    out.values.col(static_cast<Eigen::Index>(j)) =
        ((counts.col(k).array() + 1.0) / q75.array()).log10();
  }
  return out;
}

Eigen::MatrixXd residualize_confounders(const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& C) {
  if (C.rows() != X.rows()) throw schema_error("confounder row count != n");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
  if (qr.rank() < C.cols()) {
    throw schema_error(
        "confounder matrix is rank deficient; remove collinear columns");
  }
  return X - C * qr.solve(X);
}

Partition partition_by_censoring(const SurvivalDataset& ds) {
  Partition part;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    if (ds.event[static_cast<std::size_t>(i)] == Censoring::event) {
      part.observed_idx.push_back(i);
    } else {
      part.censored_idx.push_back(i);
    }
  }
  return part;
}

PredictionInputs load_prediction_inputs(const std::string& covariates_path,
                                        const std::string& expression_path,
                                        GeneOrientation orientation,
                                        const std::string& id_column) {
  const detail::CsvTable table = detail::read_csv(covariates_path);
  const long id_col = table.column(id_column);
  if (id_col < 0)
    throw schema_error("covariate file lacks an id column '" + id_column +
                       "': " + covariates_path);

  // A placeholder outcome record lets the id-join loaders run unchanged.
  SurvivalDataset ds;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) throw schema_error("no subjects in " + covariates_path);
  ds.ids.reserve(static_cast<std::size_t>(n));
  for (const auto& row : table.rows)
    ds.ids.push_back(row[static_cast<std::size_t>(id_col)]);
  ds.time = Eigen::VectorXd::Ones(n);
  ds.time2 = Eigen::VectorXd::Constant(
      n, std::numeric_limits<double>::quiet_NaN());
  ds.event.assign(static_cast<std::size_t>(n), Censoring::event);
  ds.lower = Eigen::VectorXd::Zero(n);
  ds.upper = Eigen::VectorXd::Zero(n);

  attach_covariates(ds, covariates_path, id_column);
  attach_expression(ds, expression_path, orientation, id_column);

  PredictionInputs out;
  out.ids = std::move(ds.ids);
  out.Z = std::move(ds.Z);
  out.X = std::move(ds.X);
  out.covariate_names = std::move(ds.covariate_names);
  out.gene_names = std::move(ds.gene_names);
  return out;
}

}  // namespace gpaft
