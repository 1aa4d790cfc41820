#include "gpaft/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "gpaft/errors.hpp"

namespace gpaft {

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X,
                               const std::optional<std::vector<Eigen::Index>>& mask) {
  if (!mask) return X;
  if (mask->empty()) throw schema_error("kernel gene mask is empty");
  Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(mask->size()));
  for (std::size_t j = 0; j < mask->size(); ++j) {
    const Eigen::Index col = (*mask)[j];
    if (col < 0 || col >= X.cols()) {
      throw schema_error("kernel gene mask index out of range");
    }
    sub.col(static_cast<Eigen::Index>(j)) = X.col(col);
  }
  return sub;
}

// Pairwise squared distances via the Gram expansion, clamped at zero.
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& Xm) {
  const Eigen::VectorXd sq = Xm.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, Xm.rows()) +
                       sq.transpose().replicate(Xm.rows(), 1) -
                       2.0 * (Xm * Xm.transpose());
  return d2.cwiseMax(0.0);
}

}  // namespace

GramMatrix normalized_rbf(const Eigen::MatrixXd& X,
                          const std::optional<std::vector<Eigen::Index>>& mask,
                          const std::string& name) {
  if (X.rows() < 2) throw schema_error("kernel needs at least two samples");
  const Eigen::MatrixXd Xm = select_columns(X, mask);
  Eigen::MatrixXd d2 = squared_distances(Xm);
  const double denom = d2.maxCoeff();
  if (denom <= 0.0) {
    throw numeric_error("degenerate kernel '" + name +
                        "': all samples identical on the masked genes");
  }
  GramMatrix gram;
  gram.values = (-d2 / denom).array().exp();
  gram.values.diagonal().setOnes();
  // Exact symmetry; the GEMM route can leave last-bit asymmetry.
  gram.values = ((gram.values + gram.values.transpose()) / 2.0).eval();
  gram.name = name;
  gram.norm_denominator = denom;
  gram.mask = mask;
  return gram;
}

GramMatrix identity_gram(Eigen::Index n) {
  GramMatrix gram;
  gram.values = Eigen::MatrixXd::Identity(n, n);
  gram.name = "identity";
  gram.norm_denominator = 0.0;
  return gram;
}

std::vector<PathwayMask> load_pathway_masks(
    const std::string& path, const std::vector<std::string>& gene_names) {
  std::ifstream in(path);
  if (!in) throw schema_error("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw schema_error(path + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw schema_error(path + ": expected a JSON array of pathways");
  }
  std::unordered_map<std::string, Eigen::Index> col_of_gene;
  for (std::size_t j = 0; j < gene_names.size(); ++j) {
    col_of_gene.emplace(gene_names[j], static_cast<Eigen::Index>(j));
  }
  std::vector<PathwayMask> masks;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry.contains("genes") || !entry["genes"].is_array()) {
      throw schema_error(path + ": each pathway needs 'name' and 'genes'");
    }
    PathwayMask mask;
    mask.name = entry["name"].get<std::string>();
    for (const auto& gene : entry["genes"]) {
      const auto it = col_of_gene.find(gene.get<std::string>());
      if (it != col_of_gene.end()) mask.columns.push_back(it->second);
    }
    if (mask.columns.empty()) {
      throw schema_error(path + ": pathway '" + mask.name +
                         "' matches no gene in the expression panel");
    }
    masks.push_back(std::move(mask));
  }
  if (masks.empty()) throw schema_error(path + ": no pathways defined");
  return masks;
}

KernelStack pathway_stack(const Eigen::MatrixXd& X,
                          const std::vector<PathwayMask>& masks,
                          bool include_complement) {
  if (masks.empty()) throw schema_error("pathway list is empty");
  KernelStack stack;
  stack.n = X.rows();
  std::unordered_set<Eigen::Index> used;
  for (const auto& mask : masks) {
    if (mask.columns.empty()) {
      throw schema_error("pathway '" + mask.name + "' has an empty gene set");
    }
    stack.kernels.push_back(normalized_rbf(X, mask.columns, mask.name));
    used.insert(mask.columns.begin(), mask.columns.end());
  }
  if (include_complement) {
    std::vector<Eigen::Index> rest;
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
      if (!used.contains(k)) rest.push_back(k);
    }
    if (rest.empty()) {
      std::cerr << "pathway_stack: complement gene set is empty, skipping "
                   "complement kernel\n";
    } else {
      stack.kernels.push_back(normalized_rbf(X, rest, "complement"));
    }
  }
  return stack;
}

CovarianceAssembly assemble_covariance(const KernelStack& stack,
                                       const Eigen::VectorXd& sigma2,
                                       double noise2) {
  if (sigma2.size() != stack.size()) {
    throw schema_error("sigma2 length != number of kernels");
  }
  if (!(noise2 > 0.0)) throw schema_error("noise variance must be positive");
  if ((sigma2.array() < 0.0).any()) {
    throw schema_error("kernel variances must be nonnegative");
  }
  const Eigen::Index n = stack.n;
  CovarianceAssembly out;
  out.ktilde = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s < stack.size(); ++s) {
    if (sigma2[s] != 0.0) {
      out.ktilde.noalias() +=
          sigma2[s] * stack.kernels[static_cast<std::size_t>(s)].values;
    }
  }
  out.ktilde.diagonal().array() += noise2;

  const double base = out.ktilde.trace() / static_cast<double>(n);
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd attempt = out.ktilde;
    if (jitter > 0.0) attempt.diagonal().array() += jitter;
    out.factor.compute(attempt);
    if (out.factor.info() == Eigen::Success) break;
    jitter = jitter == 0.0 ? 1e-10 * base : 10.0 * jitter;
    if (jitter > 1e-4 * base) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          out.ktilde, Eigen::EigenvaluesOnly);
      std::ostringstream msg;
      msg << "covariance not positive definite after jitter; smallest "
             "eigenvalue ~ "
          << es.eigenvalues().minCoeff();
      throw numeric_error(msg.str());
    }
  }
  out.jitter = jitter;
  out.log_det =
      2.0 * out.factor.matrixLLT().diagonal().array().log().sum();
  return out;
}

Eigen::VectorXd cross_covariance(const Eigen::VectorXd& x_star,
                                 const Eigen::MatrixXd& X,
                                 const KernelStack& stack,
                                 const Eigen::VectorXd& sigma2) {
  if (x_star.size() != X.cols()) {
    throw schema_error("test point dimension != training gene count");
  }
  if (sigma2.size() != stack.size()) {
    throw schema_error("sigma2 length != number of kernels");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  for (Eigen::Index s = 0; s < stack.size(); ++s) {
    if (sigma2[s] == 0.0) continue;
    const auto& gram = stack.kernels[static_cast<std::size_t>(s)];
    if (gram.norm_denominator <= 0.0) {
      // Identity-style Gram: no similarity carries to new points.
      continue;
    }
    const Eigen::MatrixXd Xm = select_columns(X, gram.mask);
    Eigen::VectorXd xs;
    if (gram.mask) {
      xs.resize(static_cast<Eigen::Index>(gram.mask->size()));
      for (std::size_t j = 0; j < gram.mask->size(); ++j) {
        xs[static_cast<Eigen::Index>(j)] = x_star[(*gram.mask)[j]];
      }
    } else {
      xs = x_star;
    }
    const Eigen::VectorXd d2 =
        (Xm.rowwise() - xs.transpose()).rowwise().squaredNorm();
    out.array() +=
        sigma2[s] * (-d2.array() / gram.norm_denominator).exp();
  }
  return out;
}

}  // namespace gpaft
