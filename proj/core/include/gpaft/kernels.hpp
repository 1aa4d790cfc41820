#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace gpaft {

// One precomputed Gram matrix. norm_denominator is the max pairwise squared
// distance frozen at construction; test-point kernels reuse it so train and
// test live on the same scale.
struct GramMatrix {
  Eigen::MatrixXd values;
  std::string name;
  double norm_denominator = 0.0;
  std::optional<std::vector<Eigen::Index>> mask;   // columns of X, empty = all
};

struct KernelStack {
  std::vector<GramMatrix> kernels;
  Eigen::Index n = 0;

  [[nodiscard]] Eigen::Index size() const {
    return static_cast<Eigen::Index>(kernels.size());
  }
};

// Ktilde = sum_s sigma2[s] * k_s + noise2 * I with its Cholesky factor.
// jitter records any diagonal inflation that the factorization needed.
struct CovarianceAssembly {
  Eigen::MatrixXd ktilde;
  Eigen::LLT<Eigen::MatrixXd> factor;
  double log_det = 0.0;
  double jitter = 0.0;

  [[nodiscard]] Eigen::MatrixXd solve(
      const Eigen::Ref<const Eigen::MatrixXd>& b) const {
    return factor.solve(b);
  }
};

// Gram entries exp(-|x_i - x_j|^2 / max_{l,m}|x_l - x_m|^2) over the masked
// columns. Throws numeric_error when all rows coincide (denominator zero).
[[nodiscard]] GramMatrix normalized_rbf(
    const Eigen::MatrixXd& X,
    const std::optional<std::vector<Eigen::Index>>& mask = std::nullopt,
    const std::string& name = "genome");

// Identity Gram, the "no similarity structure" baseline kernel.
[[nodiscard]] GramMatrix identity_gram(Eigen::Index n);

struct PathwayMask {
  std::string name;
  std::vector<Eigen::Index> columns;
};

// Pathway JSON: [{"name": ..., "genes": [ids...]}, ...]. Gene ids are matched
// against gene_names; ids absent from the panel are dropped, and a pathway
// with no matched gene at all is a schema_error.
[[nodiscard]] std::vector<PathwayMask> load_pathway_masks(
    const std::string& path, const std::vector<std::string>& gene_names);

// One kernel per mask, plus (optionally) a kernel on the genes no mask uses.
// An empty complement is skipped with a stderr note rather than an error.
[[nodiscard]] KernelStack pathway_stack(const Eigen::MatrixXd& X,
                                        const std::vector<PathwayMask>& masks,
                                        bool include_complement);

// Factorization retries with diagonal jitter 1e-10*trace/n escalating by 10x
// to 1e-4*trace/n, then throws numeric_error with a smallest-eigenvalue
// estimate. noise2 > 0 keeps this path essentially unused.
[[nodiscard]] CovarianceAssembly assemble_covariance(
    const KernelStack& stack, const Eigen::VectorXd& sigma2, double noise2);

// k_*(x_*, X) entries sum_s sigma2[s] * exp(-masked dist^2 / frozen denom).
[[nodiscard]] Eigen::VectorXd cross_covariance(const Eigen::VectorXd& x_star,
                                               const Eigen::MatrixXd& X,
                                               const KernelStack& stack,
                                               const Eigen::VectorXd& sigma2);

}  // namespace gpaft
