#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gpaft/kernels.hpp"
#include "gpaft/mstep.hpp"
#include "gpaft/rng.hpp"

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Instance {
  gpaft::KernelStack stack;
  Eigen::MatrixXd Z;
  gpaft::Partition part;
  Eigen::VectorXd T_o;
  gpaft::SampleBatch batch;
  gpaft::ModelParams params;
};

// Random censored-regression instance: M kernels over a 6-column design,
// ~40% censored rows, s_r synthetic conditional draws.
Instance make_instance(std::uint64_t seed, Eigen::Index n, int n_kernels,
                       Eigen::Index s_r) {
  gpaft::RandomStream rng(seed);
  Instance inst;

  Eigen::MatrixXd X(n, 6);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i / 6, i % 6) = rng.normal();
  inst.stack.n = n;
  const std::vector<std::vector<Eigen::Index>> masks{
      {0, 1, 2, 3, 4, 5}, {0, 1, 2}, {3, 4, 5}};
  for (int k = 0; k < n_kernels; ++k) {
    if (k < 3) {
      inst.stack.kernels.push_back(
          gpaft::normalized_rbf(X, masks[static_cast<std::size_t>(k)],
                                "k" + std::to_string(k)));
    } else {
      inst.stack.kernels.push_back(gpaft::identity_gram(n));
    }
  }

  inst.Z.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    inst.Z(i, 0) = 1.0;
    inst.Z(i, 1) = rng.normal();
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    if (rng.uniform() < 0.4 && i > 0) {
      inst.part.censored_idx.push_back(i);
    } else {
      inst.part.observed_idx.push_back(i);
    }
  }
  const auto n_o = static_cast<Eigen::Index>(inst.part.observed_idx.size());
  const auto n_c = static_cast<Eigen::Index>(inst.part.censored_idx.size());
  inst.T_o.resize(n_o);
  for (Eigen::Index i = 0; i < n_o; ++i) inst.T_o[i] = 1.0 + rng.normal();

  inst.batch.draws.resize(s_r, n_c);
  for (Eigen::Index j = 0; j < s_r; ++j) {
    for (Eigen::Index c = 0; c < n_c; ++c) {
      inst.batch.draws(j, c) = 0.5 + rng.normal();
    }
  }

  inst.params.beta = Eigen::Vector2d(0.8, -0.3);
  inst.params.sigma2.resize(n_kernels);
  for (int k = 0; k < n_kernels; ++k) {
    inst.params.sigma2[k] = 0.2 + 1.8 * rng.uniform();
  }
  inst.params.noise2 = 0.1 + 0.9 * rng.uniform();
  return inst;
}

Eigen::MatrixXd dense_ktilde(const gpaft::KernelStack& stack,
                             const Eigen::VectorXd& sigma2, double noise2) {
  Eigen::MatrixXd K =
      noise2 * Eigen::MatrixXd::Identity(stack.n, stack.n);
  for (Eigen::Index s = 0; s < stack.size(); ++s) {
    K += sigma2[s] * stack.kernels[static_cast<std::size_t>(s)].values;
  }
  return K;
}

// Average completed-data log-likelihood straight from the definition.
double loglik_oracle(const Instance& inst, const gpaft::McSamples& samples,
                     const gpaft::ModelParams& p) {
  const Eigen::MatrixXd K = dense_ktilde(inst.stack, p.sigma2, p.noise2);
  const Eigen::MatrixXd Kinv = K.inverse();
  const double ld = std::log(K.determinant());
  const auto n = static_cast<double>(inst.stack.n);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < samples.count(); ++j) {
    const Eigen::VectorXd r = samples.completed(j) - inst.Z * p.beta;
    acc += -0.5 * (n * kLog2Pi + ld + r.dot(Kinv * r));
  }
  return acc / static_cast<double>(samples.count());
}

}  // namespace

TEST_CASE("sample moments match their definition") {
  const auto inst = make_instance(100, 12, 2, 7);
  const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 12);

  CHECK(samples.count() == 7);
  CHECK(samples.n() == 12);

  // Mean: observed slots carry T_o, censored slots the column means.
  for (std::size_t i = 0; i < inst.part.observed_idx.size(); ++i) {
    CHECK(samples.mean()[inst.part.observed_idx[i]] ==
          inst.T_o[static_cast<Eigen::Index>(i)]);
  }
  for (std::size_t c = 0; c < inst.part.censored_idx.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    CHECK(samples.mean()[inst.part.censored_idx[c]] ==
          doctest::Approx(inst.batch.draws.col(col).mean()).epsilon(1e-14));
  }

  // Scatter: centered second moment with 1/s_r scaling.
  const Eigen::RowVectorXd mu = inst.batch.draws.colwise().mean();
  const Eigen::MatrixXd centered = inst.batch.draws.rowwise() - mu;
  const Eigen::MatrixXd want = centered.transpose() * centered / 7.0;
  CHECK((samples.censored_scatter() - want).cwiseAbs().maxCoeff() < 1e-13);

  // completed(j) interleaves draws into censored slots.
  const Eigen::VectorXd c3 = samples.completed(3);
  for (std::size_t i = 0; i < inst.part.observed_idx.size(); ++i) {
    CHECK(c3[inst.part.observed_idx[i]] ==
          inst.T_o[static_cast<Eigen::Index>(i)]);
  }
  for (std::size_t c = 0; c < inst.part.censored_idx.size(); ++c) {
    CHECK(c3[inst.part.censored_idx[c]] ==
          inst.batch.draws(3, static_cast<Eigen::Index>(c)));
  }
}

TEST_CASE("log likelihood agrees with the dense formula") {
  const auto inst = make_instance(101, 10, 2, 1);
  Eigen::VectorXd T(10);
  gpaft::RandomStream rng(1);
  for (Eigen::Index i = 0; i < 10; ++i) T[i] = rng.normal();

  const double got =
      gpaft::log_likelihood(inst.params, inst.stack, inst.Z, T);
  const Eigen::MatrixXd K =
      dense_ktilde(inst.stack, inst.params.sigma2, inst.params.noise2);
  const Eigen::VectorXd r = T - inst.Z * inst.params.beta;
  const double want =
      -0.5 * (10.0 * kLog2Pi + std::log(K.determinant()) +
              r.dot(K.inverse() * r));
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("monte carlo objective is the mean per-sample log likelihood") {
  for (std::uint64_t seed : {102, 103}) {
    const auto inst = make_instance(seed, 14, 3, 9);
    const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 14);

    const double obj =
        gpaft::mc_objective(inst.params, inst.stack, inst.Z, samples);
    CHECK(obj == doctest::Approx(loglik_oracle(inst, samples, inst.params))
                     .epsilon(1e-10));

    const Eigen::VectorXd per =
        gpaft::per_sample_loglik(inst.params, inst.stack, inst.Z, samples);
    REQUIRE(per.size() == 9);
    CHECK(per.mean() == doctest::Approx(obj).epsilon(1e-12));
    // Entry check against one completed draw.
    const Eigen::VectorXd c0 = samples.completed(0);
    CHECK(per[0] ==
          doctest::Approx(gpaft::log_likelihood(inst.params, inst.stack,
                                                inst.Z, c0))
              .epsilon(1e-10));
  }
}

TEST_CASE("omega products match dense matrix algebra") {
  const auto inst = make_instance(104, 11, 2, 6);
  const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 11);
  const auto assembly = gpaft::assemble_covariance(
      inst.stack, inst.params.sigma2, inst.params.noise2);
  const Eigen::VectorXd m = samples.mean() - inst.Z * inst.params.beta;
  const gpaft::OmegaProducts prod(assembly, samples, m);

  const Eigen::MatrixXd Omega = assembly.ktilde.inverse();
  const Eigen::MatrixXd& k0 = inst.stack.kernels[0].values;

  auto quad_oracle = [&](const Eigen::MatrixXd& B) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < 6; ++j) {
      const Eigen::VectorXd r = samples.completed(j) - inst.Z * inst.params.beta;
      acc += r.dot(B * r);
    }
    return acc / 6.0;
  };

  CHECK(prod.quad_mean(k0) ==
        doctest::Approx(quad_oracle(Omega * k0 * Omega)).epsilon(1e-9));
  CHECK(prod.quad_mean_identity() ==
        doctest::Approx(quad_oracle(Omega * Omega)).epsilon(1e-9));
  CHECK(prod.quad_mean_plain() ==
        doctest::Approx(quad_oracle(Omega)).epsilon(1e-9));
  CHECK(prod.trace_omega_k(k0) ==
        doctest::Approx((Omega * k0).trace()).epsilon(1e-10));
  CHECK(prod.trace_omega() == doctest::Approx(Omega.trace()).epsilon(1e-10));
}

TEST_CASE("gls beta solves the weighted normal equations") {
  const auto inst = make_instance(105, 13, 2, 4);
  const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 13);
  const auto assembly = gpaft::assemble_covariance(
      inst.stack, inst.params.sigma2, inst.params.noise2);
  const Eigen::VectorXd beta =
      gpaft::gls_beta(inst.Z, assembly, samples.mean());
  const Eigen::MatrixXd Omega = assembly.ktilde.inverse();
  const Eigen::VectorXd grad =
      inst.Z.transpose() * Omega * (samples.mean() - inst.Z * beta);
  CHECK(grad.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("multiplicative updates keep zero as a fixed point") {
  const auto inst = make_instance(106, 9, 2, 5);
  const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 9);
  const auto assembly = gpaft::assemble_covariance(
      inst.stack, inst.params.sigma2, inst.params.noise2);
  const gpaft::OmegaProducts prod(assembly, samples,
                                  samples.mean() - inst.Z * inst.params.beta);
  CHECK(gpaft::mm_update_sigma(0.0, prod, inst.stack.kernels[0]) == 0.0);
  CHECK(gpaft::mm_update_sigma(0.7, prod, inst.stack.kernels[0]) > 0.0);
  CHECK(gpaft::mm_update_noise(0.4, prod) > 0.0);
}

TEST_CASE("extrapolation follows the slowed secant formula") {
  Eigen::Vector3d prev(1.0, 2.0, 0.5), curr(1.2, 1.9, 0.1);
  const int b = 9;
  const Eigen::Vector3d want =
      (curr + (curr - prev) / (std::sqrt(9.0) + 2.0)).cwiseMax(0.0);
  CHECK((gpaft::extrapolate(prev, curr, b) - want).cwiseAbs().maxCoeff()
        < 1e-15);

  // Clamp keeps proposals feasible.
  Eigen::Vector2d p2(1.0, 0.2), c2(0.9, 0.001);
  CHECK(gpaft::extrapolate(p2, c2, 1).minCoeff() == 0.0);
}

TEST_CASE("analytic score matches central finite differences") {
  for (std::uint64_t seed : {107, 108, 109}) {
    const auto inst = make_instance(seed, 12, 3, 6);
    const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 12);
    const Eigen::VectorXd score =
        gpaft::variance_score(inst.params, inst.stack, inst.Z, samples);
    REQUIRE(score.size() == 4);

    auto obj_at = [&](Eigen::VectorXd sigma2, double noise2) {
      gpaft::ModelParams p = inst.params;
      p.sigma2 = std::move(sigma2);
      p.noise2 = noise2;
      return gpaft::mc_objective(p, inst.stack, inst.Z, samples);
    };

    for (int k = 0; k < 4; ++k) {
      const double x =
          k < 3 ? inst.params.sigma2[k] : inst.params.noise2;
      const double h = 1e-4 * std::max(std::abs(x), 1e-2);
      Eigen::VectorXd up = inst.params.sigma2, dn = inst.params.sigma2;
      double nup = inst.params.noise2, ndn = inst.params.noise2;
      if (k < 3) {
        up[k] += h;
        dn[k] -= h;
      } else {
        nup += h;
        ndn -= h;
      }
      const double fd = (obj_at(up, nup) - obj_at(dn, ndn)) / (2.0 * h);
      CHECK(score[k] ==
            doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("m-step objective trace is monotone and ends at the reported value") {
  for (std::uint64_t seed : {110, 111, 112, 113}) {
    const auto inst = make_instance(seed, 15, 2, 8);
    const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 15);
    const auto state = gpaft::maximize(inst.params, inst.stack, inst.Z,
                                       samples);

    REQUIRE(state.objective_trace.size() >= 2);
    const double slack = 1e-10 * std::abs(state.objective_trace.front());
    for (std::size_t i = 1; i < state.objective_trace.size(); ++i) {
      CHECK(state.objective_trace[i] >=
            state.objective_trace[i - 1] - slack);
    }
    CHECK(state.loglik == state.objective_trace.back());
    CHECK(state.converged);

    // The reported optimum is the public objective at the reported params.
    const double direct =
        gpaft::mc_objective(state.params, inst.stack, inst.Z, samples);
    CHECK(state.loglik == doctest::Approx(direct).epsilon(1e-8));
    CHECK(state.loglik > state.objective_trace.front());
  }
}

TEST_CASE("single-kernel path agrees with the generic optimizer") {
  for (std::uint64_t seed : {114, 115}) {
    const auto inst = make_instance(seed, 16, 1, 6);
    const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 16);

    const auto slow = gpaft::maximize(inst.params, inst.stack, inst.Z,
                                      samples, 1e-12, 5000);
    const auto fast = gpaft::single_kernel_maximize(
        inst.params, inst.stack.kernels[0], inst.Z, samples, 1e-12, 5000);

    CHECK(std::abs(slow.loglik - fast.loglik) <
          1e-6 * std::abs(slow.loglik));
    const auto close_rel = [](double a, double b, double tol) {
      return std::abs(a - b) <= tol * (std::abs(a) + std::abs(b)) / 2.0 + 1e-8;
    };
    CHECK(close_rel(slow.params.sigma2[0], fast.params.sigma2[0], 1e-3));
    CHECK(close_rel(slow.params.noise2, fast.params.noise2, 1e-3));
    CHECK((slow.params.beta - fast.params.beta).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("noise stays above its variance floor") {
  const auto inst = make_instance(116, 10, 2, 5);
  const gpaft::McSamples samples(inst.batch, inst.T_o, inst.part, 10);
  gpaft::ModelParams init = inst.params;
  init.noise2 = 0.0;   // floored on entry, never collapses
  const auto state = gpaft::maximize(init, inst.stack, inst.Z, samples);
  const Eigen::VectorXd& tb = samples.mean();
  const double var =
      (tb.array() - tb.mean()).square().sum() / static_cast<double>(tb.size());
  CHECK(state.params.noise2 >= 1e-8 * var);
}
