// Hot-path timings: Gram construction, covariance assembly, Gibbs sweeps,
// the two M-step implementations, and per-point kriging.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "gpaft/kernels.hpp"
#include "gpaft/mcem.hpp"
#include "gpaft/mstep.hpp"
#include "gpaft/predict.hpp"
#include "gpaft/rng.hpp"
#include "gpaft/tmvn.hpp"

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
  gpaft::RandomStream rng(seed);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    X(i / cols, i % cols) = rng.normal();
  }
  return X;
}

// One cohort shared by the M-step and prediction benchmarks. Half the rows
// censored: enough imputation mass to exercise the Monte Carlo terms.
struct Cohort {
  gpaft::KernelStack stack;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd X;
  gpaft::Partition part;
  Eigen::VectorXd T_o;
  gpaft::SampleBatch batch;
  gpaft::ModelParams params;

  Cohort(Eigen::Index n, Eigen::Index p, int n_kernels, Eigen::Index s_r) {
    gpaft::RandomStream rng(42);
    X = random_matrix(n, p, 43);
    stack.n = n;
    stack.kernels.push_back(gpaft::normalized_rbf(X));
    if (n_kernels > 1) stack.kernels.push_back(gpaft::identity_gram(n));

    Z.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      Z(i, 0) = 1.0;
      Z(i, 1) = rng.normal();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      (i % 2 == 0 ? part.observed_idx : part.censored_idx).push_back(i);
    }
    const auto n_o = static_cast<Eigen::Index>(part.observed_idx.size());
    const auto n_c = static_cast<Eigen::Index>(part.censored_idx.size());
    T_o.resize(n_o);
    for (Eigen::Index i = 0; i < n_o; ++i) T_o[i] = 1.0 + rng.normal();
    batch.draws.resize(s_r, n_c);
    for (Eigen::Index i = 0; i < batch.draws.size(); ++i) {
      batch.draws(i / n_c, i % n_c) = 0.5 + rng.normal();
    }
    params.beta = Eigen::Vector2d(1.0, -0.4);
    params.sigma2 = Eigen::VectorXd::Constant(stack.size(), 0.8);
    params.noise2 = 0.4;
  }
};

void BM_gram_rbf(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Eigen::MatrixXd X = random_matrix(n, 1000, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gpaft::normalized_rbf(X));
  }
}
BENCHMARK(BM_gram_rbf)->Arg(100)->Arg(250);

void BM_assemble_covariance(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Cohort cohort(n, 200, 2, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gpaft::assemble_covariance(
        cohort.stack, cohort.params.sigma2, cohort.params.noise2));
  }
}
BENCHMARK(BM_assemble_covariance)->Arg(100)->Arg(250);

void BM_gibbs_sweep(benchmark::State& state) {
  const Eigen::Index d = state.range(0);
  gpaft::TruncatedMvnSpec spec;
  spec.mean = Eigen::VectorXd::Zero(d);
  spec.cov = 0.3 * random_matrix(d, d, 11);
  spec.cov = Eigen::MatrixXd(spec.cov * spec.cov.transpose()) +
             Eigen::MatrixXd::Identity(d, d);
  spec.lower = Eigen::VectorXd::Zero(d);
  spec.upper =
      Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  gpaft::GibbsSampler chain(spec, Eigen::VectorXd::Constant(d, 0.5), 1);
  gpaft::RandomStream rng(12);
  gpaft::SampleBatch batch;
  for (auto _ : state) {
    batch.draws.resize(0, d);
    chain.run(1, 0, rng, batch);
    benchmark::DoNotOptimize(batch.draws);
  }
}
BENCHMARK(BM_gibbs_sweep)->Arg(50)->Arg(150);

// One inner iteration of the generic multi-kernel update at M = 1, against
// the eigendecomposition fast path on the same instance.
void BM_mstep_inner_generic(benchmark::State& state) {
  const Cohort cohort(state.range(0), 200, 1, 10);
  const gpaft::McSamples samples(cohort.batch, cohort.T_o, cohort.part,
                                 cohort.stack.n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gpaft::maximize(cohort.params, cohort.stack,
                                             cohort.Z, samples, 1e-8, 1));
  }
}
BENCHMARK(BM_mstep_inner_generic)->Arg(100)->Arg(200);

void BM_mstep_inner_fastpath(benchmark::State& state) {
  const Cohort cohort(state.range(0), 200, 1, 10);
  const gpaft::McSamples samples(cohort.batch, cohort.T_o, cohort.part,
                                 cohort.stack.n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gpaft::single_kernel_maximize(
        cohort.params, cohort.stack.kernels[0], cohort.Z, samples, 1e-8, 1));
  }
}
BENCHMARK(BM_mstep_inner_fastpath)->Arg(100)->Arg(200);

void BM_predict_point(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Cohort cohort(n, 200, 2, 1);
  gpaft::FitResult fit;
  fit.params = cohort.params;
  gpaft::RandomStream rng(13);
  fit.t_bar.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) fit.t_bar[i] = 1.0 + rng.normal();
  const gpaft::Predictor pred(fit, cohort.stack, cohort.Z, cohort.X);
  const Eigen::VectorXd x_star = random_matrix(1, 200, 14).row(0);
  Eigen::VectorXd z_star(2);
  z_star << 1.0, 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pred.predict_log_time(z_star, x_star));
  }
}
BENCHMARK(BM_predict_point)->Arg(100)->Arg(250);

}  // namespace

BENCHMARK_MAIN();
