#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gpaft/errors.hpp"
#include "gpaft/kernels.hpp"
#include "gpaft/metrics.hpp"
#include "gpaft/predict.hpp"
#include "gpaft/rng.hpp"

namespace {

struct Model {
  gpaft::KernelStack stack;
  Eigen::MatrixXd Z, X;
  gpaft::FitResult fit;
};

// Hand-assembled fitted model; the predictor only consumes parameters and
// the completed log-time vector.
Model make_model(std::uint64_t seed, Eigen::Index n, bool with_identity,
                 double noise2 = 0.3) {
  gpaft::RandomStream rng(seed);
  Model m;
  m.X.resize(n, 4);
  for (Eigen::Index i = 0; i < m.X.size(); ++i) {
    m.X(i / 4, i % 4) = rng.normal();
  }
  m.Z.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.Z(i, 0) = 1.0;
    m.Z(i, 1) = rng.normal();
  }
  m.stack.n = n;
  m.stack.kernels.push_back(gpaft::normalized_rbf(m.X));
  if (with_identity) m.stack.kernels.push_back(gpaft::identity_gram(n));

  m.fit.params.beta = Eigen::Vector2d(1.4, -0.6);
  m.fit.params.sigma2 =
      Eigen::VectorXd::Constant(m.stack.size(), 0.8);
  m.fit.params.noise2 = noise2;
  m.fit.t_bar.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.fit.t_bar[i] = 1.0 + rng.normal();
  return m;
}

// Brute-force cross-covariance: masked squared distances over the frozen
// training denominators, identity kernels contributing nothing.
Eigen::VectorXd kstar_oracle(const Model& m, const Eigen::VectorXd& x_star) {
  Eigen::VectorXd k = Eigen::VectorXd::Zero(m.X.rows());
  for (std::size_t s = 0; s < m.stack.kernels.size(); ++s) {
    const auto& g = m.stack.kernels[s];
    if (g.norm_denominator <= 0.0) continue;
    for (Eigen::Index i = 0; i < m.X.rows(); ++i) {
      double d2 = 0.0;
      if (g.mask) {
        for (auto c : *g.mask) {
          const double diff = x_star[c] - m.X(i, c);
          d2 += diff * diff;
        }
      } else {
        d2 = (x_star - m.X.row(i).transpose()).squaredNorm();
      }
      k[i] += m.fit.params.sigma2[static_cast<Eigen::Index>(s)] *
              std::exp(-d2 / g.norm_denominator);
    }
  }
  return k;
}

}  // namespace

TEST_CASE("kriging equals dense joint-gaussian conditioning") {
  for (std::uint64_t seed : {60, 61, 62}) {
    const auto m = make_model(seed, 5 + 3 * static_cast<Eigen::Index>(seed % 6),
                              true);
    const gpaft::Predictor pred(m.fit, m.stack, m.Z, m.X);
    gpaft::RandomStream rng(seed + 100);

    for (int trial = 0; trial < 4; ++trial) {
      Eigen::VectorXd x_star(4), z_star(2);
      for (int j = 0; j < 4; ++j) x_star[j] = rng.normal();
      z_star << 1.0, rng.normal();

      const auto got = pred.predict_log_time(z_star, x_star);

      // Dense oracle: condition the joint normal of (T_train, T_star).
      const Eigen::Index n = m.X.rows();
      Eigen::MatrixXd K =
          m.fit.params.noise2 * Eigen::MatrixXd::Identity(n, n);
      for (Eigen::Index s = 0; s < m.stack.size(); ++s) {
        K += m.fit.params.sigma2[s] *
             m.stack.kernels[static_cast<std::size_t>(s)].values;
      }
      const Eigen::VectorXd k = kstar_oracle(m, x_star);
      const double prior = m.fit.params.sigma2.sum() + m.fit.params.noise2;
      const Eigen::MatrixXd Kinv = K.inverse();
      const double want_mean =
          m.fit.params.beta.dot(z_star) +
          k.dot(Kinv * (m.fit.t_bar - m.Z * m.fit.params.beta));
      const double want_var = prior - k.dot(Kinv * k);

      CHECK(got.mean_log_time == doctest::Approx(want_mean).epsilon(1e-8));
      CHECK(got.var_log_time == doctest::Approx(want_var).epsilon(1e-8));
      CHECK(got.risk_score == -got.mean_log_time);
    }
  }
}

TEST_CASE("a faraway point reverts to the prior") {
  const auto m = make_model(63, 10, false);
  const gpaft::Predictor pred(m.fit, m.stack, m.Z, m.X);
  const Eigen::VectorXd x_far = Eigen::VectorXd::Constant(4, 1e6);
  Eigen::VectorXd z_star(2);
  z_star << 1.0, 2.0;
  const auto got = pred.predict_log_time(z_star, x_far);
  CHECK(got.mean_log_time ==
        doctest::Approx(m.fit.params.beta.dot(z_star)).epsilon(1e-12));
  CHECK(got.var_log_time ==
        doctest::Approx(m.fit.params.sigma2[0] + m.fit.params.noise2)
            .epsilon(1e-12));
}

TEST_CASE("near-noiseless kriging interpolates the training data") {
  const auto m = make_model(64, 12, false, 1e-8);
  const gpaft::Predictor pred(m.fit, m.stack, m.Z, m.X);
  for (Eigen::Index i : {0, 5, 11}) {
    const auto got =
        pred.predict_log_time(m.Z.row(i).transpose(), m.X.row(i).transpose());
    CHECK(std::abs(got.mean_log_time - m.fit.t_bar[i]) < 1e-3);
    CHECK(got.var_log_time < 1e-3);
  }
}

TEST_CASE("predictive variance stays inside (0, prior]") {
  const auto m = make_model(65, 15, true);
  const gpaft::Predictor pred(m.fit, m.stack, m.Z, m.X);
  const double prior = m.fit.params.sigma2.sum() + m.fit.params.noise2;
  gpaft::RandomStream rng(66);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x_star(4), z_star(2);
    for (int j = 0; j < 4; ++j) x_star[j] = 3.0 * rng.normal();
    z_star << 1.0, rng.normal();
    const auto got = pred.predict_log_time(z_star, x_star);
    CHECK(got.var_log_time > 0.0);
    CHECK(got.var_log_time <= prior + 1e-10);
  }
}

TEST_CASE("fitted values in the design span leave zero residual weight") {
  auto m = make_model(67, 10, false);
  m.fit.t_bar = m.Z * m.fit.params.beta;   // exactly representable mean
  const gpaft::Predictor pred(m.fit, m.stack, m.Z, m.X);
  gpaft::RandomStream rng(68);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x_star(4), z_star(2);
    for (int j = 0; j < 4; ++j) x_star[j] = rng.normal();
    z_star << 1.0, rng.normal();
    const auto got = pred.predict_log_time(z_star, x_star);
    CHECK(got.mean_log_time ==
          doctest::Approx(m.fit.params.beta.dot(z_star)).epsilon(1e-10));
  }
}

TEST_CASE("survival probability is a proper log-normal tail") {
  gpaft::Prediction p;
  p.mean_log_time = 2.0;
  p.var_log_time = 0.49;
  CHECK(gpaft::survival_probability(p, 1e-12) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gpaft::survival_probability(p, 1e12) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(gpaft::survival_probability(p, std::exp(2.0)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  double prev = 1.0;
  for (double t = 0.5; t < 100.0; t *= 1.5) {
    const double s = gpaft::survival_probability(p, t);
    CHECK(s <= prev);
    prev = s;
  }
  CHECK_THROWS_AS((void)gpaft::survival_probability(p, 0.0),
                  gpaft::schema_error);
}

TEST_CASE("product-limit estimate matches the hand calculation") {
  Eigen::VectorXd t(3);
  t << 1.0, 2.0, 3.0;
  const auto km = gpaft::kaplan_meier(t, {1, 1, 1});
  CHECK(km(0.5) == 1.0);
  CHECK(km(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(km(2.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(km(3.0) == 0.0);
  CHECK(km(99.0) == 0.0);

  // A censored middle subject thins the risk set without a jump.
  const auto km2 = gpaft::kaplan_meier(t, {1, 0, 1});
  CHECK(km2(1.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(km2(2.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(km2(3.0) == 0.0);
}

TEST_CASE("weighted concordance equals the exhaustive pair scan") {
  gpaft::RandomStream rng(70);
  for (int inst = 0; inst < 20; ++inst) {
    const long n = 8 + static_cast<long>(rng.uniform() * 23.0);
    Eigen::VectorXd times(n), risk(n);
    std::vector<int> ind(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      times[i] = 0.5 + 5.0 * rng.uniform();
      risk[i] = std::floor(10.0 * rng.uniform()) / 10.0;   // force some ties
      ind[static_cast<std::size_t>(i)] = rng.uniform() < 0.6 ? 1 : 0;
    }
    if (std::count(ind.begin(), ind.end(), 1) < 2) {
      ind[0] = ind[1] = 1;
    }
    std::vector<int> flipped(ind.size());
    for (std::size_t i = 0; i < ind.size(); ++i) flipped[i] = 1 - ind[i];
    const auto H = gpaft::kaplan_meier(times, flipped);
    const double tau = times.maxCoeff() * 0.9;

    double num = 0.0, den = 0.0;
    for (long i = 0; i < n; ++i) {
      if (ind[static_cast<std::size_t>(i)] != 1 || !(times[i] < tau)) continue;
      const double h = H(times[i]);
      if (h <= 0.0) continue;
      for (long j = 0; j < n; ++j) {
        if (!(times[i] < times[j])) continue;
        const double w = 1.0 / (h * h);
        den += w;
        if (risk[i] > risk[j]) num += w;
        if (risk[i] == risk[j]) num += 0.5 * w;
      }
    }
    if (den == 0.0) continue;

    long pairs = 0;
    const double got = gpaft::uno_c_index(risk, times, ind, tau, H, &pairs);
    CHECK(got == num / den);
    CHECK(pairs > 0);
  }
}

TEST_CASE("concordance hits its endpoints on perfectly ordered risks") {
  Eigen::VectorXd times(5), risk(5);
  times << 1, 2, 3, 4, 5;
  risk << 5, 4, 3, 2, 1;   // shortest survivor carries the highest risk
  const std::vector<int> ind(5, 1);
  const gpaft::StepFunction H;   // no censoring: weight one
  CHECK(gpaft::uno_c_index(risk, times, ind, 4.5, H) == 1.0);
  const Eigen::VectorXd flipped = -risk;
  CHECK(gpaft::uno_c_index(flipped, times, ind, 4.5, H) == 0.0);

  Eigen::VectorXd same(5);
  same.setConstant(5.0);
  CHECK_THROWS_AS((void)gpaft::uno_c_index(risk, same, ind, 4.0, H),
                  gpaft::numeric_error);
}

TEST_CASE("brier score reproduces the four-subject hand example") {
  Eigen::VectorXd times(4), s_hat(4);
  times << 1.0, 2.0, 3.0, 4.0;
  s_hat << 0.9, 0.8, 0.7, 0.6;
  const std::vector<int> ind{1, 0, 1, 1};
  std::vector<int> flipped{0, 1, 0, 0};
  const auto H = gpaft::kaplan_meier(times, flipped);

  // Failure by 2.5: subject 1 only, (0.9)^2 / H(1) = .81. Censored subject 2
  // drops out. Survivors 3 and 4: (.3)^2 / (2/3) and (.4)^2 / (2/3).
  // Divided by n = 4.
  const double want = (0.81 + 0.135 + 0.24) / 4.0;
  CHECK(gpaft::brier(2.5, s_hat, times, ind, H) ==
        doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("ramp integrates to one half") {
  const double tau = 7.0;
  Eigen::VectorXd grid(100), vals(100);
  for (int k = 0; k < 100; ++k) {
    grid[k] = tau * static_cast<double>(k + 1) / 100.0;
    vals[k] = grid[k] / tau;
  }
  CHECK(gpaft::integrate_mean(grid, vals, tau) ==
        doctest::Approx(0.5).epsilon(2e-3));

  // One subject surviving past tau whose estimate makes B(t) = t/tau.
  Eigen::VectorXd t1(1);
  t1 << 2.0 * tau;
  Eigen::MatrixXd surv(1, 100);
  for (int k = 0; k < 100; ++k) surv(0, k) = 1.0 - std::sqrt(grid[k] / tau);
  const double ibs = gpaft::integrated_brier(surv, grid, t1, {1},
                                             gpaft::StepFunction{}, tau);
  CHECK(ibs == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("integration guards its grid") {
  Eigen::VectorXd grid(2), vals(2);
  grid << 1.0, 0.5;
  vals << 1.0, 1.0;
  CHECK_THROWS_AS((void)gpaft::integrate_mean(grid, vals, 2.0),
                  gpaft::schema_error);
  grid << 1.0, 3.0;
  CHECK_THROWS_AS((void)gpaft::integrate_mean(grid, vals, 2.0),
                  gpaft::schema_error);
}

TEST_CASE("time-dependent auc rewards perfect ordering") {
  Eigen::VectorXd times(6), risk(6);
  times << 1, 2, 3, 4, 5, 6;
  risk << 6, 5, 4, 3, 2, 1;
  const std::vector<int> ind(6, 1);
  Eigen::VectorXd grid(10);
  for (int k = 0; k < 10; ++k) grid[k] = 0.55 * static_cast<double>(k + 1);
  const gpaft::StepFunction H;
  CHECK(gpaft::integrated_auc(risk, times, ind, 5.5, grid, H) == 1.0);
  const Eigen::VectorXd anti = -risk;
  CHECK(gpaft::integrated_auc(anti, times, ind, 5.5, grid, H) == 0.0);
}

TEST_CASE("oracle evaluation plans use true times everywhere") {
  Eigen::VectorXd times(5);
  times << 3, 1, 4, 1.5, 9;
  const std::vector<int> ind{1, 0, 0, 1, 0};

  gpaft::EvalConfig oracle;
  oracle.oracle_censoring = true;
  const auto plan = gpaft::make_eval_plan(times, ind, oracle);
  CHECK(plan.tau == 9.0);
  CHECK(plan.H.times.empty());   // weight identically one
  CHECK(plan.indicators == std::vector<int>(5, 1));
  REQUIRE(plan.grid.size() == 100);
  CHECK(plan.grid[99] == doctest::Approx(9.0));
  CHECK(plan.grid[0] == doctest::Approx(0.09));

  gpaft::EvalConfig real;
  const auto plan2 = gpaft::make_eval_plan(times, ind, real);
  CHECK(plan2.tau == 4.0);   // second largest observed time
  CHECK(plan2.indicators == ind);
  CHECK(!plan2.H.times.empty());

  gpaft::EvalConfig fixed;
  fixed.tau = 2.5;
  fixed.grid.resize(3);
  fixed.grid << 0.5, 1.0, 2.0;
  const auto plan3 = gpaft::make_eval_plan(times, ind, fixed);
  CHECK(plan3.tau == 2.5);
  CHECK(plan3.grid == fixed.grid);
}

TEST_CASE("full evaluation report carries consistent pieces") {
  gpaft::RandomStream rng(71);
  const long n = 40;
  Eigen::VectorXd times(n), risk(n);
  std::vector<int> ind(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double lt = 1.0 + 0.8 * rng.normal();
    times[i] = std::exp(lt);
    risk[i] = -lt + 0.3 * rng.normal();
    ind[static_cast<std::size_t>(i)] = rng.uniform() < 0.7 ? 1 : 0;
  }
  gpaft::EvalConfig cfg;
  const auto plan = gpaft::make_eval_plan(times, ind, cfg);
  Eigen::MatrixXd surv(n, plan.grid.size());
  for (long i = 0; i < n; ++i) {
    gpaft::Prediction p;
    p.mean_log_time = -risk[i];
    p.var_log_time = 0.64;
    for (Eigen::Index k = 0; k < plan.grid.size(); ++k) {
      surv(i, k) = gpaft::survival_probability(p, plan.grid[k]);
    }
  }
  const auto report = gpaft::evaluate_predictions(risk, surv, times, plan);
  CHECK(report.tau == plan.tau);
  CHECK(report.n_pairs > 0);
  CHECK(report.c_index > 0.5);    // informative risk scores
  CHECK(report.iauc > 0.5);
  CHECK(report.ibs < 0.25);       // beats the uninformative constant
  CHECK(std::isfinite(report.ibs));
}
