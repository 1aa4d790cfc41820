#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "gpaft/errors.hpp"
#include "gpaft/rng.hpp"
#include "gpaft/simulate.hpp"

namespace {

gpaft::SimConfig small_config(int model, Eigen::Index n, Eigen::Index p,
                              Eigen::Index test) {
  auto cfg = gpaft::SimConfig::defaults(model);
  cfg.n = n;
  cfg.p = p;
  cfg.train_size = n - test;
  cfg.test_size = test;
  return cfg;
}

double sample_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd ca = a.array() - a.mean();
  const Eigen::ArrayXd cb = b.array() - b.mean();
  return (ca * cb).sum() / std::sqrt(ca.square().sum() * cb.square().sum());
}

double excess_kurtosis(const Eigen::VectorXd& x) {
  const Eigen::ArrayXd c = x.array() - x.mean();
  const double m2 = c.square().mean();
  const double m4 = c.square().square().mean();
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace

TEST_CASE("covariate design: dummies, age range, block correlation") {
  auto cfg = small_config(1, 2000, 100, 2);
  cfg.seed = 31;
  gpaft::RandomStream rng(cfg.seed);
  const auto cov = gpaft::gen_covariates(cfg, rng);

  CHECK(cov.Z.col(0).isOnes());
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    const int stage = cov.stages[static_cast<std::size_t>(i)];
    double dummies = cov.Z(i, 1) + cov.Z(i, 2) + cov.Z(i, 3);
    CHECK(dummies == (stage == 0 ? 0.0 : 1.0));
    if (stage > 0) CHECK(cov.Z(i, stage) == 1.0);
    const double age = cov.Z(i, 4);
    CHECK(age >= 35.0 * 365.25);
    CHECK(age <= 85.0 * 365.25);
  }
  // Every stage shows up at even probabilities and n = 2000.
  for (int s = 0; s < 4; ++s) {
    CHECK(std::count(cov.stages.begin(), cov.stages.end(), s) > 0);
  }

  // Genes 0 and 1 share a block; genes 0 and 50 do not.
  CHECK(sample_corr(cov.X.col(0), cov.X.col(1)) == doctest::Approx(0.5).epsilon(0.12));
  CHECK(std::abs(sample_corr(cov.X.col(0), cov.X.col(50))) < 0.08);
  // Unit marginal variance per gene.
  const Eigen::ArrayXd c0 = cov.X.col(0).array() - cov.X.col(0).mean();
  CHECK(c0.square().mean() == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("pathway truth covers 600 genes in six fixed blocks") {
  const auto masks = gpaft::truth_pathways();
  REQUIRE(masks.size() == 6);
  const Eigen::Index sizes[6] = {150, 150, 100, 100, 50, 50};
  Eigen::Index offset = 0;
  for (int s = 0; s < 6; ++s) {
    const auto& m = masks[static_cast<std::size_t>(s)];
    REQUIRE(static_cast<Eigen::Index>(m.columns.size()) == sizes[s]);
    CHECK(m.columns.front() == offset);
    CHECK(m.columns.back() == offset + sizes[s] - 1);
    offset += sizes[s];
  }
  CHECK(offset == 600);
}

TEST_CASE("pathway weights: exactly four nonzero, summing to the variance") {
  auto cfg = small_config(1, 40, 700, 2);
  cfg.kernel_truth = gpaft::KernelTruth::pathway;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    gpaft::RandomStream rng(seed);
    Eigen::MatrixXd X(40, 700);
    for (Eigen::Index i = 0; i < X.size(); ++i) {
      X(i / 700, i % 700) = rng.normal();
    }
    const auto truth = gpaft::truth_covariance(X, cfg, rng);
    REQUIRE(truth.weights.size() == 6);
    int nonzero = 0;
    for (int s = 0; s < 6; ++s) {
      if (truth.weights[s] > 0.0) ++nonzero;
      CHECK(truth.weights[s] >= 0.0);
    }
    CHECK(nonzero == 4);
    CHECK(std::abs(truth.weights.sum() - cfg.sigma_g2) <= 1e-12 * cfg.sigma_g2);
    // Kernel diagonals are one, so the truth covariance has the total
    // variance on its diagonal.
    CHECK((truth.K.diagonal().array() - cfg.sigma_g2).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("genome truth scales one normalized kernel") {
  auto cfg = small_config(1, 30, 20, 2);
  gpaft::RandomStream rng(33);
  Eigen::MatrixXd X(30, 20);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i / 20, i % 20) = rng.normal();
  const auto truth = gpaft::truth_covariance(X, cfg, rng);
  CHECK(truth.weights.size() == 0);
  CHECK((truth.K.diagonal().array() - cfg.sigma_g2).abs().maxCoeff() < 1e-12);
  CHECK(truth.K.maxCoeff() <= cfg.sigma_g2 + 1e-12);
}

TEST_CASE("zero genomic variance means an exactly zero effect") {
  auto cfg = small_config(1, 25, 10, 2);
  cfg.sigma_g2 = 0.0;
  gpaft::RandomStream rng(34);
  Eigen::MatrixXd X(25, 10);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i / 10, i % 10) = rng.normal();
  const auto effect = gpaft::gen_genomic_effect(X, cfg, rng);
  CHECK(effect.size() == 25);
  CHECK(effect.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("effect covariance follows the truth kernel") {
  // Diagonal truth isolates the innovation law: model 3 keeps the heavier
  // logistic tails, model 1 stays Gaussian.
  auto cfg1 = small_config(1, 2000, 10, 2);
  cfg1.sigma_g2 = 4.0;
  gpaft::TruthKernel truth;
  truth.K = 4.0 * Eigen::MatrixXd::Identity(2000, 2000);
  gpaft::RandomStream r1(35);
  const auto e1 = gpaft::gen_genomic_effect(truth, cfg1, r1);
  const Eigen::ArrayXd c1 = e1.array() - e1.mean();
  CHECK(c1.square().mean() == doctest::Approx(4.0).epsilon(0.12));
  CHECK(std::abs(excess_kurtosis(e1)) < 0.25);

  auto cfg3 = cfg1;
  cfg3.model = 3;
  gpaft::RandomStream r3(36);
  const auto e3 = gpaft::gen_genomic_effect(truth, cfg3, r3);
  const Eigen::ArrayXd c3 = e3.array() - e3.mean();
  CHECK(c3.square().mean() == doctest::Approx(4.0).epsilon(0.12));
  CHECK(excess_kurtosis(e3) > 0.5);   // logistic excess kurtosis is 1.2
}

TEST_CASE("log-scale error carries the configured variance") {
  // Intercept-only design with a zero coefficient isolates the error draw.
  auto cfg = small_config(2, 100000, 10, 2);
  cfg.beta_true = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(100000, 1);
  const Eigen::VectorXd effect = Eigen::VectorXd::Zero(100000);

  gpaft::RandomStream rng(37);
  const Eigen::VectorXd times = gpaft::gen_survival(cfg, Z, effect, rng);
  CHECK((times.array() > 0.0).all());
  const Eigen::ArrayXd lt = times.array().log();
  const Eigen::ArrayXd c = lt - lt.mean();
  CHECK(lt.mean() == doctest::Approx(0.0).epsilon(0.01));
  CHECK(c.square().mean() == doctest::Approx(cfg.noise_var).epsilon(0.02));
  // Logistic errors: positive excess kurtosis.
  Eigen::VectorXd ltv = lt.matrix();
  CHECK(excess_kurtosis(ltv) > 0.6);

  auto cfg1 = cfg;
  cfg1.model = 1;
  gpaft::RandomStream rng1(38);
  const Eigen::VectorXd t1 = gpaft::gen_survival(cfg1, Z, effect, rng1);
  const Eigen::ArrayXd l1 = t1.array().log();
  const Eigen::ArrayXd d1 = l1 - l1.mean();
  CHECK(d1.square().mean() == doctest::Approx(cfg.noise_var).epsilon(0.02));
  Eigen::VectorXd l1v = l1.matrix();
  CHECK(std::abs(excess_kurtosis(l1v)) < 0.1);
}

TEST_CASE("proportional-hazards times stay positive and seedable") {
  auto cfg = small_config(4, 5000, 10, 2);
  const Eigen::Index n = cfg.n;
  gpaft::RandomStream rga(39), rgb(39);
  const auto cov = gpaft::gen_covariates(cfg, rga);
  gpaft::RandomStream rgc(40), rgd(40);
  const Eigen::VectorXd zero_effect = Eigen::VectorXd::Zero(n);
  const auto ta = gpaft::gen_survival(cfg, cov.Z, zero_effect, rgc);
  const auto tb = gpaft::gen_survival(cfg, cov.Z, zero_effect, rgd);
  CHECK((ta.array() > 0.0).all());
  CHECK(ta == tb);
  CHECK((ta.array() < 1e7).all());   // sane magnitudes in study days
}

TEST_CASE("censoring respects min(time, draw) bookkeeping") {
  auto cfg = small_config(1, 4000, 10, 2);
  gpaft::RandomStream rng(41);
  const auto cov = gpaft::gen_covariates(cfg, rng);
  Eigen::VectorXd times(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    times[i] = std::exp(6.0 + rng.normal());
  }
  gpaft::RandomStream crng(42);
  const auto cens = gpaft::gen_censoring(times, cov.stages, cfg, crng);

  Eigen::Index events_s1 = 0, n_s1 = 0, events_s4 = 0, n_s4 = 0;
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    CHECK(cens.y[i] > 0.0);
    CHECK(cens.y[i] <= times[i]);
    if (cens.delta[static_cast<std::size_t>(i)] == 1) {
      CHECK(cens.y[i] == times[i]);
    } else {
      CHECK(cens.y[i] < times[i]);
    }
    const int s = cov.stages[static_cast<std::size_t>(i)];
    if (s == 0) {
      n_s1 += 1;
      events_s1 += cens.delta[static_cast<std::size_t>(i)];
    }
    if (s == 3) {
      n_s4 += 1;
      events_s4 += cens.delta[static_cast<std::size_t>(i)];
    }
  }
  // Stage IV draws censoring with a much smaller mean, so it loses more
  // subjects than stage I.
  const double rate_s1 =
      1.0 - static_cast<double>(events_s1) / static_cast<double>(n_s1);
  const double rate_s4 =
      1.0 - static_cast<double>(events_s4) / static_cast<double>(n_s4);
  CHECK(rate_s4 > rate_s1 + 0.1);
}

TEST_CASE("method names match the reporting labels") {
  CHECK(gpaft::method_name(gpaft::Method::gpr_k) == "GPR:K");
  CHECK(gpaft::method_name(gpaft::Method::gpr_m) == "GPR:M");
  CHECK(gpaft::method_name(gpaft::Method::gpr_i) == "GPR:I");
  CHECK(gpaft::method_name(gpaft::Method::lmm_k) == "LMM:K");
  CHECK(gpaft::method_name(gpaft::Method::lmm_m) == "LMM:M");
}

TEST_CASE("replications are deterministic and thread-count invariant") {
  auto cfg = small_config(1, 40, 30, 10);
  cfg.seed = 43;
  gpaft::McemConfig mcem;
  mcem.s1 = 20;
  mcem.s_max = 80;
  mcem.thin = 1;
  mcem.burnin = 10;
  const std::vector<gpaft::Method> methods{gpaft::Method::gpr_k,
                                           gpaft::Method::lmm_k};

  const auto serial = gpaft::run_replications(cfg, methods, mcem, 3, 1);
  const auto parallel = gpaft::run_replications(cfg, methods, mcem, 3, 3);
  REQUIRE(serial.size() == 3);
  REQUIRE(parallel.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(serial[r].rep == static_cast<int>(r));
    CHECK(serial[r].censor_rate == parallel[r].censor_rate);
    CHECK(serial[r].ipw_corr == parallel[r].ipw_corr);
    REQUIRE(serial[r].methods.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
      const auto& a = serial[r].methods[m];
      const auto& b = parallel[r].methods[m];
      CHECK(a.method == b.method);
      CHECK(a.c_index == b.c_index);
      CHECK(a.ibs == b.ibs);
      CHECK(a.iauc == b.iauc);
      CHECK((a.imputation_corr == b.imputation_corr ||
             (std::isnan(a.imputation_corr) && std::isnan(b.imputation_corr))));
    }
    CHECK(std::isfinite(serial[r].methods[0].c_index));
    CHECK(serial[r].methods[0].c_index >= 0.0);
    CHECK(serial[r].methods[0].c_index <= 1.0);
    CHECK(serial[r].censor_rate >= 0.0);
    CHECK(serial[r].censor_rate <= 1.0);
  }

  // The fixed-imputation baseline never moves t_bar, so its imputation
  // correlation equals the initializer's.
  for (const auto& rec : serial) {
    CHECK(rec.methods[1].imputation_corr ==
          doctest::Approx(rec.ipw_corr).epsilon(1e-12));
  }
}

TEST_CASE("config validation guards impossible settings") {
  auto cfg = small_config(1, 30, 10, 2);
  cfg.train_size = 10;   // no longer sums to n
  CHECK_THROWS_AS(cfg.validate(), gpaft::schema_error);

  auto cfg2 = small_config(5, 30, 10, 2);
  CHECK_THROWS_AS(cfg2.validate(), gpaft::schema_error);

  auto cfg3 = small_config(1, 30, 10, 2);
  cfg3.kernel_truth = gpaft::KernelTruth::pathway;   // needs p >= 600
  CHECK_THROWS_AS(cfg3.validate(), gpaft::schema_error);
}
