#include "gpaft/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "gpaft/errors.hpp"
#include "gpaft/metrics.hpp"
#include "gpaft/mstep.hpp"
#include "gpaft/predict.hpp"

namespace gpaft {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Hyndman-Fan type 7 (the linear-interpolation default).
double quantile_type7(const Eigen::VectorXd& x, double prob) {
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - std::floor(h)) * (sorted[lo + 1] - sorted[lo]);
}

double standardized_logistic(RandomStream& rng) {
  const double u = rng.uniform_open();
  return std::numbers::sqrt3 / std::numbers::pi * std::log(u / (1.0 - u));
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  if (a.size() < 2) return kNaN;
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  return denom > 0.0 ? (da * db).sum() / denom : kNaN;
}

}  // namespace

void SimConfig::validate() const {
  if (model < 1 || model > 4) throw schema_error("model must be 1..4");
  if (n < 2 || p < 1) throw schema_error("need n >= 2 and p >= 1");
  if (train_size < 1 || test_size < 0 || train_size + test_size != n)
    throw schema_error("train_size + test_size must equal n");
  if (!(std::abs(stage_probs.sum() - 1.0) < 1e-12) ||
      (stage_probs.array() < 0.0).any())
    throw schema_error("stage probabilities must be nonnegative and sum to 1");
  if ((censor_quantiles.array() <= 0.0).any() ||
      (censor_quantiles.array() >= 1.0).any())
    throw schema_error("censoring quantiles must lie strictly in (0, 1)");
  if (sigma_g2 < 0.0 || noise_var < 0.0)
    throw schema_error("variances must be nonnegative");
  if (beta_true.size() < 1) throw schema_error("beta_true is empty");
  if (kernel_truth == KernelTruth::pathway && p < 600)
    throw schema_error("pathway truth needs p >= 600");
  if (gompertz.alpha <= 0.0 || gompertz.lambda <= 0.0)
    throw schema_error("Gompertz parameters must be positive");
}

SimConfig SimConfig::defaults(int model) {
  SimConfig cfg;
  cfg.model = model;
  if (model == 4) {
    cfg.beta_true = (Eigen::VectorXd(4) << 0.1, 0.3, 0.9, 9e-5).finished();
    cfg.sigma_g2 = 4.0;
  } else {
    cfg.beta_true =
        (Eigen::VectorXd(5) << 6.1, -0.5, -1.2, -2.0, -1e-5).finished();
    cfg.sigma_g2 = 3.0;
  }
  return cfg;
}

Covariates gen_covariates(const SimConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const Eigen::Index n = cfg.n;
  Covariates cov;
  cov.stages.resize(static_cast<size_t>(n));
  cov.Z.setZero(n, 5);
  cov.Z.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int stage = 3;
    for (int s = 0; s < 4; ++s) {
      acc += cfg.stage_probs[s];
      if (u < acc) {
        stage = s;
        break;
      }
    }
    cov.stages[static_cast<size_t>(i)] = stage;
    if (stage > 0) cov.Z(i, stage) = 1.0;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    cov.Z(i, 4) = (35.0 + 50.0 * rng.uniform()) * 365.25;

  // Shared factor per block of 50 genes, equal split of variance, so the
  // within-block correlation is 0.5 and blocks are independent.
  cov.X.resize(n, cfg.p);
  const double w = std::numbers::sqrt2 / 2.0;  // sqrt(0.5)
  for (Eigen::Index start = 0; start < cfg.p; start += 50) {
    const Eigen::Index width = std::min<Eigen::Index>(50, cfg.p - start);
    Eigen::VectorXd factor(n);
    for (Eigen::Index i = 0; i < n; ++i) factor[i] = rng.normal();
    for (Eigen::Index j = 0; j < width; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        cov.X(i, start + j) = w * factor[i] + w * rng.normal();
  }
  return cov;
}

std::vector<PathwayMask> truth_pathways() {
  static const Eigen::Index sizes[6] = {150, 150, 100, 100, 50, 50};
  std::vector<PathwayMask> masks(6);
  Eigen::Index offset = 0;
  for (int s = 0; s < 6; ++s) {
    masks[static_cast<size_t>(s)].name = "pw" + std::to_string(s + 1);
    for (Eigen::Index j = 0; j < sizes[s]; ++j)
      masks[static_cast<size_t>(s)].columns.push_back(offset + j);
    offset += sizes[s];
  }
  return masks;
}

TruthKernel truth_covariance(const Eigen::MatrixXd& X, const SimConfig& cfg,
                             RandomStream& rng) {
  cfg.validate();
  TruthKernel truth;
  if (cfg.kernel_truth == KernelTruth::genome) {
    truth.K = cfg.sigma_g2 * normalized_rbf(X).values;
    return truth;
  }
  const std::vector<PathwayMask> masks = truth_pathways();
  std::vector<int> order = {0, 1, 2, 3, 4, 5};
  for (int k = 0; k < 4; ++k) {
    const int j =
        std::min(5, k + static_cast<int>(rng.uniform() * (6.0 - k)));
    std::swap(order[static_cast<size_t>(k)], order[static_cast<size_t>(j)]);
  }
  truth.weights.setZero(6);
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double w = rng.uniform_open();
    truth.weights[order[static_cast<size_t>(k)]] = w;
    total += w;
  }
  if (cfg.sigma_g2 > 0.0) truth.weights *= cfg.sigma_g2 / total;
  else truth.weights.setZero();

  truth.K = Eigen::MatrixXd::Zero(X.rows(), X.rows());
  for (int s = 0; s < 6; ++s) {
    if (truth.weights[s] == 0.0) continue;
    const GramMatrix gram =
        normalized_rbf(X, masks[static_cast<size_t>(s)].columns,
                       masks[static_cast<size_t>(s)].name);
    truth.K += truth.weights[s] * gram.values;
  }
  return truth;
}

Eigen::VectorXd gen_genomic_effect(const TruthKernel& truth,
                                   const SimConfig& cfg, RandomStream& rng) {
  const Eigen::Index n = truth.K.rows();
  if (cfg.sigma_g2 == 0.0) return Eigen::VectorXd::Zero(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(truth.K);
  if (es.info() != Eigen::Success)
    throw numeric_error("truth covariance eigendecomposition failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sqrt_k =
      es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();

  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = cfg.model == 3 ? standardized_logistic(rng) : rng.normal();
  return sqrt_k * v;
}

Eigen::VectorXd gen_genomic_effect(const Eigen::MatrixXd& X,
                                   const SimConfig& cfg, RandomStream& rng) {
  return gen_genomic_effect(truth_covariance(X, cfg, rng), cfg, rng);
}

Eigen::VectorXd gen_survival(const SimConfig& cfg, const Eigen::MatrixXd& Z,
                             const Eigen::VectorXd& effect, RandomStream& rng) {
  if (Z.rows() != effect.size())
    throw schema_error("Z rows != effect length");
  const Eigen::Index n = Z.rows();

  if (cfg.model == 4) {
    if (Z.cols() - 1 != cfg.beta_true.size())
      throw schema_error("model 4 beta_true must match Z without intercept");
    const Eigen::VectorXd w =
        Z.rightCols(Z.cols() - 1) * cfg.beta_true + effect;
    Eigen::VectorXd times(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = rng.uniform_open();
      const double arg =
          1.0 - cfg.gompertz.alpha * std::log(u) /
                    (cfg.gompertz.lambda * std::exp(w[i]));
      times[i] = std::log(arg) / cfg.gompertz.alpha;
    }
    return times;
  }

  if (Z.cols() != cfg.beta_true.size())
    throw schema_error("beta_true length != Z columns");
  Eigen::VectorXd log_t = Z * cfg.beta_true + effect;
  if (cfg.model == 1) {
    const double sd = std::sqrt(cfg.noise_var);
    for (Eigen::Index i = 0; i < n; ++i) log_t[i] += sd * rng.normal();
  } else {
    const double scale =
        std::sqrt(3.0 * cfg.noise_var) / std::numbers::pi;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = rng.uniform_open();
      log_t[i] += scale * std::log(u / (1.0 - u));
    }
  }
  return log_t.array().exp();
}

CensoredTimes gen_censoring(const Eigen::VectorXd& times,
                            const std::vector<int>& stages,
                            const SimConfig& cfg, RandomStream& rng) {
  if (static_cast<Eigen::Index>(stages.size()) != times.size())
    throw schema_error("stage vector length != times length");
  if ((times.array() <= 0.0).any())
    throw schema_error("times must be positive");

  double stage_mean[4];
  for (int s = 0; s < 4; ++s)
    stage_mean[s] = quantile_type7(times, 1.0 - cfg.censor_quantiles[s]);

  CensoredTimes out;
  out.y.resize(times.size());
  out.delta.resize(stages.size());
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const int s = stages[static_cast<size_t>(i)];
    if (s < 0 || s > 3) throw schema_error("stage codes must be 0..3");
    const double c = rng.exponential(stage_mean[s]);
    out.y[i] = std::min(times[i], c);
    out.delta[static_cast<size_t>(i)] = times[i] <= c ? 1 : 0;
  }
  return out;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::gpr_k: return "GPR:K";
    case Method::gpr_m: return "GPR:M";
    case Method::gpr_i: return "GPR:I";
    case Method::lmm_k: return "LMM:K";
    case Method::lmm_m: return "LMM:M";
  }
  return "?";
}

namespace {

SurvivalDataset make_dataset(const Eigen::VectorXd& y,
                             const std::vector<int>& delta,
                             const Eigen::MatrixXd& Z,
                             const Eigen::MatrixXd& X, int rep) {
  SurvivalDataset ds;
  const Eigen::Index n = y.size();
  ds.time = y;
  ds.time2 = Eigen::VectorXd::Constant(n, kNaN);
  ds.lower.resize(n);
  ds.upper.resize(n);
  ds.event.resize(static_cast<size_t>(n));
  ds.ids.resize(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.ids[static_cast<size_t>(i)] =
        "r" + std::to_string(rep) + "-s" + std::to_string(i);
    ds.lower[i] = std::log(y[i]);
    if (delta[static_cast<size_t>(i)] == 1) {
      ds.event[static_cast<size_t>(i)] = Censoring::event;
      ds.upper[i] = ds.lower[i];
    } else {
      ds.event[static_cast<size_t>(i)] = Censoring::right;
      ds.upper[i] = kInf;
    }
  }
  ds.Z = Z;
  ds.X = X;
  ds.covariate_names = {"stage_ii", "stage_iii", "stage_iv", "age_days"};
  ds.gene_names.resize(static_cast<size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    ds.gene_names[static_cast<size_t>(j)] = "g" + std::to_string(j + 1);
  ds.validate();
  return ds;
}

KernelStack method_stack(Method method, const Eigen::MatrixXd& X_train) {
  switch (method) {
    case Method::gpr_k:
    case Method::lmm_k: {
      KernelStack stack;
      stack.kernels.push_back(normalized_rbf(X_train));
      stack.n = X_train.rows();
      return stack;
    }
    case Method::gpr_i: {
      KernelStack stack;
      stack.kernels.push_back(identity_gram(X_train.rows()));
      stack.n = X_train.rows();
      return stack;
    }
    case Method::gpr_m:
    case Method::lmm_m:
      if (X_train.cols() < 600)
        throw schema_error("pathway methods need p >= 600");
      return pathway_stack(X_train, truth_pathways(), true);
  }
  throw schema_error("unknown method");
}

// Variance components on the fixed Kaplan-Meier imputation: one M-step, no
// resampling. The linear-mixed-model comparator.
FitResult fixed_imputation_fit(const SurvivalDataset& ds,
                               const KernelStack& stack,
                               const Eigen::VectorXd& t0,
                               const ModelParams& init,
                               const McemConfig& mcem) {
  const Partition partition = partition_by_censoring(ds);
  const Eigen::Index n_c =
      static_cast<Eigen::Index>(partition.censored_idx.size());
  Eigen::VectorXd t_o(
      static_cast<Eigen::Index>(partition.observed_idx.size()));
  for (size_t k = 0; k < partition.observed_idx.size(); ++k)
    t_o[static_cast<Eigen::Index>(k)] = ds.lower[partition.observed_idx[k]];

  SampleBatch batch;
  batch.draws.resize(1, n_c);
  for (Eigen::Index k = 0; k < n_c; ++k)
    batch.draws(0, k) = t0[partition.censored_idx[static_cast<size_t>(k)]];
  const McSamples samples(batch, t_o, partition, ds.n());

  const MStepState state =
      stack.size() == 1 && mcem.m1_fastpath
          ? single_kernel_maximize(init, stack.kernels[0], ds.Z, samples,
                                   mcem.mstep_tol, mcem.mstep_max_inner)
          : maximize(init, stack, ds.Z, samples, mcem.mstep_tol,
                     mcem.mstep_max_inner);

  FitResult out;
  out.params = state.params;
  out.t_bar = samples.mean();
  out.loglik_trace.push_back(state.loglik);
  return out;
}

}  // namespace

ReplicationRecord run_replication(const SimConfig& cfg,
                                  const std::vector<Method>& methods,
                                  const McemConfig& mcem, int rep) {
  cfg.validate();
  if (cfg.test_size < 2)
    throw schema_error("need at least two test subjects to score");
  RandomStream rng(cfg.seed, static_cast<std::uint64_t>(rep));

  const Covariates cov = gen_covariates(cfg, rng);
  const TruthKernel truth = truth_covariance(cov.X, cfg, rng);
  const Eigen::VectorXd effect = gen_genomic_effect(truth, cfg, rng);
  const Eigen::VectorXd times = gen_survival(cfg, cov.Z, effect, rng);
  const CensoredTimes cens = gen_censoring(times, cov.stages, cfg, rng);

  const Eigen::Index n_tr = cfg.train_size;
  const Eigen::Index n_te = cfg.test_size;
  const std::vector<int> delta_tr(cens.delta.begin(),
                                  cens.delta.begin() + n_tr);
  const SurvivalDataset train =
      make_dataset(cens.y.head(n_tr), delta_tr, cov.Z.topRows(n_tr),
                   cov.X.topRows(n_tr), rep);
  const Partition partition = partition_by_censoring(train);
  const Eigen::Index n_c =
      static_cast<Eigen::Index>(partition.censored_idx.size());

  Eigen::VectorXd true_censored_log(n_c);
  for (Eigen::Index k = 0; k < n_c; ++k)
    true_censored_log[k] =
        std::log(times[partition.censored_idx[static_cast<size_t>(k)]]);

  ReplicationRecord record;
  record.rep = rep;
  record.censor_rate =
      n_tr > 0 ? static_cast<double>(n_c) / static_cast<double>(n_tr) : 0.0;

  const auto [t0, init_params] = initialize_ipw(train, 1);
  Eigen::VectorXd t0_censored(n_c);
  for (Eigen::Index k = 0; k < n_c; ++k)
    t0_censored[k] = t0[partition.censored_idx[static_cast<size_t>(k)]];
  record.ipw_corr = pearson(t0_censored, true_censored_log);

  // Oracle evaluation: the test set is scored on its true failure times.
  const Eigen::VectorXd times_te = times.tail(n_te);
  EvalConfig ec;
  ec.oracle_censoring = true;
  const EvalPlan plan =
      make_eval_plan(times_te, std::vector<int>(static_cast<size_t>(n_te), 1),
                     ec);

  for (size_t midx = 0; midx < methods.size(); ++midx) {
    const Method method = methods[midx];
    const KernelStack stack = method_stack(method, train.X);

    FitResult fr;
    if (method == Method::lmm_k || method == Method::lmm_m) {
      auto [t0_m, init_m] = initialize_ipw(train, stack.size());
      fr = fixed_imputation_fit(train, stack, t0_m, init_m, mcem);
    } else {
      McemConfig local = mcem;
      local.seed = mcem.seed + 1000003ULL * static_cast<std::uint64_t>(rep) +
                   static_cast<std::uint64_t>(midx);
      fr = fit(train, stack, local);
    }

    Eigen::VectorXd imputed(n_c);
    for (Eigen::Index k = 0; k < n_c; ++k)
      imputed[k] = fr.t_bar[partition.censored_idx[static_cast<size_t>(k)]];

    const Predictor predictor(fr, stack, train.Z, train.X);
    Eigen::VectorXd risk(n_te);
    Eigen::MatrixXd surv(n_te, plan.grid.size());
    for (Eigen::Index j = 0; j < n_te; ++j) {
      const Prediction pred = predictor.predict_log_time(
          cov.Z.row(n_tr + j).transpose(), cov.X.row(n_tr + j).transpose());
      risk[j] = pred.risk_score;
      for (Eigen::Index k = 0; k < plan.grid.size(); ++k)
        surv(j, k) = survival_probability(pred, plan.grid[k]);
    }
    const EvaluationReport report =
        evaluate_predictions(risk, surv, times_te, plan);

    MethodMetrics mm;
    mm.method = method_name(method);
    mm.c_index = report.c_index;
    mm.ibs = report.ibs;
    mm.iauc = report.iauc;
    mm.imputation_corr = pearson(imputed, true_censored_log);
    record.methods.push_back(std::move(mm));
  }
  return record;
}

std::vector<ReplicationRecord> run_replications(
    const SimConfig& cfg, const std::vector<Method>& methods,
    const McemConfig& mcem, int reps, int jobs) {
  if (reps < 1) throw schema_error("need at least one replication");
  const int workers = std::max(1, std::min(jobs, reps));
  std::vector<ReplicationRecord> records(static_cast<size_t>(reps));
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  const auto work = [&]() {
    while (true) {
      const int rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        records[static_cast<size_t>(rep)] =
            run_replication(cfg, methods, mcem, rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

}  // namespace gpaft
