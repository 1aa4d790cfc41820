#include "gpaft/mcem.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "gpaft/errors.hpp"
#include "gpaft/metrics.hpp"

namespace gpaft {

namespace {

Eigen::VectorXd observed_log_times(const SurvivalDataset& ds,
                                   const Partition& partition) {
  Eigen::VectorXd t_o(static_cast<Eigen::Index>(partition.observed_idx.size()));
  for (size_t k = 0; k < partition.observed_idx.size(); ++k)
    t_o[static_cast<Eigen::Index>(k)] = ds.lower[partition.observed_idx[k]];
  return t_o;
}

Eigen::VectorXd clamp_into_box(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

}  // namespace

std::pair<Eigen::VectorXd, ModelParams> initialize_ipw(
    const SurvivalDataset& ds, Eigen::Index n_kernels) {
  ds.validate();
  if (n_kernels < 1) throw schema_error("need at least one kernel");
  const Eigen::Index n = ds.n();
  if (ds.Z.rows() != n) throw schema_error("Z not attached");

  std::vector<int> event_ind(static_cast<size_t>(n), 0);
  std::vector<double> event_log_times;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ds.event[static_cast<size_t>(i)] == Censoring::event) {
      event_ind[static_cast<size_t>(i)] = 1;
      event_log_times.push_back(std::log(ds.time[i]));
    }
  }
  if (event_log_times.empty())
    throw schema_error("initialization needs at least one observed event");

  const StepFunction km = kaplan_meier(ds.time, event_ind);
  const double last_event_log =
      *std::max_element(event_log_times.begin(), event_log_times.end());
  const double mean_event_log =
      std::accumulate(event_log_times.begin(), event_log_times.end(), 0.0) /
      static_cast<double>(event_log_times.size());

  Eigen::VectorXd t0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (ds.event[static_cast<size_t>(i)]) {
      case Censoring::event:
        t0[i] = ds.lower[i];
        break;
      case Censoring::right: {
        // Kaplan-Meier conditional tail mean on the time scale: the
        // restricted mass beyond y normalised by the survival at y.
        const double y = ds.time[i];
        const double s_y = km(y);
        double mass = 0.0;
        double expect = 0.0;
        double prev = 1.0;
        for (size_t k = 0; k < km.times.size(); ++k) {
          const double jump = prev - km.values[k];
          prev = km.values[k];
          if (km.times[k] > y) {
            mass += jump;
            expect += km.times[k] * jump;
          }
        }
        t0[i] = (s_y > 0.0 && mass > 0.0) ? std::log(expect / mass)
                                          : last_event_log;
        break;
      }
      case Censoring::left:
      case Censoring::interval:
        t0[i] = std::min(std::max(mean_event_log, ds.lower[i]), ds.upper[i]);
        break;
    }
  }

  ModelParams params;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ds.Z);
  if (qr.rank() < ds.Z.cols())
    throw schema_error("Z is rank deficient; drop collinear covariates");
  params.beta = qr.solve(t0);

  const Eigen::VectorXd resid = t0 - ds.Z * params.beta;
  const double var_resid =
      (resid.array() - resid.mean()).square().sum() / static_cast<double>(n);
  const double var_t =
      (t0.array() - t0.mean()).square().sum() / static_cast<double>(n);
  const double share = std::max(var_resid, 1e-8 * std::max(var_t, 1.0)) /
                       static_cast<double>(n_kernels + 1);
  params.sigma2 = Eigen::VectorXd::Constant(n_kernels, share);
  params.noise2 = share;
  return {t0, params};
}

TruncatedMvnSpec conditional_spec(const ModelParams& params,
                                  const KernelStack& stack,
                                  const SurvivalDataset& ds,
                                  const Partition& partition) {
  const Eigen::Index n_c =
      static_cast<Eigen::Index>(partition.censored_idx.size());
  const Eigen::Index n_o =
      static_cast<Eigen::Index>(partition.observed_idx.size());
  if (n_c == 0) throw schema_error("no censored subjects to impute");

  const CovarianceAssembly assembly =
      assemble_covariance(stack, params.sigma2, params.noise2);
  const Eigen::MatrixXd& K = assembly.ktilde;

  TruncatedMvnSpec spec;
  spec.lower.resize(n_c);
  spec.upper.resize(n_c);
  for (Eigen::Index k = 0; k < n_c; ++k) {
    spec.lower[k] = ds.lower[partition.censored_idx[static_cast<size_t>(k)]];
    spec.upper[k] = ds.upper[partition.censored_idx[static_cast<size_t>(k)]];
  }

  const Eigen::MatrixXd Kcc = K(partition.censored_idx, partition.censored_idx);
  Eigen::VectorXd mean_c(n_c);
  for (Eigen::Index k = 0; k < n_c; ++k)
    mean_c[k] = ds.Z.row(partition.censored_idx[static_cast<size_t>(k)])
                    .dot(params.beta);

  if (n_o == 0) {
    spec.mean = mean_c;
    spec.cov = Kcc;
    return spec;
  }

  const Eigen::MatrixXd Koo = K(partition.observed_idx, partition.observed_idx);
  const Eigen::MatrixXd Kco = K(partition.censored_idx, partition.observed_idx);
  Eigen::VectorXd resid_o(n_o);
  for (Eigen::Index k = 0; k < n_o; ++k) {
    const Eigen::Index i = partition.observed_idx[static_cast<size_t>(k)];
    resid_o[k] = ds.lower[i] - ds.Z.row(i).dot(params.beta);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(Koo);
  if (llt.info() != Eigen::Success)
    throw numeric_error("observed-block covariance is not positive definite");
  const Eigen::MatrixXd gain = llt.solve(Kco.transpose());  // Koo^-1 Kco'

  spec.mean = mean_c + gain.transpose() * resid_o;
  Eigen::MatrixXd cov = Kcc - Kco * gain;
  spec.cov = 0.5 * (cov + cov.transpose());
  return spec;
}

SampleBatch estep_sample(const ModelParams& params, const KernelStack& stack,
                         const SurvivalDataset& ds, const Partition& partition,
                         Eigen::Index s_r, RandomStream& rng,
                         const Eigen::VectorXd& warm_start, int thin,
                         int burnin) {
  const TruncatedMvnSpec spec = conditional_spec(params, stack, ds, partition);
  const Eigen::VectorXd init =
      warm_start.size() == spec.mean.size()
          ? clamp_into_box(warm_start, spec.lower, spec.upper)
          : clamp_into_box(spec.mean, spec.lower, spec.upper);
  GibbsSampler sampler(spec, init, thin);
  SampleBatch batch;
  sampler.run(s_r, burnin, rng, batch);
  batch.burnin = burnin;
  batch.seed = rng.seed();
  return batch;
}

AscentResult ascent_test(const ModelParams& incumbent,
                         const ModelParams& candidate,
                         const McSamples& samples, const KernelStack& stack,
                         const Eigen::MatrixXd& Z, double z_crit) {
  const Eigen::VectorXd l_new = per_sample_loglik(candidate, stack, Z, samples);
  const Eigen::VectorXd l_old = per_sample_loglik(incumbent, stack, Z, samples);
  const Eigen::VectorXd diff = l_new - l_old;
  AscentResult result;
  result.delta = diff.mean();
  const Eigen::Index m = diff.size();
  if (m >= 20) {
    result.ase = mcse_spectral(
        std::span<const double>(diff.data(), static_cast<size_t>(m)));
  } else if (m >= 2) {
    const double ss = (diff.array() - result.delta).square().sum();
    result.ase = std::sqrt(ss / static_cast<double>(m - 1) /
                           static_cast<double>(m));
  } else {
    result.ase = 0.0;
  }
  result.accepted = result.delta > z_crit * result.ase;
  return result;
}

FitResult fit(const SurvivalDataset& ds, const KernelStack& stack,
              const McemConfig& config) {
  ds.validate();
  if (stack.size() < 1) throw schema_error("kernel stack is empty");
  if (stack.n != ds.n())
    throw schema_error("kernel stack built for a different cohort size");
  if (config.s1 < 1 || config.s_max < config.s1)
    throw schema_error("need 1 <= s1 <= s_max");
  if (config.thin < 1 || config.burnin < 0 || config.max_outer < 1)
    throw schema_error("invalid sampler settings");

  const Partition partition = partition_by_censoring(ds);
  const Eigen::Index n = ds.n();
  const Eigen::Index n_c =
      static_cast<Eigen::Index>(partition.censored_idx.size());
  const Eigen::Index n_o = n - n_c;
  if (n_o < ds.Z.cols() + 1)
    throw schema_error(
        "too few uncensored subjects to anchor the regression; need at least "
        "q + 2 events");

  const Eigen::VectorXd t_o = observed_log_times(ds, partition);
  ModelParams incumbent = initialize_ipw(ds, stack.size()).second;

  FitResult result;
  result.seed = config.seed;

  const bool fast = stack.size() == 1 && config.m1_fastpath;
  const auto run_mstep = [&](const ModelParams& init, const McSamples& s) {
    return fast ? single_kernel_maximize(init, stack.kernels[0], ds.Z, s,
                                         config.mstep_tol,
                                         config.mstep_max_inner)
                : maximize(init, stack, ds.Z, s, config.mstep_tol,
                           config.mstep_max_inner);
  };

  if (n_c == 0) {
    // Fully observed: one M-step maximizes the exact likelihood directly.
    SampleBatch batch;
    batch.draws.resize(1, 0);
    const McSamples samples(batch, t_o, partition, n);
    const MStepState state = run_mstep(incumbent, samples);
    result.params = state.params;
    result.t_bar = samples.mean();
    result.loglik_trace.push_back(state.loglik);
    result.param_trace.push_back(state.params);
    return result;
  }

  RandomStream rng(config.seed, 0);
  Eigen::Index s_r = config.s1;
  Eigen::VectorXd chain_state;   // carried across outer iterations

  for (int outer = 1; outer <= config.max_outer; ++outer) {
    const TruncatedMvnSpec spec =
        conditional_spec(incumbent, stack, ds, partition);
    const Eigen::VectorXd init =
        chain_state.size() == spec.mean.size()
            ? clamp_into_box(chain_state, spec.lower, spec.upper)
            : clamp_into_box(spec.mean, spec.lower, spec.upper);
    GibbsSampler sampler(spec, init, config.thin);
    SampleBatch batch;
    sampler.run(s_r, config.burnin, rng, batch);
    batch.burnin = config.burnin;
    batch.seed = config.seed;

    ModelParams mstep_init = incumbent;
    bool advanced = false;
    while (true) {
      const McSamples samples(batch, t_o, partition, n);
      const MStepState state = run_mstep(mstep_init, samples);
      const AscentResult test =
          ascent_test(incumbent, state.params, samples, stack, ds.Z,
                      config.z_crit);

      result.diagnostics.push_back({outer, batch.count(), test.delta, test.ase,
                                    test.accepted});
      result.sr_history.push_back(batch.count());
      result.loglik_trace.push_back(state.loglik);
      result.param_trace.push_back(state.params);
      result.t_bar = samples.mean();

      if (test.accepted) {
        incumbent = state.params;
        s_r = batch.count();
        chain_state = sampler.state();
        advanced = true;
        break;
      }
      if (batch.count() >= config.s_max) {
        // The stopping rule: a rejection the cap cannot fix ends the fit at
        // the last maximizer.
        incumbent = state.params;
        result.reached_cap = true;
        break;
      }
      // Double the draw set by continuing the same chain; the maximizer just
      // found seeds the next M-step.
      sampler.run(batch.count(), 0, rng, batch);
      mstep_init = state.params;
    }
    if (result.reached_cap) break;
    if (!advanced) break;  // unreachable; kept for clarity
    if (outer == config.max_outer) result.reached_max_outer = true;
  }

  result.params = incumbent;
  return result;
}

}  // namespace gpaft
