// gpaft: censored survival-time regression with Gaussian process kernels.
//
// Subcommands: fit (MC-EM estimation), predict (kriging for new subjects),
// evaluate (censoring-weighted survival metrics), simulate (replication
// study harness). Exit codes: 0 ok, 1 numerical failure, 2 malformed input.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "gpaft/csv.hpp"
#include "gpaft/data_model.hpp"
#include "gpaft/errors.hpp"
#include "gpaft/kernels.hpp"
#include "gpaft/mcem.hpp"
#include "gpaft/metrics.hpp"
#include "gpaft/predict.hpp"
#include "gpaft/simulate.hpp"

namespace {

using nlohmann::json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void require_readable(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in.good())
    throw gpaft::schema_error("cannot read " + what + " file: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good())
    throw gpaft::schema_error("cannot open output file: " + path);
  out << text;
  if (!out.good()) throw gpaft::schema_error("write failed: " + path);
}

json read_json_file(const std::string& path, const std::string& what) {
  require_readable(path, what);
  std::ifstream in(path);
  try {
    json parsed;
    in >> parsed;
    return parsed;
  } catch (const json::exception& e) {
    throw gpaft::schema_error(what + " file is not valid JSON: " + path +
                              ": " + e.what());
  }
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw gpaft::schema_error("not a number in list: '" + item + "'");
    }
  }
  return out;
}

double quantile_sorted(std::vector<double> x, double prob) {
  std::sort(x.begin(), x.end());
  const double h = prob * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

struct DataArgs {
  std::string survival;
  std::string covariates;
  std::string expression;
  std::string pathways;
  std::string kernel = "genome";
  std::string genes_as = "cols";
};

gpaft::GeneOrientation orientation_of(const std::string& genes_as) {
  if (genes_as == "rows") return gpaft::GeneOrientation::genes_as_rows;
  if (genes_as == "cols") return gpaft::GeneOrientation::genes_as_cols;
  throw gpaft::schema_error("--genes-as must be rows or cols");
}

gpaft::SurvivalDataset load_dataset(const DataArgs& args) {
  require_readable(args.survival, "survival");
  require_readable(args.covariates, "covariate");
  require_readable(args.expression, "expression");
  gpaft::SurvivalDataset ds = gpaft::load_survival_table(args.survival);
  gpaft::attach_covariates(ds, args.covariates);
  gpaft::attach_expression(ds, args.expression, orientation_of(args.genes_as));
  ds.validate();
  return ds;
}

gpaft::KernelStack build_stack(const gpaft::SurvivalDataset& ds,
                               const DataArgs& args) {
  gpaft::KernelStack stack;
  if (args.kernel == "genome") {
    stack.kernels.push_back(gpaft::normalized_rbf(ds.X));
    stack.n = ds.n();
    return stack;
  }
  if (args.kernel == "identity") {
    stack.kernels.push_back(gpaft::identity_gram(ds.n()));
    stack.n = ds.n();
    return stack;
  }
  if (args.kernel == "pathway") {
    if (args.pathways.empty())
      throw gpaft::schema_error("--kernel pathway needs --pathways <json>");
    require_readable(args.pathways, "pathway");
    const auto masks = gpaft::load_pathway_masks(args.pathways, ds.gene_names);
    return gpaft::pathway_stack(ds.X, masks, true);
  }
  throw gpaft::schema_error("unknown kernel '" + args.kernel +
                            "' (genome | pathway | identity)");
}

json config_echo(const DataArgs& data, const gpaft::McemConfig& mcem) {
  json cfg;
  cfg["survival"] = data.survival;
  cfg["covariates"] = data.covariates;
  cfg["expression"] = data.expression;
  cfg["pathways"] = data.pathways.empty() ? json() : json(data.pathways);
  cfg["kernel"] = data.kernel;
  cfg["genes_as"] = data.genes_as;
  cfg["s1"] = mcem.s1;
  cfg["s_max"] = mcem.s_max;
  cfg["thin"] = mcem.thin;
  cfg["burnin"] = mcem.burnin;
  cfg["m1_fastpath"] = mcem.m1_fastpath;
  cfg["seed"] = mcem.seed;
  return cfg;
}

// Fills unset flags from a JSON config file; flags win over the file.
void apply_config_file(const CLI::App& cmd, const std::string& path,
                       DataArgs& data, gpaft::McemConfig& mcem) {
  if (path.empty()) return;
  const json cfg = read_json_file(path, "config");
  const auto unset = [&](const char* flag) { return cmd.count(flag) == 0; };
  const auto get_str = [&](const char* key, std::string& target,
                           const char* flag) {
    if (cfg.contains(key) && !cfg[key].is_null() && unset(flag))
      target = cfg[key].get<std::string>();
  };
  try {
    get_str("survival", data.survival, "--survival");
    get_str("covariates", data.covariates, "--covariates");
    get_str("expression", data.expression, "--expression");
    get_str("pathways", data.pathways, "--pathways");
    get_str("kernel", data.kernel, "--kernel");
    get_str("genes_as", data.genes_as, "--genes-as");
    if (cfg.contains("s1") && unset("--s1"))
      mcem.s1 = cfg["s1"].get<Eigen::Index>();
    if (cfg.contains("s_max") && unset("--s-max"))
      mcem.s_max = cfg["s_max"].get<Eigen::Index>();
    if (cfg.contains("thin") && unset("--thin"))
      mcem.thin = cfg["thin"].get<int>();
    if (cfg.contains("burnin") && unset("--burnin"))
      mcem.burnin = cfg["burnin"].get<int>();
    if (cfg.contains("seed") && unset("--seed"))
      mcem.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("m1_fastpath") && unset("--m1-fastpath") &&
        unset("--no-m1-fastpath"))
      mcem.m1_fastpath = cfg["m1_fastpath"].get<bool>();
  } catch (const json::exception& e) {
    throw gpaft::schema_error(std::string("config file field has the wrong "
                                          "type: ") +
                              e.what());
  }
}

int cmd_fit(const CLI::App& cmd, DataArgs data, gpaft::McemConfig mcem,
            const std::string& config_path, const std::string& out_path) {
  apply_config_file(cmd, config_path, data, mcem);
  const gpaft::SurvivalDataset ds = load_dataset(data);
  const gpaft::KernelStack stack = build_stack(ds, data);
  const json cfg = config_echo(data, mcem);
  std::cerr << "config: " << cfg.dump() << "\n";

  const gpaft::FitResult fr = gpaft::fit(ds, stack, mcem);

  json model;
  model["beta"]["names"] = json::array();
  model["beta"]["names"].push_back("intercept");
  for (const auto& name : ds.covariate_names)
    model["beta"]["names"].push_back(name);
  model["beta"]["values"] = to_json(fr.params.beta);
  model["kernels"] = json::array();
  for (const auto& k : stack.kernels) model["kernels"].push_back(k.name);
  model["sigma2"] = to_json(fr.params.sigma2);
  model["noise2"] = fr.params.noise2;
  model["t_bar"] = to_json(fr.t_bar);

  // Relative variance-component magnitudes, the fit's headline summary.
  const double total = fr.params.sigma2.sum() + fr.params.noise2;
  json shares;
  for (Eigen::Index s = 0; s < stack.size(); ++s)
    shares[stack.kernels[static_cast<std::size_t>(s)].name] =
        total > 0.0 ? fr.params.sigma2[s] / total : 0.0;
  shares["noise"] = total > 0.0 ? fr.params.noise2 / total : 0.0;
  model["variance_shares"] = shares;

  json diag;
  diag["loglik_trace"] = fr.loglik_trace;
  diag["sr_history"] = fr.sr_history;
  diag["reached_cap"] = fr.reached_cap;
  diag["reached_max_outer"] = fr.reached_max_outer;
  json steps = json::array();
  for (const auto& r : fr.diagnostics) {
    json row;
    row["outer"] = r.outer;
    row["s_r"] = r.s_r;
    row["delta"] = r.delta;
    row["ase"] = r.ase;
    row["accepted"] = r.accepted;
    steps.push_back(row);
  }
  diag["ascent_tests"] = steps;

  json train;
  train["survival"] = data.survival;
  train["covariates"] = data.covariates;
  train["expression"] = data.expression;
  train["pathways"] = data.pathways.empty() ? json() : json(data.pathways);
  train["genes_as"] = data.genes_as;
  train["kernel"] = data.kernel;
  train["n"] = ds.n();
  train["p"] = ds.p();

  json out;
  out["model"] = model;
  out["fit"] = diag;
  out["train"] = train;
  out["config"] = cfg;
  write_text(out_path, out.dump(2) + "\n");

  std::cout << "fit: n=" << ds.n() << " p=" << ds.p()
            << " kernels=" << stack.size() << "\n";
  std::cout << "variance shares:";
  for (Eigen::Index s = 0; s < stack.size(); ++s) {
    const auto& name = stack.kernels[static_cast<std::size_t>(s)].name;
    std::cout << ' ' << name << '=' << fmt17(shares[name].get<double>());
  }
  std::cout << " noise=" << fmt17(shares["noise"].get<double>()) << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const DataArgs& new_data,
                const std::string& times_text, const std::string& out_path) {
  const json model_json = read_json_file(model_path, "model");
  if (!model_json.contains("train") || !model_json.contains("model"))
    throw gpaft::schema_error("model file lacks train/model records");

  // Rebuild the training-time state the kriging equations need.
  DataArgs train_args;
  try {
    const json& train = model_json.at("train");
    train_args.survival = train.at("survival").get<std::string>();
    train_args.covariates = train.at("covariates").get<std::string>();
    train_args.expression = train.at("expression").get<std::string>();
    if (!train.at("pathways").is_null())
      train_args.pathways = train.at("pathways").get<std::string>();
    train_args.kernel = train.at("kernel").get<std::string>();
    train_args.genes_as = train.at("genes_as").get<std::string>();
  } catch (const json::exception& e) {
    throw gpaft::schema_error(std::string("model training record broken: ") +
                              e.what());
  }
  const gpaft::SurvivalDataset ds = load_dataset(train_args);
  const gpaft::KernelStack stack = build_stack(ds, train_args);

  gpaft::FitResult fr;
  try {
    const json& model = model_json.at("model");
    const auto beta = model.at("beta").at("values").get<std::vector<double>>();
    const auto sigma2 = model.at("sigma2").get<std::vector<double>>();
    const auto t_bar = model.at("t_bar").get<std::vector<double>>();
    fr.params.beta = Eigen::Map<const Eigen::VectorXd>(
        beta.data(), static_cast<Eigen::Index>(beta.size()));
    fr.params.sigma2 = Eigen::Map<const Eigen::VectorXd>(
        sigma2.data(), static_cast<Eigen::Index>(sigma2.size()));
    fr.params.noise2 = model.at("noise2").get<double>();
    fr.t_bar = Eigen::Map<const Eigen::VectorXd>(
        t_bar.data(), static_cast<Eigen::Index>(t_bar.size()));
  } catch (const json::exception& e) {
    throw gpaft::schema_error(std::string("model record broken: ") + e.what());
  }

  require_readable(new_data.covariates, "covariate");
  require_readable(new_data.expression, "expression");
  const gpaft::PredictionInputs inputs = gpaft::load_prediction_inputs(
      new_data.covariates, new_data.expression,
      orientation_of(new_data.genes_as.empty() ? train_args.genes_as
                                               : new_data.genes_as));
  if (inputs.Z.cols() != fr.params.beta.size())
    throw gpaft::schema_error(
        "prediction covariates do not match the fitted coefficient count");
  if (inputs.gene_names != ds.gene_names)
    throw gpaft::schema_error(
        "prediction expression columns must match the training gene panel "
        "in order");

  // Default horizon grid: training-time quantiles.
  std::vector<double> grid;
  if (!times_text.empty()) {
    grid = parse_double_list(times_text);
    for (double t : grid)
      if (!(t > 0.0))
        throw gpaft::schema_error("horizon times must be positive");
  } else {
    const std::vector<double> probs = {0.1, 0.25, 0.5, 0.75, 0.9};
    std::vector<double> y(ds.time.data(), ds.time.data() + ds.n());
    for (double prob : probs) grid.push_back(quantile_sorted(y, prob));
  }

  const gpaft::Predictor predictor(fr, stack, ds.Z, ds.X);
  std::ostringstream csv;
  csv << "id,mean_log_time,sd_log_time,risk_score";
  for (double t : grid) csv << ",s@" << fmt17(t);
  csv << "\n";
  for (Eigen::Index i = 0; i < inputs.Z.rows(); ++i) {
    const gpaft::Prediction pred = predictor.predict_log_time(
        inputs.Z.row(i).transpose(), inputs.X.row(i).transpose());
    csv << inputs.ids[static_cast<std::size_t>(i)] << ','
        << fmt17(pred.mean_log_time) << ','
        << fmt17(std::sqrt(std::max(0.0, pred.var_log_time))) << ','
        << fmt17(pred.risk_score);
    for (double t : grid) csv << ',' << fmt17(gpaft::survival_probability(pred, t));
    csv << "\n";
  }
  write_text(out_path, csv.str());
  std::cout << "predicted " << inputs.Z.rows() << " subjects -> " << out_path
            << "\n";
  return 0;
}

int cmd_evaluate(const std::string& predictions_path,
                 const std::string& survival_path, double tau, bool oracle,
                 const std::string& out_path) {
  require_readable(predictions_path, "prediction");
  require_readable(survival_path, "survival");
  const gpaft::detail::CsvTable preds = gpaft::detail::read_csv(predictions_path);
  const long id_col = preds.column("id");
  const long risk_col = preds.column("risk_score");
  if (id_col < 0 || risk_col < 0)
    throw gpaft::schema_error(
        "prediction file needs 'id' and 'risk_score' columns");

  std::vector<long> surv_cols;
  std::vector<double> grid_times;
  for (std::size_t c = 0; c < preds.header.size(); ++c) {
    const std::string& name = preds.header[c];
    if (name.rfind("s@", 0) != 0) continue;
    try {
      grid_times.push_back(std::stod(name.substr(2)));
    } catch (const std::exception&) {
      throw gpaft::schema_error("unparsable horizon column '" + name + "'");
    }
    surv_cols.push_back(static_cast<long>(c));
  }
  if (surv_cols.empty())
    throw gpaft::schema_error("prediction file has no s@<time> columns");
  for (std::size_t k = 1; k < grid_times.size(); ++k)
    if (!(grid_times[k] > grid_times[k - 1]))
      throw gpaft::schema_error("s@ columns must be strictly increasing in t");

  const gpaft::SurvivalDataset ds = gpaft::load_survival_table(survival_path);
  std::unordered_map<std::string, Eigen::Index> by_id;
  for (Eigen::Index i = 0; i < ds.n(); ++i) by_id[ds.ids[static_cast<std::size_t>(i)]] = i;

  const auto n_pred = static_cast<Eigen::Index>(preds.rows.size());
  if (n_pred == 0) throw gpaft::schema_error("no prediction rows to score");
  Eigen::VectorXd risk(n_pred), times(n_pred);
  std::vector<int> indicators(static_cast<std::size_t>(n_pred));
  Eigen::MatrixXd surv(n_pred, static_cast<Eigen::Index>(surv_cols.size()));
  for (Eigen::Index r = 0; r < n_pred; ++r) {
    const auto& row = preds.rows[static_cast<std::size_t>(r)];
    const std::string& id = row[static_cast<std::size_t>(id_col)];
    const auto hit = by_id.find(id);
    if (hit == by_id.end())
      throw gpaft::schema_error("prediction id '" + id +
                                "' has no survival record");
    const Eigen::Index i = hit->second;
    const gpaft::Censoring code = ds.event[static_cast<std::size_t>(i)];
    if (code != gpaft::Censoring::event && code != gpaft::Censoring::right)
      throw gpaft::schema_error(
          "evaluate supports right-censored outcomes only");
    times[r] = ds.time[i];
    indicators[static_cast<std::size_t>(r)] =
        code == gpaft::Censoring::event ? 1 : 0;
    risk[r] = gpaft::detail::parse_double(row[static_cast<std::size_t>(risk_col)],
                                          "risk_score");
    for (std::size_t c = 0; c < surv_cols.size(); ++c)
      surv(r, static_cast<Eigen::Index>(c)) = gpaft::detail::parse_double(
          row[static_cast<std::size_t>(surv_cols[c])], preds.header[static_cast<std::size_t>(surv_cols[c])]);
  }

  gpaft::EvalConfig ec;
  ec.tau = tau;
  ec.oracle_censoring = oracle;
  ec.grid.resize(static_cast<Eigen::Index>(grid_times.size()));
  for (std::size_t k = 0; k < grid_times.size(); ++k)
    ec.grid[static_cast<Eigen::Index>(k)] = grid_times[k];
  gpaft::EvalPlan plan = gpaft::make_eval_plan(times, indicators, ec);

  // Horizon columns beyond tau cannot enter the integrals; drop them.
  Eigen::Index usable = 0;
  while (usable < plan.grid.size() &&
         plan.grid[usable] <= plan.tau * (1.0 + 1e-12))
    ++usable;
  if (usable == 0)
    throw gpaft::schema_error("every s@ column lies beyond the horizon tau");
  if (usable < plan.grid.size()) {
    std::cerr << "note: ignoring " << plan.grid.size() - usable
              << " horizon columns beyond tau\n";
    plan.grid.conservativeResize(usable);
  }

  const gpaft::EvaluationReport report = gpaft::evaluate_predictions(
      risk, surv.leftCols(plan.grid.size()), times, plan);

  json cfg;
  cfg["predictions"] = predictions_path;
  cfg["survival"] = survival_path;
  cfg["tau"] = tau > 0.0 ? json(tau) : json();
  cfg["oracle_censoring"] = oracle;
  json out;
  out["c_index"] = report.c_index;
  out["ibs"] = report.ibs;
  out["iauc"] = report.iauc;
  out["tau"] = report.tau;
  out["n_pairs"] = report.n_pairs;
  out["config"] = cfg;
  write_text(out_path, out.dump(2) + "\n");
  std::cout << "c_index=" << fmt17(report.c_index)
            << " ibs=" << fmt17(report.ibs) << " iauc=" << fmt17(report.iauc)
            << " tau=" << fmt17(report.tau) << " n_pairs=" << report.n_pairs
            << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

gpaft::Method method_from_name(const std::string& name) {
  if (name == "GPR:K") return gpaft::Method::gpr_k;
  if (name == "GPR:M") return gpaft::Method::gpr_m;
  if (name == "GPR:I") return gpaft::Method::gpr_i;
  if (name == "LMM:K") return gpaft::Method::lmm_k;
  if (name == "LMM:M") return gpaft::Method::lmm_m;
  throw gpaft::schema_error("unknown method '" + name +
                            "' (GPR:K, GPR:M, GPR:I, LMM:K, LMM:M)");
}

int cmd_simulate(gpaft::SimConfig cfg, const gpaft::McemConfig& mcem,
                 const std::string& methods_text, int reps, int jobs,
                 const std::string& out_dir) {
  std::vector<gpaft::Method> methods;
  {
    std::stringstream ss(methods_text);
    std::string item;
    while (std::getline(ss, item, ',')) methods.push_back(method_from_name(item));
  }
  if (methods.empty()) throw gpaft::schema_error("no methods requested");
  cfg.validate();

  std::filesystem::create_directories(out_dir);
  const std::string csv_path = out_dir + "/replications.csv";
  const std::string summary_path = out_dir + "/summary.json";

  json cfg_echo;
  cfg_echo["model"] = cfg.model;
  cfg_echo["kernel_truth"] =
      cfg.kernel_truth == gpaft::KernelTruth::genome ? "genome" : "pathway";
  cfg_echo["n"] = cfg.n;
  cfg_echo["p"] = cfg.p;
  cfg_echo["train_size"] = cfg.train_size;
  cfg_echo["test_size"] = cfg.test_size;
  cfg_echo["seed"] = cfg.seed;
  cfg_echo["reps"] = reps;
  cfg_echo["jobs"] = jobs;
  cfg_echo["s1"] = mcem.s1;
  cfg_echo["s_max"] = mcem.s_max;
  cfg_echo["thin"] = mcem.thin;
  cfg_echo["burnin"] = mcem.burnin;
  json method_names = json::array();
  for (const auto m : methods) method_names.push_back(gpaft::method_name(m));
  cfg_echo["methods"] = method_names;
  std::cerr << "config: " << cfg_echo.dump() << "\n";

  const std::vector<gpaft::ReplicationRecord> records =
      gpaft::run_replications(cfg, methods, mcem, reps, jobs);

  std::ostringstream csv;
  csv << "rep,method,c_index,ibs,iauc,imputation_corr,censor_rate,ipw_corr\n";
  std::map<std::string, std::array<double, 4>> sums;
  std::map<std::string, long> counts;
  double censor_sum = 0.0;
  double ipw_sum = 0.0;
  for (const auto& rec : records) {
    censor_sum += rec.censor_rate;
    ipw_sum += rec.ipw_corr;
    for (const auto& mm : rec.methods) {
      csv << rec.rep << ',' << mm.method << ',' << fmt17(mm.c_index) << ','
          << fmt17(mm.ibs) << ',' << fmt17(mm.iauc) << ','
          << fmt17(mm.imputation_corr) << ',' << fmt17(rec.censor_rate) << ','
          << fmt17(rec.ipw_corr) << "\n";
      auto& s = sums[mm.method];
      s[0] += mm.c_index;
      s[1] += mm.ibs;
      s[2] += mm.iauc;
      s[3] += mm.imputation_corr;
      counts[mm.method] += 1;
    }
  }
  write_text(csv_path, csv.str());

  json summary;
  summary["config"] = cfg_echo;
  summary["reps"] = static_cast<long>(records.size());
  summary["censor_rate_mean"] = censor_sum / static_cast<double>(records.size());
  summary["ipw_corr_mean"] = ipw_sum / static_cast<double>(records.size());
  json per_method;
  for (const auto& [name, s] : sums) {
    const auto cnt = static_cast<double>(counts[name]);
    json row;
    row["c_index_mean"] = s[0] / cnt;
    row["ibs_mean"] = s[1] / cnt;
    row["iauc_mean"] = s[2] / cnt;
    row["imputation_corr_mean"] = s[3] / cnt;
    per_method[name] = row;
  }
  summary["methods"] = per_method;
  write_text(summary_path, summary.dump(2) + "\n");

  std::cout << "wrote " << csv_path << " and " << summary_path << "\n";
  for (const auto& [name, s] : sums)
    std::cout << name << ": c_index=" << fmt17(s[0] / static_cast<double>(counts[name]))
              << " ibs=" << fmt17(s[1] / static_cast<double>(counts[name]))
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process accelerated failure time modeling"};
  app.require_subcommand(1);

  DataArgs data;
  gpaft::McemConfig mcem;
  std::string config_path;
  std::string out_path;
  int jobs = 1;

  // fit
  CLI::App* fit = app.add_subcommand("fit", "Estimate the model by MC-EM");
  fit->add_option("--survival", data.survival, "Survival CSV (id,time,status)");
  fit->add_option("--covariates", data.covariates, "Clinical covariate CSV");
  fit->add_option("--expression", data.expression, "Expression CSV");
  fit->add_option("--pathways", data.pathways, "Pathway JSON");
  fit->add_option("--kernel", data.kernel, "genome | pathway | identity");
  fit->add_option("--genes-as", data.genes_as,
                  "Expression orientation: cols | rows");
  fit->add_option("--s1", mcem.s1, "Initial Monte Carlo sample size");
  fit->add_option("--s-max", mcem.s_max, "Monte Carlo sample cap");
  fit->add_option("--thin", mcem.thin, "Gibbs thinning stride");
  fit->add_option("--burnin", mcem.burnin, "Gibbs burn-in sweeps");
  fit->add_option("--seed", mcem.seed, "RNG seed");
  fit->add_flag("--m1-fastpath", "Force the single-kernel eigen fast path on");
  fit->add_flag("--no-m1-fastpath", "Disable the single-kernel fast path");
  fit->add_option("--config", config_path, "JSON config file (flags win)");
  fit->add_option("--out", out_path, "Output model JSON path")
      ->default_val("fit.json");

  // predict
  std::string model_path;
  std::string times_text;
  DataArgs pred_data;
  pred_data.genes_as.clear();   // default: inherit from the model record
  CLI::App* predict =
      app.add_subcommand("predict", "Kriging predictions for new subjects");
  predict->add_option("--model", model_path, "Model JSON written by fit")
      ->required();
  predict->add_option("--covariates", pred_data.covariates,
                      "New-subject covariate CSV")
      ->required();
  predict->add_option("--expression", pred_data.expression,
                      "New-subject expression CSV")
      ->required();
  predict->add_option("--genes-as", pred_data.genes_as,
                      "Orientation of the new expression file");
  predict->add_option("--times", times_text,
                      "Comma-separated survival horizons for S(t) columns");
  predict->add_option("--out", out_path, "Output CSV path")
      ->default_val("predictions.csv");

  // evaluate
  std::string predictions_path;
  std::string survival_path;
  double tau = 0.0;
  bool oracle = false;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Score predictions against outcomes");
  evaluate->add_option("--predictions", predictions_path,
                       "CSV written by predict")
      ->required();
  evaluate->add_option("--survival", survival_path, "Outcome CSV")->required();
  evaluate->add_option("--tau", tau, "Evaluation horizon (default: data)");
  evaluate->add_flag("--oracle-censoring", oracle,
                     "Treat times as true failures (simulation truth)");
  evaluate->add_option("--out", out_path, "Output JSON path")
      ->default_val("evaluation.json");

  // simulate
  gpaft::SimConfig sim = gpaft::SimConfig::defaults(1);
  int sim_model = 1;
  int reps = 50;
  std::string methods_text = "GPR:K,GPR:I,LMM:K";
  std::string kernel_truth = "genome";
  std::string out_dir = "simulation";
  gpaft::McemConfig sim_mcem;
  sim_mcem.s_max = 20000;   // desk-scale default; --s-max raises it
  sim_mcem.thin = 5;
  sim_mcem.burnin = 50;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Replication study harness");
  simulate->add_option("--model", sim_model, "Generating model 1..4");
  simulate->add_option("--n", sim.n, "Cohort size (train + test)");
  simulate->add_option("--p", sim.p, "Gene count");
  simulate->add_option("--train-size", sim.train_size, "Training subjects");
  simulate->add_option("--test-size", sim.test_size, "Test subjects");
  simulate->add_option("--kernel-truth", kernel_truth, "genome | pathway");
  simulate->add_option("--methods", methods_text,
                       "Comma list of GPR:K,GPR:M,GPR:I,LMM:K,LMM:M");
  simulate->add_option("--reps", reps, "Replications");
  simulate->add_option("--jobs", jobs, "Worker threads");
  simulate->add_option("--seed", sim.seed, "Root RNG seed");
  simulate->add_option("--s1", sim_mcem.s1, "Initial Monte Carlo sample size");
  simulate->add_option("--s-max", sim_mcem.s_max, "Monte Carlo sample cap");
  simulate->add_option("--thin", sim_mcem.thin, "Gibbs thinning stride");
  simulate->add_option("--burnin", sim_mcem.burnin, "Gibbs burn-in sweeps");
  simulate->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      if (fit->count("--no-m1-fastpath") > 0) mcem.m1_fastpath = false;
      return cmd_fit(*fit, data, mcem, config_path, out_path);
    }
    if (predict->parsed())
      return cmd_predict(model_path, pred_data, times_text, out_path);
    if (evaluate->parsed())
      return cmd_evaluate(predictions_path, survival_path, tau, oracle,
                          out_path);
    if (simulate->parsed()) {
      gpaft::SimConfig cfg = gpaft::SimConfig::defaults(sim_model);
      cfg.n = sim.n;
      cfg.p = sim.p;
      cfg.train_size = sim.train_size;
      cfg.test_size = sim.test_size;
      cfg.seed = sim.seed;
      if (kernel_truth == "pathway")
        cfg.kernel_truth = gpaft::KernelTruth::pathway;
      else if (kernel_truth != "genome")
        throw gpaft::schema_error("--kernel-truth must be genome or pathway");
      return cmd_simulate(cfg, sim_mcem, methods_text, reps, jobs, out_dir);
    }
  } catch (const gpaft::schema_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gpaft::numeric_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
