// Regenerates data/toy, the bundled 60-subject demonstration cohort.
// Usage: gpaft_make_fixture <output-dir>
//
// The fixture is a Model 1 draw (genome-kernel truth, 40 genes, seed 214)
// from the library's own generators, so it stays in sync with them.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "gpaft/simulate.hpp"

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out.good()) {
    std::cerr << "cannot write " << path << "\n";
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data/toy";
  std::filesystem::create_directories(dir);

  gpaft::SimConfig cfg = gpaft::SimConfig::defaults(1);
  cfg.n = 60;
  cfg.p = 40;
  cfg.train_size = 60;
  cfg.test_size = 0;
  cfg.seed = 214;

  gpaft::RandomStream rng(cfg.seed, 0);
  const gpaft::Covariates cov = gpaft::gen_covariates(cfg, rng);
  const gpaft::TruthKernel truth = gpaft::truth_covariance(cov.X, cfg, rng);
  const Eigen::VectorXd effect = gpaft::gen_genomic_effect(truth, cfg, rng);
  const Eigen::VectorXd times = gpaft::gen_survival(cfg, cov.Z, effect, rng);
  const gpaft::CensoredTimes cens =
      gpaft::gen_censoring(times, cov.stages, cfg, rng);

  std::string surv = "id,time,status\n";
  std::string covcsv = "id,stage_ii,stage_iii,stage_iv,age_days\n";
  std::string expr = "id";
  for (Eigen::Index j = 0; j < cfg.p; ++j)
    expr += ",g" + std::to_string(j + 1);
  expr += "\n";
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    const std::string id = "toy" + std::to_string(i + 1);
    surv += id + "," + fmt17(cens.y[i]) + "," +
            std::to_string(cens.delta[static_cast<std::size_t>(i)]) + "\n";
    covcsv += id;
    for (int c = 1; c <= 4; ++c) covcsv += "," + fmt17(cov.Z(i, c));
    covcsv += "\n";
    expr += id;
    for (Eigen::Index j = 0; j < cfg.p; ++j) expr += "," + fmt17(cov.X(i, j));
    expr += "\n";
  }
  write_file(dir + "/survival.csv", surv);
  write_file(dir + "/covariates.csv", covcsv);
  write_file(dir + "/expression.csv", expr);

  // Two overlapping pathways; g25..g40 are left to the complement kernel.
  std::string pathways = R"([
  {"name": "pw_a", "genes": ["g1","g2","g3","g4","g5","g6","g7","g8","g9","g10","g11","g12"]},
  {"name": "pw_b", "genes": ["g10","g11","g12","g13","g14","g15","g16","g17","g18","g19","g20","g21","g22","g23","g24"]}
]
)";
  write_file(dir + "/pathways.json", pathways);

  int events = 0;
  for (const int d : cens.delta) events += d;
  std::cout << "wrote " << dir << ": n=" << cfg.n << " p=" << cfg.p
            << " events=" << events << " seed=" << cfg.seed << "\n";
  return 0;
}
