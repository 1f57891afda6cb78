// wcrtest: randomization tests for the level of clustering in linear
// regression, plus the Monte Carlo machinery behind the accompanying
// simulation tables and power curves.
//
// Subcommands:
//   test      run one test (wcr|nr|im|mnw) on a CSV dataset
//   simulate  Monte Carlo rejection rates for a simulated design
//   power     rejection-rate rows over a grid of dependence strengths
//
// Exit codes: 0 = ran, 2 = usage error, 3 = data error.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wcr/competing.hpp"
#include "wcr/dataset.hpp"
#include "wcr/dgp.hpp"
#include "wcr/errors.hpp"
#include "wcr/mc.hpp"
#include "wcr/wcr.hpp"

using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int default_jobs() {
  if (const char* env = std::getenv("WCR_JOBS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

struct DataArgs {
  std::string path;
  std::string outcome, regressor, cluster, subcluster;
  std::string controls;  // comma separated, may be empty
  std::string delimiter = ",";
  bool no_header = false;

  wcr::SchemaSpec schema() const {
    wcr::SchemaSpec s;
    s.outcome = outcome;
    s.regressor = regressor;
    s.cluster = cluster;
    s.subcluster = subcluster;
    if (!controls.empty()) {
      std::string tok;
      std::stringstream ss(controls);
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) s.controls.push_back(tok);
      }
    }
    if (delimiter.size() != 1) {
      throw CLI::ValidationError("--delimiter must be a single character");
    }
    s.delimiter = delimiter[0];
    s.header = !no_header;
    return s;
  }
};

void add_data_flags(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.path, "CSV file")->required();
  cmd->add_option("--outcome", args.outcome, "outcome column")->required();
  cmd->add_option("--regressor", args.regressor, "regressor of interest")
      ->required();
  cmd->add_option("--controls", args.controls,
                  "comma-separated control columns (may be empty)");
  cmd->add_option("--cluster", args.cluster, "coarse cluster column")
      ->required();
  cmd->add_option("--subcluster", args.subcluster, "fine sub-cluster column")
      ->required();
  cmd->add_option("--delimiter", args.delimiter, "field delimiter")
      ->default_val(",");
  cmd->add_flag("--no-header", args.no_header,
                "columns are 0-based indices, no header row");
}

json signs_to_json(const wcr::SignVector& s) {
  json arr = json::array();
  for (auto v : s.signs) arr.push_back(static_cast<int>(v));
  return arr;
}

// --------------------------------------------------------------------------
// test
// --------------------------------------------------------------------------

int run_test_command(const DataArgs& data, const std::string& method,
                     double alpha, std::optional<int> b_opt,
                     std::optional<std::uint64_t> seed_opt,
                     const std::string& format) {
  const auto t0 = std::chrono::steady_clock::now();
  const wcr::Dataset ds = wcr::load_dataset(data.path, data.schema());
  const std::uint64_t seed = seed_opt.value_or(entropy_seed());

  json report;
  report["version"] = "1";
  report["method"] = method;
  report["alpha"] = alpha;
  report["seed"] = seed;
  report["data"] = data.path;

  double statistic = 0.0, p_value = 1.0;
  bool reject = false;
  int b_used = 0;

  if (method == "wcr") {
    b_used = b_opt.value_or(1000);
    const wcr::WcrResult res = wcr::wcr_test(ds, alpha, b_used, seed);
    statistic = res.statistic;
    p_value = res.p_value;
    reject = res.reject;
    json cutoffs = json::array();
    for (const auto& pc : res.per_cutoff) {
      cutoffs.push_back({{"cutoff", pc.cutoff},
                         {"signs", signs_to_json(pc.signs)},
                         {"p", pc.p_value}});
    }
    report["per_cutoff"] = cutoffs;
    report["ratios"] = res.ratios;
    report["zero_set"] = res.zero_set;
    report["r_plus"] = res.r_plus;
    report["r_minus"] = res.r_minus;
    report["group_mode"] =
        res.group_mode == wcr::GroupMode::full ? "full" : "stochastic";
    report["group_size"] = res.group_size;
  } else if (method == "nr") {
    b_used = b_opt.value_or(1000);
    const wcr::TestResult res = wcr::nr_test(ds, alpha, b_used, seed);
    statistic = res.statistic;
    p_value = res.p_value;
    reject = res.reject;
  } else if (method == "im") {
    b_used = b_opt.value_or(1000);
    const wcr::TestResult res = wcr::im_test(ds, alpha, b_used, seed);
    statistic = res.statistic;
    p_value = res.p_value;
    reject = res.reject;
  } else if (method == "mnw") {
    b_used = b_opt.value_or(399);
    const wcr::TestResult res = wcr::mnw_test(ds, alpha, b_used, seed);
    statistic = res.statistic;
    p_value = res.p_value;
    reject = res.reject;
  } else {
    throw CLI::ValidationError("unknown method '" + method +
                               "' (expected wcr|nr|im|mnw)");
  }

  report["B"] = b_used;
  report["statistic"] = statistic;
  report["p_value"] = p_value;
  report["reject"] = reject;
  report["elapsed_ms"] =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - t0)
          .count();

  if (format == "json") {
    std::cout << report.dump(2) << '\n';
    return 0;
  }

  std::printf("method:    %s\n", method.c_str());
  std::printf("seed:      %llu\n", static_cast<unsigned long long>(seed));
  std::printf("B:         %d\n", b_used);
  std::printf("statistic: %.6g\n", statistic);
  std::printf("p-value:   %.4f\n", p_value);
  std::printf("decision:  %s at alpha = %g\n",
              reject ? "reject" : "fail to reject", alpha);
  if (method == "wcr") {
    std::printf("cutoff  p-value  signs\n");
    for (const auto& pc : report["per_cutoff"]) {
      std::string s;
      for (const auto& v : pc["signs"]) {
        const int vi = v.get<int>();
        s += (vi > 0 ? '+' : (vi < 0 ? '-' : '0'));
      }
      std::printf("%6d  %.4f   %s\n", pc["cutoff"].get<int>(),
                  pc["p"].get<double>(), s.c_str());
    }
  }
  return 0;
}

// --------------------------------------------------------------------------
// simulate / power
// --------------------------------------------------------------------------

struct SimArgs {
  std::string model;
  int r = 4, qk = 4, nj = 25;
  double rho = 0.0;
  std::optional<double> phi;
  std::string sigma;
  std::string tests;
  int reps = 1000;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  int jobs = default_jobs();
  int b_wcr = 1000, b_mnw = 399, b_wild = 399, im_draws = 1000;
  bool unit_variance = false;
};

void add_sim_flags(CLI::App* cmd, SimArgs& args) {
  cmd->add_option("--model", args.model, "1 | 2 | appendixB")->required();
  cmd->add_option("--r", args.r, "number of clusters");
  cmd->add_option("--qk", args.qk, "sub-clusters per cluster");
  cmd->add_option("--nj", args.nj, "observations per sub-cluster");
  cmd->add_option("--rho", args.rho,
                  "dependence strength (appendixB: null deviation 1 - beta0)");
  cmd->add_option("--phi", args.phi, "autocorrelation coefficient");
  cmd->add_option("--sigma", args.sigma,
                  "noise-scale overrides, e.g. \"cluster1=10\" or "
                  "\"subcluster1=5\" (model 1 only)");
  cmd->add_option("--tests", args.tests,
                  "comma list from wcr,nr,im,mnw,cce,art,wild");
  cmd->add_option("--reps", args.reps, "Monte Carlo replications");
  cmd->add_option("--alpha", args.alpha, "test level");
  cmd->add_option("--seed", args.seed, "master seed (default: entropy)");
  cmd->add_option("--jobs", args.jobs, "worker threads (env WCR_JOBS)");
  cmd->add_option("--B", args.b_wcr, "sign-group draws for wcr/nr");
  cmd->add_option("--B-mnw", args.b_mnw, "bootstrap draws for mnw");
  cmd->add_option("--B-wild", args.b_wild, "bootstrap draws for wild");
  cmd->add_option("--im-draws", args.im_draws, "reference draws for im");
  cmd->add_flag("--unit-variance-normalization", args.unit_variance,
                "rescale the model-1 sub-cluster term to unit variance");
}

wcr::SigmaSpec parse_sigma(const std::string& text) {
  wcr::SigmaSpec spec;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--sigma entries look like cluster1=10");
    }
    const std::string key = tok.substr(0, eq);
    const double value = std::atof(tok.substr(eq + 1).c_str());
    if (!(value > 0)) {
      throw CLI::ValidationError("--sigma scales must be positive");
    }
    if (key.rfind("subcluster", 0) == 0) {
      spec.subcluster_scale[std::atoi(key.c_str() + 10)] = value;
    } else if (key.rfind("cluster", 0) == 0) {
      spec.cluster_scale[std::atoi(key.c_str() + 7)] = value;
    } else if (key == "all") {
      spec.base = value;
    } else {
      throw CLI::ValidationError("unknown --sigma key '" + key + "'");
    }
  }
  return spec;
}

wcr::McConfig build_mc_config(const SimArgs& args, CLI::App* cmd) {
  wcr::McConfig cfg;
  std::string default_tests = "nr,wcr,im,mnw";

  if (args.model == "1") {
    cfg.dgp.model = wcr::DgpSpec::Model::model1;
    cfg.dgp.m1.r = args.r;
    cfg.dgp.m1.q_k = args.qk;
    cfg.dgp.m1.n_j = args.nj;
    cfg.dgp.m1.rho = args.rho;
    cfg.dgp.m1.phi = args.phi.value_or(0.25);
    cfg.dgp.m1.unit_variance_normalization = args.unit_variance;
    if (!args.sigma.empty()) cfg.dgp.m1.sigma = parse_sigma(args.sigma);
  } else if (args.model == "2") {
    cfg.dgp.model = wcr::DgpSpec::Model::model2;
    cfg.dgp.m2.r = args.r;
    cfg.dgp.m2.q_k = args.qk;
    cfg.dgp.m2.n_j = args.nj;
    cfg.dgp.m2.rho = args.rho;
    cfg.dgp.m2.phi = args.phi.value_or(0.5);
    if (!args.sigma.empty()) {
      throw CLI::ValidationError("--sigma applies to model 1 only");
    }
  } else if (args.model == "appendixB") {
    cfg.dgp.model = wcr::DgpSpec::Model::appendix_b;
    cfg.dgp.ab.phi = args.phi.value_or(0.25);
    cfg.dgp.ab.deviation = args.rho;
    if (cmd->count("--r") || cmd->count("--qk") || cmd->count("--nj")) {
      throw CLI::ValidationError(
          "the appendixB design is fixed at r=4, qk=12, nj=100");
    }
    if (!args.sigma.empty()) {
      throw CLI::ValidationError("--sigma applies to model 1 only");
    }
    default_tests = "cce,art,wild";
  } else {
    throw CLI::ValidationError("unknown --model '" + args.model +
                               "' (expected 1 | 2 | appendixB)");
  }

  cfg.tests =
      wcr::parse_test_list(args.tests.empty() ? default_tests : args.tests);
  cfg.reps = args.reps;
  cfg.alpha = args.alpha;
  cfg.master_seed = args.seed.value_or(entropy_seed());
  cfg.jobs = args.jobs;
  cfg.sign_group_b = args.b_wcr;
  cfg.mnw_b = args.b_mnw;
  cfg.wild_b = args.b_wild;
  cfg.im_draws = args.im_draws;
  if (!args.seed.has_value()) {
    std::cerr << "seed: " << cfg.master_seed << "\n";
  }
  return cfg;
}

std::vector<double> parse_grid(const std::string& text) {
  double start = 0, stop = 0, step = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3) {
    throw CLI::ValidationError("--rho-grid expects START:STOP:STEP");
  }
  if (stop < start) throw CLI::ValidationError("--rho-grid: STOP < START");
  std::vector<double> grid;
  if (start == stop) {
    grid.push_back(start);
    return grid;
  }
  if (step <= 0) {
    throw CLI::ValidationError("--rho-grid: STEP must be positive");
  }
  for (double v = start; v <= stop + 1e-12; v += step) grid.push_back(v);
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randomization tests for the level of clustering"};
  app.require_subcommand(1);

  // ---- test ----
  auto* test_cmd = app.add_subcommand("test", "run one test on a CSV dataset");
  DataArgs data;
  add_data_flags(test_cmd, data);
  std::string method, format = "text";
  double alpha = 0.05;
  std::optional<int> b_opt;
  std::optional<std::uint64_t> seed_opt;
  test_cmd->add_option("--method", method, "wcr | nr | im | mnw")->required();
  test_cmd->add_option("--alpha", alpha, "test level")->default_val(0.05);
  test_cmd->add_option("--B", b_opt,
                       "draws (default: 1000; mnw bootstrap: 399)");
  test_cmd->add_option("--seed", seed_opt, "seed (default: entropy)");
  test_cmd->add_option("--format", format, "text | json")->default_val("text");

  // ---- simulate ----
  auto* sim_cmd =
      app.add_subcommand("simulate", "Monte Carlo rejection rates (CSV)");
  SimArgs sim;
  add_sim_flags(sim_cmd, sim);

  // ---- power ----
  auto* power_cmd =
      app.add_subcommand("power", "rejection rates over a rho grid (CSV)");
  SimArgs pow_args;
  add_sim_flags(power_cmd, pow_args);
  std::string grid_text;
  power_cmd->add_option("--rho-grid", grid_text, "START:STOP:STEP")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (test_cmd->parsed()) {
      if (format != "text" && format != "json") {
        std::cerr << "error: --format must be text or json\n";
        return kExitUsage;
      }
      return run_test_command(data, method, alpha, b_opt, seed_opt, format);
    }
    if (sim_cmd->parsed()) {
      const wcr::McConfig cfg = build_mc_config(sim, sim_cmd);
      wcr::write_mc_csv(wcr::run_mc(cfg), std::cout);
      return 0;
    }
    if (power_cmd->parsed()) {
      const wcr::McConfig cfg = build_mc_config(pow_args, power_cmd);
      wcr::write_mc_csv(wcr::power_curve(cfg, parse_grid(grid_text)),
                        std::cout);
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const wcr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const wcr::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
