#include "wcr/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "wcr/competing.hpp"
#include "wcr/errors.hpp"
#include "wcr/rng.hpp"
#include "wcr/wcr.hpp"

namespace wcr {

std::string DgpSpec::name() const {
  switch (model) {
    case Model::model1: return "model1";
    case Model::model2: return "model2";
    case Model::appendix_b: return "appendixB";
  }
  return "?";
}

int DgpSpec::r() const {
  switch (model) {
    case Model::model1: return m1.r;
    case Model::model2: return m2.r;
    case Model::appendix_b: return 4;
  }
  return 0;
}

int DgpSpec::q_k() const {
  switch (model) {
    case Model::model1: return m1.q_k;
    case Model::model2: return m2.q_k;
    case Model::appendix_b: return 12;
  }
  return 0;
}

int DgpSpec::n_j() const {
  switch (model) {
    case Model::model1: return m1.n_j;
    case Model::model2: return m2.n_j;
    case Model::appendix_b: return 100;
  }
  return 0;
}

double DgpSpec::rho() const {
  switch (model) {
    case Model::model1: return m1.rho;
    case Model::model2: return m2.rho;
    case Model::appendix_b: return ab.deviation;
  }
  return 0;
}

double DgpSpec::phi() const {
  switch (model) {
    case Model::model1: return m1.phi;
    case Model::model2: return m2.phi;
    case Model::appendix_b: return ab.phi;
  }
  return 0;
}

namespace {

Dataset generate(const DgpSpec& dgp, std::uint64_t seed) {
  switch (dgp.model) {
    case DgpSpec::Model::model1: return gen_model1(dgp.m1, seed);
    case DgpSpec::Model::model2: return gen_model2(dgp.m2, seed);
    case DgpSpec::Model::appendix_b: return gen_appendix_b(seed, dgp.ab.phi);
  }
  throw ConfigError("unknown model");
}

struct TestRun {
  std::string name;
  std::uint64_t tag;  // stable seed stream id, independent of list order
  std::function<bool(const Dataset&, double, std::uint64_t)> reject;
};

std::vector<TestRun> expand_tests(const McConfig& cfg) {
  const bool beta_tests_ok = (cfg.dgp.model == DgpSpec::Model::appendix_b);
  const double beta_null = 1.0 - cfg.dgp.ab.deviation;

  std::vector<TestRun> runs;
  for (TestKind kind : cfg.tests) {
    switch (kind) {
      case TestKind::wcr:
        runs.push_back({"wcr", 0x10,
                        [b = cfg.sign_group_b](const Dataset& ds, double a,
                                               std::uint64_t s) {
                          return wcr_test(ds, a, b, s).reject;
                        }});
        break;
      case TestKind::nr:
        runs.push_back({"nr", 0x11,
                        [b = cfg.sign_group_b](const Dataset& ds, double a,
                                               std::uint64_t s) {
                          return nr_test(ds, a, b, s).reject;
                        }});
        break;
      case TestKind::im:
        runs.push_back({"im", 0x12,
                        [d = cfg.im_draws](const Dataset& ds, double a,
                                           std::uint64_t s) {
                          return im_test(ds, a, d, s).reject;
                        }});
        break;
      case TestKind::mnw:
        runs.push_back({"mnw", 0x13,
                        [b = cfg.mnw_b](const Dataset& ds, double a,
                                        std::uint64_t s) {
                          return mnw_test(ds, a, b, s).reject;
                        }});
        break;
      case TestKind::cce:
        if (!beta_tests_ok) {
          throw ConfigError("test 'cce' is only available with the appendixB model");
        }
        runs.push_back({"cce_coarse", 0x14,
                        [beta_null](const Dataset& ds, double a, std::uint64_t) {
                          return cce_t_test(ds, beta_null, Grouping::cluster, a).reject;
                        }});
        runs.push_back({"cce_fine", 0x15,
                        [beta_null](const Dataset& ds, double a, std::uint64_t) {
                          return cce_t_test(ds, beta_null, Grouping::subcluster, a).reject;
                        }});
        break;
      case TestKind::art:
        if (!beta_tests_ok) {
          throw ConfigError("test 'art' is only available with the appendixB model");
        }
        runs.push_back({"art_coarse", 0x16,
                        [beta_null](const Dataset& ds, double a, std::uint64_t) {
                          return art_test(ds, beta_null, Grouping::cluster, a).reject;
                        }});
        runs.push_back({"art_fine", 0x17,
                        [beta_null](const Dataset& ds, double a, std::uint64_t) {
                          return art_test(ds, beta_null, Grouping::subcluster, a).reject;
                        }});
        break;
      case TestKind::wild:
        if (!beta_tests_ok) {
          throw ConfigError("test 'wild' is only available with the appendixB model");
        }
        runs.push_back({"wild_coarse", 0x18,
                        [beta_null, b = cfg.wild_b](const Dataset& ds, double a,
                                                    std::uint64_t s) {
                          return wild_bootstrap_t_test(ds, beta_null,
                                                       Grouping::cluster, b, s, a)
                              .reject;
                        }});
        runs.push_back({"wild_fine", 0x19,
                        [beta_null, b = cfg.wild_b](const Dataset& ds, double a,
                                                    std::uint64_t s) {
                          return wild_bootstrap_t_test(ds, beta_null,
                                                       Grouping::subcluster, b, s, a)
                              .reject;
                        }});
        break;
    }
  }
  return runs;
}

enum : std::uint8_t { kFail = 0, kReject = 1, kError = 2 };

}  // namespace

std::vector<McResultRow> run_mc(const McConfig& cfg) {
  if (cfg.reps < 1) throw ConfigError("reps must be at least 1");
  const std::vector<TestRun> runs = expand_tests(cfg);
  if (runs.empty()) throw ConfigError("no tests requested");

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<std::uint8_t>> outcome(
      runs.size(), std::vector<std::uint8_t>(cfg.reps, kFail));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.reps) return;
      const Dataset ds =
          generate(cfg.dgp, derive_seed(cfg.master_seed, stream::kData, rep));
      for (std::size_t t = 0; t < runs.size(); ++t) {
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, runs[t].tag, rep);
        try {
          outcome[t][rep] =
              runs[t].reject(ds, cfg.alpha, seed) ? kReject : kFail;
        } catch (const Error&) {
          outcome[t][rep] = kError;
        }
      }
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::vector<McResultRow> rows;
  for (std::size_t t = 0; t < runs.size(); ++t) {
    McResultRow row;
    row.model = cfg.dgp.name();
    row.r = cfg.dgp.r();
    row.q_k = cfg.dgp.q_k();
    row.n_j = cfg.dgp.n_j();
    row.rho = cfg.dgp.rho();
    row.phi = cfg.dgp.phi();
    row.test = runs[t].name;
    row.reps = cfg.reps;
    row.seed = cfg.master_seed;
    row.wall_seconds = wall;
    for (std::uint8_t o : outcome[t]) {
      if (o == kReject) ++row.rejections;
      if (o == kError) ++row.errors;
    }
    const long usable = cfg.reps - row.errors;
    if (usable > 0) {
      row.rate = static_cast<double>(row.rejections) / usable;
      row.mc_se = std::sqrt(row.rate * (1.0 - row.rate) / usable);
    } else {
      row.rate = std::nan("");
      row.mc_se = std::nan("");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<McResultRow> power_curve(const McConfig& cfg,
                                     const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw ConfigError("empty rho grid");
  std::vector<McResultRow> rows;
  for (double rho : rho_grid) {
    McConfig point = cfg;
    switch (point.dgp.model) {
      case DgpSpec::Model::model1: point.dgp.m1.rho = rho; break;
      case DgpSpec::Model::model2: point.dgp.m2.rho = rho; break;
      case DgpSpec::Model::appendix_b: point.dgp.ab.deviation = rho; break;
    }
    auto part = run_mc(point);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::string mc_csv_header() {
  return "model,r,qk,nj,rho,phi,test,reps,rejections,rate,mc_se,errors,seed";
}

void write_mc_csv(const std::vector<McResultRow>& rows, std::ostream& out,
                  bool with_header) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  if (with_header) out << mc_csv_header() << '\n';
  for (const auto& row : rows) {
    out << row.model << ',' << row.r << ',' << row.q_k << ',' << row.n_j << ','
        << num(row.rho) << ',' << num(row.phi) << ',' << row.test << ','
        << row.reps << ',' << row.rejections << ',' << num(row.rate) << ','
        << num(row.mc_se) << ',' << row.errors << ',' << row.seed << '\n';
  }
}

std::vector<TestKind> parse_test_list(const std::string& csv) {
  std::vector<TestKind> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    if (tok == "wcr") out.push_back(TestKind::wcr);
    else if (tok == "nr") out.push_back(TestKind::nr);
    else if (tok == "im") out.push_back(TestKind::im);
    else if (tok == "mnw") out.push_back(TestKind::mnw);
    else if (tok == "cce") out.push_back(TestKind::cce);
    else if (tok == "art") out.push_back(TestKind::art);
    else if (tok == "wild") out.push_back(TestKind::wild);
    else throw ConfigError("unknown test '" + tok + "'");
  }
  if (out.empty()) throw ConfigError("empty test list");
  return out;
}

}  // namespace wcr
