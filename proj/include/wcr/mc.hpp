#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wcr/dgp.hpp"

namespace wcr {

enum class TestKind { wcr, nr, im, mnw, cce, art, wild };

// Fixed 4 x 12 x 100 independent-sub-cluster design; `deviation` moves the
// tested null to beta_null = 1 - deviation for the beta-inference tests
// (cce/art/wild), which are run at both the coarse and the fine level.
struct AppendixBConfig {
  double phi = 0.25;
  double deviation = 0.0;
};

struct DgpSpec {
  enum class Model { model1, model2, appendix_b };
  Model model = Model::model1;
  Model1Config m1;
  Model2Config m2;
  AppendixBConfig ab;

  std::string name() const;
  int r() const;
  int q_k() const;
  int n_j() const;
  double rho() const;  // deviation for appendix_b
  double phi() const;
};

struct McConfig {
  DgpSpec dgp;
  std::vector<TestKind> tests;
  int reps = 1000;
  double alpha = 0.05;
  std::uint64_t master_seed = 0;
  int jobs = 1;
  int sign_group_b = 1000;  // B for wcr/nr stochastic sign groups
  int im_draws = 1000;
  int mnw_b = 399;
  int wild_b = 399;
};

struct McResultRow {
  std::string model;
  int r = 0, q_k = 0, n_j = 0;
  double rho = 0.0, phi = 0.0;
  std::string test;
  int reps = 0;
  long rejections = 0;
  long errors = 0;
  double rate = 0.0;
  double mc_se = 0.0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

// Runs every requested test on the same dataset per replication. Dataset and
// per-test seeds are derived from (master seed, rep index), so the output is
// identical for any worker count. Replications where a test raises a library
// error are counted in `errors` and excluded from that test's denominator.
std::vector<McResultRow> run_mc(const McConfig& cfg);

// run_mc per grid value (rho, or null deviation for the appendix design),
// same master seed at every point so curves share replication noise.
std::vector<McResultRow> power_curve(const McConfig& cfg,
                                     const std::vector<double>& rho_grid);

std::string mc_csv_header();
void write_mc_csv(const std::vector<McResultRow>& rows, std::ostream& out,
                  bool with_header = true);

std::vector<TestKind> parse_test_list(const std::string& csv);

}  // namespace wcr
