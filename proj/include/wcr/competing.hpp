#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wcr/dataset.hpp"
#include "wcr/regression.hpp"
#include "wcr/wcr.hpp"

namespace wcr {

struct TestResult {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  std::vector<double> group_estimates;  // per-group beta for im/art
  int draws = 0;                        // reference or bootstrap draw count
  std::uint64_t seed = 0;
};

// Naive randomization test: the sign pattern of the raw score numerators
// (shift = 0), same sign-group conventions as the worst-case test.
TestResult nr_test(const Dataset& ds, double alpha, int b, std::uint64_t seed,
                   GroupPolicy policy = GroupPolicy::automatic);

// Variance-comparison test from cluster-by-cluster estimates. Reference
// distribution: V^W from W_k ~ N(0, omega_k) where omega_k is the
// sub-cluster-level sandwich within cluster k. Rejects when the observed
// between-cluster variance exceeds the empirical (1 - alpha) quantile.
// Infeasible when some cluster's design is rank deficient.
TestResult im_test(const Dataset& ds, double alpha, int draws,
                   std::uint64_t seed);

// Hausman-type statistic tau = cluster-level minus sub-cluster-level CCE
// (beta coordinate), referenced against a wild bootstrap with Rademacher
// weights drawn at the sub-cluster level. The unstudentized difference is
// compared with its own bootstrap distribution; p uses the +1 convention.
TestResult mnw_test(const Dataset& ds, double alpha, int b,
                    std::uint64_t seed);

// t-test of beta = beta_null with the group-level sandwich and Student-t
// critical values on G - 1 degrees of freedom.
TestResult cce_t_test(const Dataset& ds, double beta_null, Grouping grouping,
                      double alpha);

// Approximate randomization test from group-by-group estimates: studentized
// group mean referenced against all 2^G sign flips of (beta_g - beta_null),
// non-randomized >= counting. Cannot reject when alpha < 2^(1-G).
TestResult art_test(const Dataset& ds, double beta_null, Grouping grouping,
                    double alpha);

// Restricted (null-imposed) residual wild bootstrap with Rademacher weights
// at the chosen group level; bootstrap t statistics use the group-level
// sandwich; p = (1 + #{|t*| >= |t|}) / (B + 1).
TestResult wild_bootstrap_t_test(const Dataset& ds, double beta_null,
                                 Grouping grouping, int b, std::uint64_t seed,
                                 double alpha);

}  // namespace wcr
