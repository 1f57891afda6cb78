#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "wcr/competing.hpp"
#include "wcr/dgp.hpp"
#include "wcr/errors.hpp"
#include "wcr/rng.hpp"

using namespace wcr;
using wcrtest::make_dataset;
using wcrtest::random_dataset;
using wcrtest::RandomInstanceOptions;

TEST_CASE("nr_test: balanced signs in a lone cluster give T = 0, p = 1") {
  // sub-cluster means +1, +1, -1, -1 around a zero grand mean
  std::vector<double> y, x;
  std::vector<std::string> ks, js;
  const double means[4] = {1.0, 1.0, -1.0, -1.0};
  for (int j = 0; j < 4; ++j) {
    for (int t = 0; t < 5; ++t) {
      y.push_back(means[j] + 0.01 * (t - 2));
      x.push_back(1.0);
      ks.push_back("K");
      js.push_back("K-J" + std::to_string(j));
    }
  }
  const Dataset ds = make_dataset(y, x, {}, ks, js);
  const TestResult res = nr_test(ds, 0.05, 1000, 1);
  CHECK(res.statistic == doctest::Approx(0.0));
  CHECK(res.p_value == doctest::Approx(1.0));
  CHECK_FALSE(res.reject);
}

TEST_CASE("im_test never rejects when all cluster estimates coincide") {
  // y depends on x the same way in every cluster, no noise
  std::vector<double> y, x;
  std::vector<std::string> ks, js;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int t = 0; t < 6; ++t) {
        const double xi = gauss(rng);
        x.push_back(xi);
        y.push_back(2.0 * xi);  // beta_k = 2 exactly, residuals 0
        ks.push_back("K" + std::to_string(k));
        js.push_back("K" + std::to_string(k) + "-J" + std::to_string(j));
      }
    }
  }
  const Dataset ds = make_dataset(y, x, {}, ks, js);
  const TestResult res = im_test(ds, 0.05, 1000, 7);
  CHECK(res.statistic == doctest::Approx(0.0));
  CHECK_FALSE(res.reject);
  REQUIRE(res.group_estimates.size() == 3);
  for (double b : res.group_estimates) CHECK(b == doctest::Approx(2.0));
}

TEST_CASE("im_test is infeasible when a cluster design is singular") {
  // inside cluster K0 the regressor is collinear with the intercept control
  std::vector<double> y, x, w;
  std::vector<std::string> ks, js;
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      for (int t = 0; t < 5; ++t) {
        x.push_back(k == 0 ? 1.0 : gauss(rng));
        w.push_back(1.0);
        y.push_back(gauss(rng));
        ks.push_back("K" + std::to_string(k));
        js.push_back("K" + std::to_string(k) + "-J" + std::to_string(j));
      }
    }
  }
  const Dataset ds = make_dataset(y, x, {w}, ks, js);
  CHECK_THROWS_AS(im_test(ds, 0.05, 100, 1), InfeasibleError);
  try {
    im_test(ds, 0.05, 100, 1);
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("K0") != std::string::npos);
  }
}

TEST_CASE("im_test p-value and decision are coherent on random data") {
  std::mt19937_64 rng(14);
  RandomInstanceOptions opt;
  opt.r_min = 3;
  opt.r_max = 4;
  opt.d = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset ds = random_dataset(rng, opt);
    const TestResult res = im_test(ds, 0.05, 500, rep);
    CHECK(res.p_value >= 0.0);
    CHECK(res.p_value <= 1.0);
    CHECK(res.statistic >= 0.0);
    // rejecting at the quantile implies a small right-tail fraction
    if (res.reject) CHECK(res.p_value <= 0.06);
  }
}

TEST_CASE("mnw tau is exactly zero when the partitions coincide") {
  std::mt19937_64 rng(15);
  RandomInstanceOptions opt;
  opt.qk_min = 1;
  opt.qk_max = 1;  // one sub-cluster per cluster
  opt.r_min = 4;
  opt.r_max = 4;
  opt.d = 1;
  const Dataset ds = random_dataset(rng, opt);
  const TestResult res = mnw_test(ds, 0.05, 99, 3);
  CHECK(res.statistic == 0.0);
}

TEST_CASE("mnw statistic flips sign when the two levels swap roles") {
  std::mt19937_64 rng(16);
  RandomInstanceOptions opt;
  opt.d = 1;
  const Dataset ds = random_dataset(rng, opt);
  const RegressionFit fit = ols_fit(ds);
  const double coarse = cce_sandwich(ds, fit, Grouping::cluster)(0, 0);
  const double fine = cce_sandwich(ds, fit, Grouping::subcluster)(0, 0);
  const TestResult res = mnw_test(ds, 0.05, 99, 3);
  CHECK(res.statistic == doctest::Approx(coarse - fine).epsilon(1e-10));
  // swapping the roles negates tau by construction of the difference
  CHECK((fine - coarse) == doctest::Approx(-res.statistic).epsilon(1e-10));
}

TEST_CASE("mnw bootstrap engine equals a direct refit draw by draw") {
  std::mt19937_64 rng(17);
  RandomInstanceOptions opt;
  opt.d = 1;
  const Dataset ds = random_dataset(rng, opt);
  const int b = 25;
  const std::uint64_t seed = 99;
  const TestResult res = mnw_test(ds, 0.05, b, seed);

  // replay the same Rademacher stream and recompute each draw the slow way
  const ClusterLayout layout = build_layout(ds);
  const RegressionFit fit = ols_fit(ds);
  const Eigen::VectorXd fitted = ds.y - fit.residuals;
  Prng replay(derive_seed(seed, stream::kMnwBoot));
  std::size_t extreme = 0;
  for (int t = 0; t < b; ++t) {
    Dataset star = ds;
    for (int j = 0; j < layout.q; ++j) {
      const double omega = replay.rademacher();
      for (int i : layout.members[j]) {
        star.y[i] = fitted[i] + omega * fit.residuals[i];
      }
    }
    const RegressionFit f2 = ols_fit(star);
    const double tau_star =
        cce_sandwich(star, f2, Grouping::cluster)(0, 0) -
        cce_sandwich(star, f2, Grouping::subcluster)(0, 0);
    if (std::abs(tau_star) >= std::abs(res.statistic)) ++extreme;
  }
  CHECK(res.p_value ==
        doctest::Approx((1.0 + extreme) / (b + 1.0)).epsilon(1e-12));
}

TEST_CASE("mnw needs a positive draw count") {
  std::mt19937_64 rng(18);
  RandomInstanceOptions opt;
  const Dataset ds = random_dataset(rng, opt);
  CHECK_THROWS_AS(mnw_test(ds, 0.05, 0, 1), ConfigError);
}

TEST_CASE("cce t-test at the true coefficient has t = 0 and p = 1") {
  std::mt19937_64 rng(19);
  RandomInstanceOptions opt;
  opt.d = 0;
  const Dataset ds = random_dataset(rng, opt);
  const RegressionFit fit = ols_fit(ds);
  const TestResult res =
      cce_t_test(ds, fit.beta_hat, Grouping::cluster, 0.05);
  CHECK(res.statistic == 0.0);
  CHECK(res.p_value == 1.0);
  CHECK_FALSE(res.reject);
}

TEST_CASE("cce t-test p decreases as the null moves away") {
  std::mt19937_64 rng(20);
  RandomInstanceOptions opt;
  opt.d = 0;
  const Dataset ds = random_dataset(rng, opt);
  const RegressionFit fit = ols_fit(ds);
  const double p1 =
      cce_t_test(ds, fit.beta_hat + 0.1, Grouping::subcluster, 0.05).p_value;
  const double p2 =
      cce_t_test(ds, fit.beta_hat + 10.0, Grouping::subcluster, 0.05).p_value;
  CHECK(p2 < p1);
  CHECK(p1 <= 1.0);
  CHECK(p2 > 0.0);
}

TEST_CASE("art with four groups can never reject at the 5% level") {
  std::mt19937_64 rng(21);
  RandomInstanceOptions opt;
  opt.r_min = 4;
  opt.r_max = 4;
  opt.d = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset ds = random_dataset(rng, opt);
    const TestResult res = art_test(ds, 0.0, Grouping::cluster, 0.05);
    CHECK(res.p_value >= 2.0 / 16.0);
    CHECK_FALSE(res.reject);
  }
}

TEST_CASE("art with 12 same-sign deviations attains p = 2/4096") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  // 12 groups of 3 rows, x = 1: group estimate = group mean
  std::vector<double> y, x;
  std::vector<std::string> ks, js;
  for (int g = 0; g < 12; ++g) {
    const double mean = unif(rng);  // all positive deviations from 0
    for (int t = 0; t < 3; ++t) {
      y.push_back(mean);
      x.push_back(1.0);
      ks.push_back("K" + std::to_string(g));
      js.push_back("K" + std::to_string(g) + "-J");
    }
  }
  const Dataset ds = make_dataset(y, x, {}, ks, js);
  const TestResult res = art_test(ds, 0.0, Grouping::cluster, 0.05);
  CHECK(res.p_value == doctest::Approx(2.0 / 4096.0));
  CHECK(res.reject);
}

TEST_CASE("art statistic is zero for symmetric deviations") {
  std::vector<double> y, x;
  std::vector<std::string> ks, js;
  const double devs[4] = {0.8, -0.8, 1.6, -1.6};
  for (int g = 0; g < 4; ++g) {
    for (int t = 0; t < 2; ++t) {
      y.push_back(devs[g]);
      x.push_back(1.0);
      ks.push_back("K" + std::to_string(g));
      js.push_back("K" + std::to_string(g) + "-J");
    }
  }
  const Dataset ds = make_dataset(y, x, {}, ks, js);
  const TestResult res = art_test(ds, 0.0, Grouping::cluster, 0.05);
  CHECK(res.statistic == doctest::Approx(0.0));
  CHECK(res.p_value == doctest::Approx(1.0));
}

TEST_CASE("art p-values are multiples of 2 / 2^G") {
  std::mt19937_64 rng(23);
  RandomInstanceOptions opt;
  opt.r_min = 5;
  opt.r_max = 5;
  opt.d = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset ds = random_dataset(rng, opt);
    const TestResult res = art_test(ds, 0.1, Grouping::cluster, 0.05);
    const double unit = 2.0 / 32.0;
    const double multiples = res.p_value / unit;
    CHECK(multiples == doctest::Approx(std::round(multiples)).epsilon(1e-9));
    CHECK(res.p_value >= unit);
  }
}

TEST_CASE("art is invariant to relabeling clusters") {
  std::mt19937_64 rng(24);
  RandomInstanceOptions opt;
  opt.r_min = 4;
  opt.r_max = 4;
  opt.d = 0;
  Dataset ds = random_dataset(rng, opt);
  const TestResult a = art_test(ds, 0.2, Grouping::cluster, 0.05);
  // swap the names of the first two clusters; sub-cluster labels follow so
  // nesting stays intact
  Dataset relabeled = ds;
  for (long i = 0; i < relabeled.n(); ++i) {
    if (ds.cluster_id[i] == "K0") relabeled.cluster_id[i] = "K1";
    else if (ds.cluster_id[i] == "K1") relabeled.cluster_id[i] = "K0";
    relabeled.subcluster_id[i] = relabeled.cluster_id[i] + "::" +
                                 ds.subcluster_id[i];
  }
  const TestResult b = art_test(relabeled, 0.2, Grouping::cluster, 0.05);
  CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
  CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
}

TEST_CASE("wild bootstrap engine equals a direct refit draw by draw") {
  std::mt19937_64 rng(25);
  RandomInstanceOptions opt;
  opt.d = 1;
  opt.intercept_control = true;
  const Dataset ds = random_dataset(rng, opt);
  const double beta_null = 0.3;
  const int b = 25;
  const std::uint64_t seed = 4242;
  const TestResult res =
      wild_bootstrap_t_test(ds, beta_null, Grouping::cluster, b, seed, 0.05);

  const ClusterLayout layout = build_layout(ds);
  const auto groups = cluster_members(layout);
  // restricted fit by hand
  Eigen::VectorXd y0 = ds.y - beta_null * ds.x;
  const Eigen::VectorXd gamma_r =
      (ds.w.transpose() * ds.w).ldlt().solve(ds.w.transpose() * y0);
  const Eigen::VectorXd fitted0 = beta_null * ds.x + ds.w * gamma_r;
  const Eigen::VectorXd resid0 = ds.y - fitted0;

  Prng replay(derive_seed(seed, stream::kWildBoot));
  std::size_t extreme = 0;
  for (int t = 0; t < b; ++t) {
    Dataset star = ds;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const double omega = replay.rademacher();
      for (int i : groups[g]) star.y[i] = fitted0[i] + omega * resid0[i];
    }
    const RegressionFit f2 = ols_fit(star);
    const double om = cce_sandwich(star, f2, Grouping::cluster)(0, 0);
    const double t_star = (f2.beta_hat - beta_null) / std::sqrt(om);
    if (std::abs(t_star) >= std::abs(res.statistic)) ++extreme;
  }
  CHECK(res.p_value ==
        doctest::Approx((1.0 + extreme) / (b + 1.0)).epsilon(1e-12));
}

TEST_CASE("wild bootstrap requires at least one draw") {
  std::mt19937_64 rng(26);
  RandomInstanceOptions opt;
  const Dataset ds = random_dataset(rng, opt);
  CHECK_THROWS_AS(wild_bootstrap_t_test(ds, 0.0, Grouping::cluster, 0, 1, 0.05),
                  ConfigError);
}

TEST_CASE("bootstrap p-values are never zero") {
  std::mt19937_64 rng(27);
  RandomInstanceOptions opt;
  opt.d = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const Dataset ds = random_dataset(rng, opt);
    CHECK(mnw_test(ds, 0.05, 49, rep).p_value > 0.0);
    CHECK(wild_bootstrap_t_test(ds, 5.0, Grouping::subcluster, 49, rep, 0.05)
              .p_value > 0.0);
    CHECK(nr_test(ds, 0.05, 200, rep).p_value > 0.0);
    CHECK(art_test(ds, 5.0, Grouping::cluster, 0.05).p_value > 0.0);
  }
}
