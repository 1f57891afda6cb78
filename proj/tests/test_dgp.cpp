#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "wcr/dgp.hpp"
#include "wcr/errors.hpp"

using namespace wcr;

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double var_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / (v.size() - 1);
}

double cov_of(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (a.size() - 1);
}

}  // namespace

TEST_CASE("model 1 variance matches the implemented recursion") {
  SUBCASE("phi = 0, rho = 0 is standard normal noise") {
    Model1Config cfg;
    cfg.r = 1;
    cfg.q_k = 1;
    cfg.n_j = 100000;
    cfg.rho = 0.0;
    cfg.phi = 0.0;
    const Dataset ds = gen_model1(cfg, 313);
    std::vector<double> e(ds.n());
    for (long i = 0; i < ds.n(); ++i) e[i] = ds.y[i] - cfg.beta;
    CHECK(var_of(e) == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("phi = 0.25 literal scaling gives 1/(1-phi^2)^2") {
    Model1Config cfg;
    cfg.r = 1;
    cfg.q_k = 1;
    cfg.n_j = 100000;
    cfg.rho = 0.0;
    const Dataset ds = gen_model1(cfg, 314);
    std::vector<double> e(ds.n());
    for (long i = 0; i < ds.n(); ++i) e[i] = ds.y[i] - cfg.beta;
    const double expect = 1.0 / ((1 - 0.0625) * (1 - 0.0625));
    CHECK(var_of(e) == doctest::Approx(expect).epsilon(0.02));
  }
  SUBCASE("unit-variance normalization rescales to 1") {
    Model1Config cfg;
    cfg.r = 1;
    cfg.q_k = 1;
    cfg.n_j = 100000;
    cfg.rho = 0.0;
    cfg.unit_variance_normalization = true;
    const Dataset ds = gen_model1(cfg, 315);
    std::vector<double> e(ds.n());
    for (long i = 0; i < ds.n(); ++i) e[i] = ds.y[i] - cfg.beta;
    CHECK(var_of(e) == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("model 1 lag-1 autocorrelation is phi") {
  Model1Config cfg;
  cfg.r = 1;
  cfg.q_k = 1;
  cfg.n_j = 10000;
  cfg.rho = 0.0;
  const Dataset ds = gen_model1(cfg, 99);
  std::vector<double> a, b;
  for (long i = 0; i + 1 < ds.n(); ++i) {
    a.push_back(ds.y[i] - cfg.beta);
    b.push_back(ds.y[i + 1] - cfg.beta);
  }
  const double corr = cov_of(a, b) / std::sqrt(var_of(a) * var_of(b));
  CHECK(corr == doctest::Approx(0.25).epsilon(0.2));  // +- 0.05 absolute
}

TEST_CASE("model 1 cluster shock correlates sub-clusters at the same draw") {
  Model1Config cfg;
  cfg.r = 1;
  cfg.q_k = 2;
  cfg.n_j = 100000;
  cfg.rho = 0.5;
  const Dataset ds = gen_model1(cfg, 500);
  const ClusterLayout layout = build_layout(ds);
  std::vector<double> s1, s2;
  for (int t = 0; t < cfg.n_j; ++t) {
    s1.push_back(ds.y[layout.members[0][t]] - cfg.beta);
    s2.push_back(ds.y[layout.members[1][t]] - cfg.beta);
  }
  CHECK(cov_of(s1, s2) == doctest::Approx(0.25).epsilon(0.12));
}

TEST_CASE("model 1 clusters are independent") {
  Model1Config cfg;
  cfg.r = 2;
  cfg.q_k = 1;
  cfg.n_j = 50000;
  cfg.rho = 0.5;
  const Dataset ds = gen_model1(cfg, 501);
  const ClusterLayout layout = build_layout(ds);
  std::vector<double> s1, s2;
  for (int t = 0; t < cfg.n_j; ++t) {
    s1.push_back(ds.y[layout.members[0][t]]);
    s2.push_back(ds.y[layout.members[1][t]]);
  }
  CHECK(std::abs(cov_of(s1, s2)) < 0.03);
}

TEST_CASE("model 1 sigma overrides scale the targeted groups exactly") {
  Model1Config base;
  base.r = 2;
  base.q_k = 2;
  base.n_j = 50;
  base.rho = 0.5;
  Model1Config noisy = base;
  noisy.sigma.cluster_scale[1] = 10.0;

  const Dataset a = gen_model1(base, 77);
  const Dataset b = gen_model1(noisy, 77);  // same seed, same draws
  const ClusterLayout layout = build_layout(a);
  for (int j = 0; j < layout.q; ++j) {
    const bool in_cluster1 = layout.cluster_of[j] == 0;
    for (int i : layout.members[j]) {
      const double ea = a.y[i] - base.beta;
      const double eb = b.y[i] - base.beta;
      if (in_cluster1) {
        CHECK(eb == doctest::Approx(10.0 * ea).epsilon(1e-12));
      } else {
        CHECK(eb == ea);
      }
    }
  }

  Model1Config sub = base;
  sub.sigma.subcluster_scale[1] = 5.0;
  const Dataset c = gen_model1(sub, 77);
  for (int j = 0; j < layout.q; ++j) {
    // first sub-cluster within each cluster carries the override
    const bool first = (j == layout.cluster_begin[layout.cluster_of[j]]);
    for (int i : layout.members[j]) {
      const double ea = a.y[i] - base.beta;
      const double ec = c.y[i] - base.beta;
      if (first) {
        CHECK(ec == doctest::Approx(5.0 * ea).epsilon(1e-12));
      } else {
        CHECK(ec == ea);
      }
    }
  }
}

TEST_CASE("model 1 configuration validation") {
  Model1Config cfg;
  SUBCASE("negative rho") {
    cfg.rho = -0.1;
    CHECK_THROWS_AS(gen_model1(cfg, 1), ConfigError);
  }
  SUBCASE("phi out of range") {
    cfg.phi = 1.0;
    CHECK_THROWS_AS(gen_model1(cfg, 1), ConfigError);
  }
  SUBCASE("zero sigma") {
    cfg.sigma.base = 0.0;
    CHECK_THROWS_AS(gen_model1(cfg, 1), ConfigError);
  }
}

TEST_CASE("model 2 factor block indexing") {
  CHECK(model2_factor_block(0, 50) == 0);   // first row loads factor 1
  CHECK(model2_factor_block(4, 50) == 0);
  CHECK(model2_factor_block(5, 50) == 1);
  CHECK(model2_factor_block(49, 50) == 9);  // last row loads factor 10
  CHECK(model2_factor_block(99999, 100000) == 9);
}

TEST_CASE("model 2 marginal variances are one for any rho") {
  // many small independent clusters so the factor draws average out; a
  // single big cluster re-uses only 10 factor values and its sample variance
  // would be dominated by them
  for (double rho : {0.0, 0.5, 1.0}) {
    Model2Config cfg;
    cfg.r = 10000;
    cfg.q_k = 1;
    cfg.n_j = 10;
    cfg.rho = rho;
    const Dataset ds = gen_model2(cfg, 123 + static_cast<int>(10 * rho));
    std::vector<double> u(ds.n()), x1(ds.n());
    for (long i = 0; i < ds.n(); ++i) {
      u[i] = ds.y[i] - ds.x[i] - ds.w(i, 0);  // beta = (1,1)
      x1[i] = ds.x[i];
    }
    CHECK(var_of(u) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(var_of(x1) == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("model 2 factor structure induces block correlation") {
  // average raw products over many independent clusters; both series are
  // mean zero by construction, so no demeaning is needed (a within-cluster
  // demeaned estimate would be dominated by the 10 realized factor values)
  Model2Config cfg;
  cfg.r = 400;
  cfg.q_k = 1;  // a single sub-cluster keeps the block order intact
  cfg.n_j = 100;
  cfg.rho = 0.5;
  const Dataset ds = gen_model2(cfg, 321);
  const ClusterLayout layout = build_layout(ds);
  const long m = cfg.n_j;  // rows per cluster
  const long block = m / 10;

  double same = 0.0, apart = 0.0;
  long n_same = 0, n_apart = 0;
  for (int j = 0; j < layout.q; ++j) {
    std::vector<double> u;
    for (int i : layout.members[j]) u.push_back(ds.y[i] - ds.x[i] - ds.w(i, 0));
    for (long t = 0; t + 1 < m; ++t) {
      if (model2_factor_block(t, m) == model2_factor_block(t + 1, m)) {
        same += u[t] * u[t + 1];
        ++n_same;
      }
    }
    for (long t = 0; t + block < m; ++t) {
      apart += u[t] * u[t + block];
      ++n_apart;
    }
  }
  // same block: rho^2; one block apart: rho^2 * phi
  CHECK(same / n_same == doctest::Approx(0.25).epsilon(0.15));
  CHECK(apart / n_apart == doctest::Approx(0.25 * 0.5).epsilon(0.3));
}

TEST_CASE("model 2 with rho = 0 has no cross-row correlation") {
  Model2Config cfg;
  cfg.r = 1;
  cfg.q_k = 1;
  cfg.n_j = 100000;
  cfg.rho = 0.0;
  const Dataset ds = gen_model2(cfg, 322);
  std::vector<double> u(ds.n());
  for (long i = 0; i < ds.n(); ++i) u[i] = ds.y[i] - ds.x[i] - ds.w(i, 0);
  std::vector<double> a(u.begin(), u.end() - 1), b(u.begin() + 1, u.end());
  CHECK(std::abs(cov_of(a, b)) < 0.02);
}

TEST_CASE("model 2 deals factor blocks evenly across sub-clusters") {
  Model2Config cfg;
  cfg.r = 1;
  cfg.q_k = 12;
  cfg.n_j = 100;  // m = 1200, block = 120, 10 rows per block per sub-cluster
  cfg.rho = 1.0;  // u is purely the factor value -> recover block ids
  const Dataset ds = gen_model2(cfg, 323);
  const ClusterLayout layout = build_layout(ds);
  REQUIRE(layout.q == 12);
  for (int j = 0; j < layout.q; ++j) {
    REQUIRE(layout.n_j[j] == 100);
    // u values within a sub-cluster must take 10 distinct factor values,
    // each exactly 10 times
    std::vector<double> u;
    for (int i : layout.members[j]) {
      u.push_back(ds.y[i] - ds.x[i] - ds.w(i, 0));
    }
    std::sort(u.begin(), u.end());
    int distinct = 1;
    for (std::size_t t = 1; t < u.size(); ++t) {
      if (u[t] != u[t - 1]) ++distinct;
    }
    CHECK(distinct == 10);
  }
}

TEST_CASE("model 2 configuration validation") {
  Model2Config cfg;
  SUBCASE("rho above one") {
    cfg.rho = 1.2;
    CHECK_THROWS_AS(gen_model2(cfg, 1), ConfigError);
  }
  SUBCASE("cluster too small for factor blocks") {
    cfg.q_k = 1;
    cfg.n_j = 9;
    CHECK_THROWS_AS(gen_model2(cfg, 1), ConfigError);
  }
}

TEST_CASE("appendix design layout and independence") {
  const Dataset ds = gen_appendix_b(11);
  const ClusterLayout layout = build_layout(ds);
  CHECK(layout.r == 4);
  CHECK(layout.q == 48);
  CHECK(layout.n == 4800);

  // mean of two fixed sub-clusters across replications: uncorrelated
  std::vector<double> m1, m2;
  for (int rep = 0; rep < 2000; ++rep) {
    const Dataset d = gen_appendix_b(1000 + rep);
    double a = 0, b = 0;
    for (int i : layout.members[0]) a += d.y[i];
    for (int i : layout.members[1]) b += d.y[i];
    m1.push_back(a / 100.0);
    m2.push_back(b / 100.0);
  }
  const double corr = cov_of(m1, m2) / std::sqrt(var_of(m1) * var_of(m2));
  CHECK(std::abs(corr) < 0.08);
}

TEST_CASE("appendix design with phi = 0 is iid unit variance") {
  const Dataset ds = gen_appendix_b(12, 0.0);
  std::vector<double> e(ds.n());
  for (long i = 0; i < ds.n(); ++i) e[i] = ds.y[i] - 1.0;
  CHECK(var_of(e) == doctest::Approx(1.0).epsilon(0.07));
  CHECK(std::abs(mean_of(e)) < 0.05);
}

TEST_CASE("generators are deterministic in the seed") {
  Model1Config cfg;
  cfg.r = 2;
  cfg.q_k = 2;
  cfg.n_j = 30;
  cfg.rho = 0.3;
  const Dataset a = gen_model1(cfg, 5);
  const Dataset b = gen_model1(cfg, 5);
  const Dataset c = gen_model1(cfg, 6);
  CHECK((a.y.array() == b.y.array()).all());
  CHECK_FALSE((a.y.array() == c.y.array()).all());

  Model2Config cfg2;
  cfg2.rho = 0.5;
  const Dataset d = gen_model2(cfg2, 5);
  const Dataset e = gen_model2(cfg2, 5);
  CHECK((d.y.array() == e.y.array()).all());
}

TEST_CASE("model 1 labels sort in generation order") {
  Model1Config cfg;
  cfg.r = 12;
  cfg.q_k = 12;
  cfg.n_j = 1;
  const Dataset ds = gen_model1(cfg, 8);
  const ClusterLayout layout = build_layout(ds);
  CHECK(layout.cluster_labels.front() == "K01");
  CHECK(layout.cluster_labels.back() == "K12");
  CHECK(layout.subcluster_labels.front() == "K01-J01");
  // sorted order must equal numeric order thanks to zero padding
  for (int k = 0; k + 1 < layout.r; ++k) {
    CHECK(layout.cluster_labels[k] < layout.cluster_labels[k + 1]);
  }
}
