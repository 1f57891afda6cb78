#include "wcr/dgp.hpp"

#include <algorithm>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "wcr/errors.hpp"
#include "wcr/rng.hpp"

namespace wcr {

namespace {

std::string padded_label(char prefix, int index_1based, int count) {
  int width = 2;
  for (int v = count; v >= 100; v /= 10) ++width;
  width = std::min(width, 10);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, index_1based);
  return buf;
}

std::string subcluster_label(const std::string& cluster, int j_1based,
                             int count) {
  return cluster + "-" + padded_label('J', j_1based, count);
}

void check_counts(int r, int q_k, int n_j) {
  if (r < 1 || q_k < 1 || n_j < 1) {
    throw ConfigError("r, q_k and n_j must all be at least 1");
  }
}

// Stationary AR(1) path with unit innovation variance.
void ar1_path(Prng& rng, double phi, std::vector<double>& u) {
  u[0] = rng.gauss() / std::sqrt(1.0 - phi * phi);
  for (std::size_t t = 1; t < u.size(); ++t) {
    u[t] = phi * u[t - 1] + rng.gauss();
  }
}

}  // namespace

Dataset gen_model1(const Model1Config& cfg, std::uint64_t seed) {
  check_counts(cfg.r, cfg.q_k, cfg.n_j);
  if (cfg.rho < 0) throw ConfigError("model 1 requires rho >= 0");
  if (!(std::abs(cfg.phi) < 1)) throw ConfigError("model 1 requires |phi| < 1");
  for (int k = 1; k <= cfg.r; ++k) {
    for (int j = 1; j <= cfg.q_k; ++j) {
      if (!(cfg.sigma.at(k, j) > 0)) {
        throw ConfigError("sigma scales must be positive");
      }
    }
  }

  const long n = static_cast<long>(cfg.r) * cfg.q_k * cfg.n_j;
  Dataset ds;
  ds.y.resize(n);
  ds.x.resize(n);
  ds.w.resize(n, 0);
  ds.cluster_id.resize(n);
  ds.subcluster_id.resize(n);

  double scale = 1.0 / std::sqrt(1.0 - cfg.phi * cfg.phi);
  if (cfg.unit_variance_normalization) scale *= (1.0 - cfg.phi * cfg.phi);

  Prng rng(seed);
  std::vector<double> v(cfg.n_j), u(cfg.n_j);
  long row = 0;
  for (int k = 1; k <= cfg.r; ++k) {
    const std::string k_label = padded_label('K', k, cfg.r);
    for (int t = 0; t < cfg.n_j; ++t) v[t] = rng.gauss();
    for (int j = 1; j <= cfg.q_k; ++j) {
      const std::string j_label = subcluster_label(k_label, j, cfg.q_k);
      const double sigma = cfg.sigma.at(k, j);
      ar1_path(rng, cfg.phi, u);
      for (int t = 0; t < cfg.n_j; ++t, ++row) {
        ds.x[row] = 1.0;
        ds.y[row] = cfg.beta + sigma * (cfg.rho * v[t] + scale * u[t]);
        ds.cluster_id[row] = k_label;
        ds.subcluster_id[row] = j_label;
      }
    }
  }
  return ds;
}

Dataset gen_model2(const Model2Config& cfg, std::uint64_t seed) {
  check_counts(cfg.r, cfg.q_k, cfg.n_j);
  if (cfg.rho < 0 || cfg.rho > 1) {
    throw ConfigError("model 2 requires rho in [0, 1]");
  }
  if (!(std::abs(cfg.phi) < 1)) throw ConfigError("model 2 requires |phi| < 1");
  const long m = static_cast<long>(cfg.q_k) * cfg.n_j;
  if (m < 10) {
    throw ConfigError(
        "model 2 needs at least 10 observations per cluster (factor blocks "
        "would be empty)");
  }

  const long n = static_cast<long>(cfg.r) * m;
  Dataset ds;
  ds.y.resize(n);
  ds.x.resize(n);
  ds.w.resize(n, 1);
  ds.cluster_id.resize(n);
  ds.subcluster_id.resize(n);

  Prng rng(seed);
  const double load = cfg.rho;
  const double noise = std::sqrt(1.0 - cfg.rho * cfg.rho);

  // One factor-structured m-vector: rho * W xi + sqrt(1-rho^2) eps.
  auto draw_component = [&](std::vector<double>& out) {
    double xi[10];
    xi[0] = rng.gauss();
    for (int l = 1; l < 10; ++l) {
      xi[l] = cfg.phi * xi[l - 1] +
              std::sqrt(1.0 - cfg.phi * cfg.phi) * rng.gauss();
    }
    for (long i = 0; i < m; ++i) {
      out[i] = load * xi[model2_factor_block(i, m)] + noise * rng.gauss();
    }
  };

  std::vector<double> u(m), x1(m), x2(m);
  long row_base = 0;
  for (int k = 1; k <= cfg.r; ++k) {
    const std::string k_label = padded_label('K', k, cfg.r);
    draw_component(u);
    draw_component(x1);
    draw_component(x2);

    // Deal block-ordered rows round-robin into sub-clusters.
    std::vector<long> count(cfg.q_k, 0);
    std::vector<long> offset(cfg.q_k, 0);
    for (long i = 0; i < m; ++i) ++count[i % cfg.q_k];
    for (int j = 1; j < cfg.q_k; ++j) offset[j] = offset[j - 1] + count[j - 1];

    std::vector<long> cursor = offset;
    for (long i = 0; i < m; ++i) {
      const int j = static_cast<int>(i % cfg.q_k);
      const long row = row_base + cursor[j]++;
      ds.x[row] = x1[i];
      ds.w(row, 0) = x2[i];
      ds.y[row] = cfg.beta1 * x1[i] + cfg.beta2 * x2[i] + u[i];
      ds.cluster_id[row] = k_label;
      ds.subcluster_id[row] = subcluster_label(k_label, j + 1, cfg.q_k);
    }
    row_base += m;
  }
  return ds;
}

Dataset gen_appendix_b(std::uint64_t seed, double phi) {
  if (!(std::abs(phi) < 1)) throw ConfigError("|phi| < 1 required");
  constexpr int r = 4, q_k = 12, n_j = 100;
  const long n = static_cast<long>(r) * q_k * n_j;

  Dataset ds;
  ds.y.resize(n);
  ds.x.resize(n);
  ds.w.resize(n, 0);
  ds.cluster_id.resize(n);
  ds.subcluster_id.resize(n);

  const double scale = 1.0 / std::sqrt(1.0 - phi * phi);
  Prng rng(seed);
  long row = 0;
  for (int k = 1; k <= r; ++k) {
    const std::string k_label = padded_label('K', k, r);
    for (int j = 1; j <= q_k; ++j) {
      const std::string j_label = subcluster_label(k_label, j, q_k);
      double u = rng.gauss();  // U_1 ~ N(0,1), as stated for this design
      for (int t = 0; t < n_j; ++t, ++row) {
        if (t > 0) u = phi * u + rng.gauss();
        ds.x[row] = 1.0;
        ds.y[row] = 1.0 + scale * u;
        ds.cluster_id[row] = k_label;
        ds.subcluster_id[row] = j_label;
      }
    }
  }
  return ds;
}

}  // namespace wcr
