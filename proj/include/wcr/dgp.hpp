#pragma once

#include <cstdint>
#include <map>

#include "wcr/dataset.hpp"

namespace wcr {

// Positive noise scales sigma_{j,k}. Cluster overrides apply to every
// sub-cluster of that cluster ("all sub-clusters of cluster 1 are noisy");
// sub-cluster overrides apply to the same within-cluster position in every
// cluster ("the first sub-cluster of each cluster is noisy"). Indices are
// 1-based to match the usual reporting convention.
struct SigmaSpec {
  double base = 1.0;
  std::map<int, double> cluster_scale;
  std::map<int, double> subcluster_scale;

  double at(int cluster_1based, int subcluster_1based) const {
    double s = base;
    if (auto it = cluster_scale.find(cluster_1based); it != cluster_scale.end())
      s *= it->second;
    if (auto it = subcluster_scale.find(subcluster_1based);
        it != subcluster_scale.end())
      s *= it->second;
    return s;
  }
};

// y = beta + sigma_{j,k} * (rho * V_{t,k} + s * U_{t,j,k}) with x = 1 and no
// controls. V_{t,k} is shared by every sub-cluster of cluster k at the same
// within-sub-cluster position t, which is what correlates sub-clusters under
// rho > 0. U is AR(1) with unit innovations and stationary start
// U_1 ~ N(0, 1/(1-phi^2)). The displayed scale is s = 1/sqrt(1-phi^2);
// `unit_variance_normalization` multiplies it by (1-phi^2) so the
// sub-cluster term has exactly unit variance.
struct Model1Config {
  int r = 4;
  int q_k = 4;
  int n_j = 25;
  double rho = 0.0;
  double phi = 0.25;
  double beta = 1.0;
  SigmaSpec sigma;
  bool unit_variance_normalization = false;
};

// Ten-factor block loading design. Per cluster of m = q_k * n_j rows:
//   u = rho * W xi + sqrt(1 - rho^2) * eps
// with xi an AR(1) factor vector of unit stationary variance and W loading
// row i on factor floor(i*10/m) (0-based). The two covariates are
// independent copies of the same construction; y = x1 + x2 + u (beta =
// (1,1), no constant). Rows are laid out block by block and dealt
// round-robin into sub-clusters so each sub-cluster holds an equal share of
// every factor block whenever n_j is a multiple of 10.
struct Model2Config {
  int r = 4;
  int q_k = 4;
  int n_j = 25;
  double rho = 0.0;
  double phi = 0.5;
  double beta1 = 1.0;
  double beta2 = 1.0;
};

Dataset gen_model1(const Model1Config& cfg, std::uint64_t seed);
Dataset gen_model2(const Model2Config& cfg, std::uint64_t seed);

// Fixed design with 4 clusters x 12 sub-clusters x 100 rows,
// y = 1 + (1/sqrt(1-phi^2)) * U, U AR(1) started at U_1 ~ N(0,1).
// Sub-clusters are mutually independent: a null design for the clustering
// tests and the playground for the beta-inference comparisons.
Dataset gen_appendix_b(std::uint64_t seed, double phi = 0.25);

// 0-based factor block of row i within a cluster of m rows.
inline int model2_factor_block(long i, long m) {
  return static_cast<int>((i * 10) / m);
}

}  // namespace wcr
