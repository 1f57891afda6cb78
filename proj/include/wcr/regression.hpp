#pragma once

#include <Eigen/Core>
#include <vector>

#include "wcr/dataset.hpp"

namespace wcr {

// Full-sample OLS of y on [x | w]. Column 0 of every design-sized object is
// the regressor of interest.
struct RegressionFit {
  double beta_hat = 0.0;
  Eigen::VectorXd gamma_hat;    // length d
  Eigen::VectorXd residuals;    // length n
  Eigen::MatrixXd xtx_inverse;  // (d+1) x (d+1)
};

enum class PiMode { per_subcluster, pooled };

// Projection coefficients of x on the controls, one vector per sub-cluster
// (layout order). Rank-deficient control columns are dropped and their
// coefficients are exactly 0; `dropped_columns` records which.
struct PiEstimates {
  std::vector<Eigen::VectorXd> pi_hat;
  std::vector<std::vector<int>> dropped_columns;
  PiMode mode = PiMode::per_subcluster;  // effective mode actually used
};

// Per-sub-cluster score pieces, layout order:
//   numerator[j]   = sum_{i in j} (x_i - w_i'pi_j) * uhat_i
//   denominator[j] = sum_{i in j} (x_i - w_i'pi_j)^2
// The lambda-shifted score is (numerator + lambda * denominator) / sqrt(n_j);
// the sqrt(n_j) factor never changes a sign and is kept for reporting only.
struct SubclusterScores {
  std::vector<double> numerator;
  std::vector<double> denominator;
  std::vector<int> n_j;
  std::vector<double> x_sq_sum;  // sum of x_i^2 per sub-cluster, zero-detection scale
};

enum class Grouping { cluster, subcluster };

// Stacked design [x | w].
Eigen::MatrixXd build_design(const Dataset& ds);

// Least squares of b on a with rank-deficient columns dropped: pivoted QR
// picks a linearly independent column subset (relative pivot tolerance
// 1e-10), the reduced system is solved exactly, and dropped coefficients are
// 0. `dropped`, when given, receives the sorted original column indices.
Eigen::VectorXd rank_truncated_ls(const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& b,
                                  std::vector<int>* dropped = nullptr);

// Deterministic dense QR solve; throws SingularityError when [x | w] is rank
// deficient (relative pivot tolerance 1e-10).
RegressionFit ols_fit(const Dataset& ds);

// Within-sub-cluster least squares of x on w (or one pooled full-sample fit
// copied to every sub-cluster). Requesting per_subcluster falls back to
// pooled when some sub-cluster has fewer rows than controls.
PiEstimates estimate_pi(const Dataset& ds, const ClusterLayout& layout,
                        PiMode mode = PiMode::per_subcluster);

SubclusterScores compute_score_components(const Dataset& ds,
                                          const ClusterLayout& layout,
                                          const RegressionFit& fit,
                                          const PiEstimates& pi);

// (M'M)^-1 (sum_g M_g' u_g u_g' M_g) (M'M)^-1 over an arbitrary row
// partition. No small-sample correction factor.
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& design,
                         const Eigen::VectorXd& residuals,
                         const std::vector<std::vector<int>>& groups,
                         const Eigen::MatrixXd& xtx_inverse);

// Cluster-robust covariance of the full-sample fit at the chosen level.
Eigen::MatrixXd cce_sandwich(const Dataset& ds, const RegressionFit& fit,
                             Grouping grouping);

// Partialled-out estimate of the coefficient on x:
//   sum (x_i - w_i'pi)(y_i - w_i'pi_y) / sum (x_i - w_i'pi)^2
// with pooled pi from a projection of x (resp. y) on w. Deliberately avoids
// the ols_fit code path (own Householder QR) so the two can check each other.
double fwl_beta(const Dataset& ds);

}  // namespace wcr
