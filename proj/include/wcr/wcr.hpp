#pragma once

#include <cstdint>
#include <vector>

#include "wcr/dataset.hpp"
#include "wcr/randomization.hpp"
#include "wcr/regression.hpp"

namespace wcr {

// R_j = numerator_j / denominator_j per sub-cluster (layout order). A
// structurally zero denominator is carried as an explicit flag rather than
// encoded as R_j = 0: a genuine zero ratio is a valid cutoff value, a
// structural zero is not.
struct RatioSet {
  std::vector<double> ratios;  // 0.0 at zero-set entries
  std::vector<bool> zero;      // layout order
  std::vector<int> zero_set;   // sorted indices with zero denominator
};

// Per-cluster upper/lower medians aggregated over clusters:
//   r_plus  = max_k (smallest value >= a strict majority of cluster k's R's)
//   r_minus = min_k (largest value <= a strict majority of cluster k's R's)
// Only cutoffs with values inside [r_minus, r_plus] can attain the sup.
struct ConservativeMedians {
  double r_plus = 0.0;
  double r_minus = 0.0;
};

// Cutoff position m over the descending-R order: the m largest ratios get
// +1, the rest -1, zero-set entries 0. Signs are reported in layout order.
struct CutoffCandidate {
  int cutoff = 0;
  SignVector signs;
};

struct CutoffPValue {
  int cutoff = 0;
  SignVector signs;
  double p_value = 0.0;
};

struct WcrResult {
  double p_value = 1.0;  // sup over candidate cutoffs
  bool reject = false;   // p_value <= alpha
  double alpha = 0.05;
  double statistic = 0.0;  // T at the worst-case candidate
  int worst_cutoff = 0;
  std::vector<CutoffPValue> per_cutoff;
  std::vector<double> ratios;
  std::vector<int> zero_set;
  double r_plus = 0.0;
  double r_minus = 0.0;
  GroupMode group_mode = GroupMode::full;
  std::size_t group_size = 0;
  std::uint64_t seed = 0;
};

enum class GroupPolicy { automatic, force_full };

// Throws DegenerateDataError when every sub-cluster is in the zero set.
RatioSet compute_ratios(const SubclusterScores& scores);

ConservativeMedians conservative_medians(const RatioSet& ratios,
                                         const ClusterLayout& layout);

// One candidate per distinct-value cutoff whose value lies in
// [r_minus, r_plus]; ties are never split (a single shift cannot separate
// equal ratios). The all-negative configuration is not emitted: it has the
// same p-value as the all-positive cutoff under every flip set.
std::vector<CutoffCandidate> candidate_sign_vectors(
    const RatioSet& ratios, const ConservativeMedians& medians,
    const ClusterLayout& layout);

// Worst-case randomization test. One sign group is shared across all
// candidates so the sup is well defined under stochastic approximation. The
// shift = 0 sign pattern is always among the evaluated cutoffs, which makes
// p(wcr) >= p(naive) hold exactly in both group modes; under full
// enumeration the median pruning already implies it.
WcrResult wcr_test(const Dataset& ds, double alpha, int b, std::uint64_t seed,
                   GroupPolicy policy = GroupPolicy::automatic);

// Brute-force search over an explicit shift grid: all midpoints between
// consecutive distinct -R values plus endpoints at +/- max|R| * grid_padding,
// with signs recomputed numerically from numerator + shift * denominator.
// Uses the same sign group construction as wcr_test so the two agree exactly
// under full enumeration.
double sup_pvalue_oracle(const Dataset& ds, double alpha, int b,
                         std::uint64_t seed, double grid_padding = 10.0,
                         GroupPolicy policy = GroupPolicy::automatic);

}  // namespace wcr
