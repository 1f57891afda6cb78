#pragma once

#include <cstdint>
#include <vector>

#include "wcr/dataset.hpp"

namespace wcr {

// Ternary sign pattern, one entry per sub-cluster in layout order. An entry
// is 0 only for sub-clusters whose score denominator is structurally zero;
// such entries contribute nothing to the statistic and are unaffected by
// sign flips.
struct SignVector {
  std::vector<std::int8_t> signs;  // -1, 0, +1
};

// T = (1/r) sum_k | sum_{j in k} sign_j |, kept as an exact integer over r so
// that ties compare exactly.
struct TestStatistic {
  long long net_abs_sum = 0;  // sum_k | inner sum |
  int clusters = 1;           // r
  double value() const { return static_cast<double>(net_abs_sum) / clusters; }
};

enum class GroupMode { full, stochastic };

// The sign-change group, or a stochastic approximation of it. Full
// enumeration is used for q <= 10; above that, `count` = B draws with the
// identity flip first. Flip rows are stored flat, `count` x `q`.
struct SignGroup {
  GroupMode mode = GroupMode::full;
  int q = 0;
  std::size_t count = 0;
  std::vector<std::int8_t> flips;

  const std::int8_t* row(std::size_t i) const { return flips.data() + i * q; }
};

TestStatistic test_statistic_T(const SignVector& s, const ClusterLayout& layout);

// Full enumeration when q <= 10, otherwise B stochastic draws (identity
// first). Deterministic given the seed.
SignGroup make_sign_group(int q, int b, std::uint64_t seed);

// Always enumerates all 2^q flips; q <= 20 enforced. Used where the
// stochastic switch at q = 10 must be overridden.
SignGroup make_full_sign_group(int q);

// p = #{g : T(g*s) >= T(s)} / |group|, with g*0 = 0. Always in
// [1/|group|, 1] because the identity flip is a member in both modes.
double randomization_pvalue(const SignVector& s, const ClusterLayout& layout,
                            const SignGroup& group);

}  // namespace wcr
