#include "wcr/randomization.hpp"

#include <cstdlib>
#include <string>

#include "wcr/errors.hpp"
#include "wcr/rng.hpp"

namespace wcr {

namespace {
constexpr int kFullEnumerationMaxQ = 10;

long long net_abs_sum_for(const std::int8_t* flip, const SignVector& s,
                          const ClusterLayout& layout,
                          std::vector<int>& cluster_sum) {
  cluster_sum.assign(layout.r, 0);
  for (int j = 0; j < layout.q; ++j) {
    cluster_sum[layout.cluster_of[j]] += flip[j] * s.signs[j];
  }
  long long total = 0;
  for (int k = 0; k < layout.r; ++k) total += std::abs(cluster_sum[k]);
  return total;
}
}  // namespace

TestStatistic test_statistic_T(const SignVector& s,
                               const ClusterLayout& layout) {
  if (static_cast<int>(s.signs.size()) != layout.q) {
    throw ConfigError("sign vector length " + std::to_string(s.signs.size()) +
                      " does not match q = " + std::to_string(layout.q));
  }
  TestStatistic t;
  t.clusters = layout.r;
  std::vector<int> cluster_sum;
  std::vector<std::int8_t> identity(layout.q, 1);
  t.net_abs_sum = net_abs_sum_for(identity.data(), s, layout, cluster_sum);
  return t;
}

SignGroup make_full_sign_group(int q) {
  if (q < 1) throw ConfigError("sign group needs q >= 1");
  if (q > 20) {
    throw ConfigError("full enumeration of 2^" + std::to_string(q) +
                      " sign flips is not supported; use the stochastic mode");
  }
  SignGroup g;
  g.mode = GroupMode::full;
  g.q = q;
  g.count = std::size_t{1} << q;
  g.flips.resize(g.count * q);
  for (std::size_t mask = 0; mask < g.count; ++mask) {
    std::int8_t* row = g.flips.data() + mask * q;
    for (int j = 0; j < q; ++j) {
      row[j] = (mask >> j) & 1u ? std::int8_t{-1} : std::int8_t{1};
    }
  }
  return g;
}

SignGroup make_sign_group(int q, int b, std::uint64_t seed) {
  if (q < 1) throw ConfigError("sign group needs q >= 1");
  if (b < 1) throw ConfigError("sign group needs B >= 1");
  if (q <= kFullEnumerationMaxQ) return make_full_sign_group(q);

  SignGroup g;
  g.mode = GroupMode::stochastic;
  g.q = q;
  g.count = static_cast<std::size_t>(b);
  g.flips.resize(g.count * q);
  std::fill(g.flips.begin(), g.flips.begin() + q, std::int8_t{1});  // identity
  Prng rng(derive_seed(seed, stream::kSignGroup));
  for (std::size_t i = 1; i < g.count; ++i) {
    std::int8_t* row = g.flips.data() + i * q;
    for (int j = 0; j < q; ++j) row[j] = static_cast<std::int8_t>(rng.rademacher());
  }
  return g;
}

double randomization_pvalue(const SignVector& s, const ClusterLayout& layout,
                            const SignGroup& group) {
  if (group.q != layout.q || static_cast<int>(s.signs.size()) != layout.q) {
    throw ConfigError("sign group was built for a different q");
  }
  std::vector<int> cluster_sum;
  std::vector<std::int8_t> identity(layout.q, 1);
  const long long observed =
      net_abs_sum_for(identity.data(), s, layout, cluster_sum);
  std::size_t at_least = 0;
  for (std::size_t i = 0; i < group.count; ++i) {
    if (net_abs_sum_for(group.row(i), s, layout, cluster_sum) >= observed) {
      ++at_least;
    }
  }
  return static_cast<double>(at_least) / static_cast<double>(group.count);
}

}  // namespace wcr
