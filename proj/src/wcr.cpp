#include "wcr/wcr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>

#include "wcr/errors.hpp"

namespace wcr {

namespace {

// ||x - w'pi|| below this fraction of ||x|| counts as a structural zero.
constexpr double kZeroRel = 1e-10;

struct SortedRatios {
  std::vector<int> order;       // non-zero sub-clusters, descending ratio
  std::vector<int> boundaries;  // tie-group end positions b_1 < ... < b_D
};

SortedRatios sort_ratios(const RatioSet& rs) {
  SortedRatios sr;
  for (int j = 0; j < static_cast<int>(rs.ratios.size()); ++j) {
    if (!rs.zero[j]) sr.order.push_back(j);
  }
  std::sort(sr.order.begin(), sr.order.end(), [&](int a, int b) {
    if (rs.ratios[a] != rs.ratios[b]) return rs.ratios[a] > rs.ratios[b];
    return a < b;
  });
  const int qt = static_cast<int>(sr.order.size());
  for (int m = 1; m <= qt; ++m) {
    if (m == qt || rs.ratios[sr.order[m - 1]] != rs.ratios[sr.order[m]]) {
      sr.boundaries.push_back(m);
    }
  }
  return sr;
}

SignVector cutoff_signs(const RatioSet& rs, const std::vector<int>& order,
                        int cutoff, int q) {
  SignVector s;
  s.signs.assign(q, 0);
  for (int m = 0; m < static_cast<int>(order.size()); ++m) {
    s.signs[order[m]] = (m < cutoff) ? std::int8_t{1} : std::int8_t{-1};
  }
  return s;
}

// For every cutoff position m in {0..q~}, count flips whose statistic is at
// least the observed one. A cutoff step flips a single sub-cluster from -1
// to +1, so each flip row is swept in O(q~ + r).
void cutoff_sweep(const ClusterLayout& layout, const std::vector<int>& order,
                  const SignGroup& group, std::vector<long long>& observed,
                  std::vector<std::size_t>& at_least) {
  const int qt = static_cast<int>(order.size());
  observed.assign(qt + 1, 0);
  at_least.assign(qt + 1, 0);
  std::vector<long long> cluster_sum(layout.r);

  auto sweep = [&](const std::int8_t* flip, auto&& per_cutoff) {
    std::fill(cluster_sum.begin(), cluster_sum.end(), 0);
    for (int j : order) cluster_sum[layout.cluster_of[j]] -= flip[j];
    long long total = 0;
    for (int k = 0; k < layout.r; ++k) total += std::llabs(cluster_sum[k]);
    per_cutoff(0, total);
    for (int m = 1; m <= qt; ++m) {
      const int j = order[m - 1];
      const int k = layout.cluster_of[j];
      total -= std::llabs(cluster_sum[k]);
      cluster_sum[k] += 2 * flip[j];
      total += std::llabs(cluster_sum[k]);
      per_cutoff(m, total);
    }
  };

  std::vector<std::int8_t> identity(layout.q, 1);
  sweep(identity.data(), [&](int m, long long t) { observed[m] = t; });
  for (std::size_t i = 0; i < group.count; ++i) {
    sweep(group.row(i), [&](int m, long long t) {
      if (t >= observed[m]) ++at_least[m];
    });
  }
}

SignGroup build_group(int q, int b, std::uint64_t seed, GroupPolicy policy) {
  if (policy == GroupPolicy::force_full) return make_full_sign_group(q);
  return make_sign_group(q, b, seed);
}

struct Pipeline {
  ClusterLayout layout;
  SubclusterScores scores;
  RatioSet ratios;
};

Pipeline run_pipeline(const Dataset& ds) {
  Pipeline p;
  p.layout = build_layout(ds);
  if (p.layout.q < 2) {
    throw DegenerateDataError(
        "level-of-clustering tests need at least two sub-clusters");
  }
  const RegressionFit fit = ols_fit(ds);
  const PiEstimates pi = estimate_pi(ds, p.layout);
  p.scores = compute_score_components(ds, p.layout, fit, pi);
  p.ratios = compute_ratios(p.scores);
  return p;
}

}  // namespace

RatioSet compute_ratios(const SubclusterScores& scores) {
  const int q = static_cast<int>(scores.numerator.size());
  RatioSet rs;
  rs.ratios.assign(q, 0.0);
  rs.zero.assign(q, false);
  for (int j = 0; j < q; ++j) {
    if (scores.denominator[j] <= kZeroRel * kZeroRel * scores.x_sq_sum[j]) {
      rs.zero[j] = true;
      rs.zero_set.push_back(j);
    } else {
      rs.ratios[j] = scores.numerator[j] / scores.denominator[j];
    }
  }
  if (static_cast<int>(rs.zero_set.size()) == q) {
    throw DegenerateDataError(
        "every sub-cluster has a structurally zero score denominator; the "
        "data carry no signal for the test");
  }
  return rs;
}

ConservativeMedians conservative_medians(const RatioSet& rs,
                                         const ClusterLayout& layout) {
  ConservativeMedians med;
  bool any = false;
  for (int k = 0; k < layout.r; ++k) {
    auto [lo, hi] = layout.subcluster_range(k);
    std::vector<double> vals;
    for (int j = lo; j < hi; ++j) {
      if (!rs.zero[j]) vals.push_back(rs.ratios[j]);
    }
    if (vals.empty()) continue;  // cluster contributes no cutoff values
    std::sort(vals.begin(), vals.end());
    const int m = static_cast<int>(vals.size());
    double upper = vals.back();
    for (int i = 0; i < m; ++i) {
      // elements <= vals[i]
      const int le = static_cast<int>(
          std::upper_bound(vals.begin(), vals.end(), vals[i]) - vals.begin());
      if (2 * le > m) {
        upper = vals[i];
        break;
      }
    }
    double lower = vals.front();
    for (int i = m - 1; i >= 0; --i) {
      // elements >= vals[i]
      const int ge = m - static_cast<int>(std::lower_bound(vals.begin(),
                                                           vals.end(),
                                                           vals[i]) -
                                          vals.begin());
      if (2 * ge > m) {
        lower = vals[i];
        break;
      }
    }
    if (!any) {
      med.r_plus = upper;
      med.r_minus = lower;
      any = true;
    } else {
      med.r_plus = std::max(med.r_plus, upper);
      med.r_minus = std::min(med.r_minus, lower);
    }
  }
  if (!any) {
    throw DegenerateDataError("no sub-cluster with a usable score ratio");
  }
  return med;
}

std::vector<CutoffCandidate> candidate_sign_vectors(
    const RatioSet& rs, const ConservativeMedians& med,
    const ClusterLayout& layout) {
  const SortedRatios sr = sort_ratios(rs);
  std::vector<CutoffCandidate> out;
  for (int m : sr.boundaries) {
    const double v = rs.ratios[sr.order[m - 1]];
    if (v < med.r_minus || v > med.r_plus) continue;
    out.push_back({m, cutoff_signs(rs, sr.order, m, layout.q)});
  }
  return out;
}

WcrResult wcr_test(const Dataset& ds, double alpha, int b, std::uint64_t seed,
                   GroupPolicy policy) {
  const Pipeline p = run_pipeline(ds);
  const ConservativeMedians med = conservative_medians(p.ratios, p.layout);
  std::vector<CutoffCandidate> cands =
      candidate_sign_vectors(p.ratios, med, p.layout);

  const SortedRatios sr = sort_ratios(p.ratios);
  const int qt = static_cast<int>(sr.order.size());

  // The shift = 0 pattern (signs of the raw numerators). All-negative maps
  // to the equivalent all-positive cutoff.
  int m0 = 0;
  for (int j : sr.order) {
    if (p.ratios.ratios[j] >= 0.0) ++m0;
  }
  if (m0 == 0) m0 = qt;
  if (std::none_of(cands.begin(), cands.end(),
                   [&](const CutoffCandidate& c) { return c.cutoff == m0; })) {
    cands.push_back({m0, cutoff_signs(p.ratios, sr.order, m0, p.layout.q)});
    std::sort(cands.begin(), cands.end(),
              [](const CutoffCandidate& a, const CutoffCandidate& b) {
                return a.cutoff < b.cutoff;
              });
  }

  const SignGroup group = build_group(p.layout.q, b, seed, policy);
  std::vector<long long> observed;
  std::vector<std::size_t> at_least;
  cutoff_sweep(p.layout, sr.order, group, observed, at_least);

  WcrResult res;
  res.alpha = alpha;
  res.seed = seed;
  res.group_mode = group.mode;
  res.group_size = group.count;
  res.ratios = p.ratios.ratios;
  res.zero_set = p.ratios.zero_set;
  res.r_plus = med.r_plus;
  res.r_minus = med.r_minus;

  res.p_value = 0.0;
  for (auto& c : cands) {
    const double pv = static_cast<double>(at_least[c.cutoff]) /
                      static_cast<double>(group.count);
    res.per_cutoff.push_back({c.cutoff, std::move(c.signs), pv});
    if (pv > res.p_value) {
      res.p_value = pv;
      res.worst_cutoff = c.cutoff;
      res.statistic =
          static_cast<double>(observed[c.cutoff]) / p.layout.r;
    }
  }
  res.reject = (res.p_value <= alpha);
  return res;
}

double sup_pvalue_oracle(const Dataset& ds, double alpha, int b,
                         std::uint64_t seed, double grid_padding,
                         GroupPolicy policy) {
  (void)alpha;
  const Pipeline p = run_pipeline(ds);

  std::vector<double> neg_ratio;
  double max_abs = 0.0;
  for (int j = 0; j < p.layout.q; ++j) {
    if (p.ratios.zero[j]) continue;
    neg_ratio.push_back(-p.ratios.ratios[j]);
    max_abs = std::max(max_abs, std::abs(p.ratios.ratios[j]));
  }
  std::sort(neg_ratio.begin(), neg_ratio.end());
  neg_ratio.erase(std::unique(neg_ratio.begin(), neg_ratio.end()),
                  neg_ratio.end());

  std::vector<double> grid;
  for (std::size_t i = 0; i + 1 < neg_ratio.size(); ++i) {
    grid.push_back(0.5 * (neg_ratio[i] + neg_ratio[i + 1]));
  }
  grid.push_back(-max_abs * grid_padding);
  grid.push_back(max_abs * grid_padding);

  const SignGroup group = build_group(p.layout.q, b, seed, policy);
  double sup = 0.0;
  for (double lam : grid) {
    SignVector s;
    s.signs.assign(p.layout.q, 0);
    for (int j = 0; j < p.layout.q; ++j) {
      if (p.ratios.zero[j]) continue;
      const double shifted =
          p.scores.numerator[j] + lam * p.scores.denominator[j];
      s.signs[j] = (shifted >= 0.0) ? std::int8_t{1} : std::int8_t{-1};
    }
    sup = std::max(sup, randomization_pvalue(s, p.layout, group));
  }
  return sup;
}

}  // namespace wcr
