#include "wcr/competing.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>

#include "wcr/errors.hpp"
#include "wcr/randomization.hpp"
#include "wcr/rng.hpp"

namespace wcr {

namespace {

constexpr double kPivotTol = 1e-10;

double t_ratio(double num, double variance) {
  if (num == 0.0) return 0.0;
  if (variance <= 0.0) {
    return num > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  }
  return num / std::sqrt(variance);
}

struct GroupSplit {
  std::vector<std::vector<int>> rows;
  std::vector<std::string> labels;
};

GroupSplit groups_at(const ClusterLayout& layout, Grouping grouping) {
  GroupSplit gs;
  if (grouping == Grouping::subcluster) {
    gs.rows = layout.members;
    gs.labels = layout.subcluster_labels;
  } else {
    gs.rows = cluster_members(layout);
    gs.labels = layout.cluster_labels;
  }
  return gs;
}

// Sufficient statistics that make a wild bootstrap draw independent of n:
// everything needed per draw is linear or quadratic in the group blocks.
struct WildStats {
  int p = 0;
  Eigen::MatrixXd bread;                // (M'M)^-1
  std::vector<Eigen::VectorXd> fitted;  // M_g' fitted0_g
  std::vector<Eigen::VectorXd> score;   // M_g' u_g
  std::vector<Eigen::MatrixXd> gram;    // M_g' M_g
};

WildStats wild_stats(const Eigen::MatrixXd& design,
                     const Eigen::VectorXd& fitted0,
                     const Eigen::VectorXd& resid,
                     const std::vector<std::vector<int>>& groups,
                     const Eigen::MatrixXd& bread) {
  WildStats ws;
  ws.p = static_cast<int>(design.cols());
  ws.bread = bread;
  for (const auto& rows : groups) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(ws.p);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(ws.p);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(ws.p, ws.p);
    for (int i : rows) {
      const Eigen::VectorXd mi = design.row(i).transpose();
      f += mi * fitted0[i];
      a += mi * resid[i];
      c.noalias() += mi * mi.transpose();
    }
    ws.fitted.push_back(std::move(f));
    ws.score.push_back(std::move(a));
    ws.gram.push_back(std::move(c));
  }
  return ws;
}

double sandwich00(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& meat) {
  return (bread * meat * bread)(0, 0);
}

}  // namespace

TestResult nr_test(const Dataset& ds, double alpha, int b, std::uint64_t seed,
                   GroupPolicy policy) {
  const ClusterLayout layout = build_layout(ds);
  if (layout.q < 2) {
    throw DegenerateDataError(
        "level-of-clustering tests need at least two sub-clusters");
  }
  const RegressionFit fit = ols_fit(ds);
  const PiEstimates pi = estimate_pi(ds, layout);
  const SubclusterScores sc = compute_score_components(ds, layout, fit, pi);
  const RatioSet rs = compute_ratios(sc);

  SignVector s;
  s.signs.assign(layout.q, 0);
  for (int j = 0; j < layout.q; ++j) {
    if (rs.zero[j]) continue;
    s.signs[j] = (sc.numerator[j] >= 0.0) ? std::int8_t{1} : std::int8_t{-1};
  }
  const SignGroup group = (policy == GroupPolicy::force_full)
                              ? make_full_sign_group(layout.q)
                              : make_sign_group(layout.q, b, seed);

  TestResult res;
  res.method = "nr";
  res.alpha = alpha;
  res.seed = seed;
  res.draws = static_cast<int>(group.count);
  res.statistic = test_statistic_T(s, layout).value();
  res.p_value = randomization_pvalue(s, layout, group);
  res.reject = (res.p_value <= alpha);
  return res;
}

TestResult im_test(const Dataset& ds, double alpha, int draws,
                   std::uint64_t seed) {
  if (draws < 1) throw ConfigError("im test needs at least one reference draw");
  const ClusterLayout layout = build_layout(ds);
  if (layout.r < 2) {
    throw InfeasibleError("im test needs at least two clusters");
  }
  const int p = ds.d() + 1;

  std::vector<double> beta_k(layout.r), omega_k(layout.r);
  for (int k = 0; k < layout.r; ++k) {
    auto [lo, hi] = layout.subcluster_range(k);
    std::vector<int> rows;
    std::vector<std::vector<int>> local_groups;
    for (int j = lo; j < hi; ++j) {
      std::vector<int> local;
      for (int i : layout.members[j]) {
        local.push_back(static_cast<int>(rows.size()));
        rows.push_back(i);
      }
      local_groups.push_back(std::move(local));
    }
    Eigen::MatrixXd mk(rows.size(), p);
    Eigen::VectorXd yk(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      mk(t, 0) = ds.x[rows[t]];
      for (int c = 0; c < ds.d(); ++c) mk(t, c + 1) = ds.w(rows[t], c);
      yk[t] = ds.y[rows[t]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(mk);
    qr.setThreshold(kPivotTol);
    if (qr.rank() < p) {
      throw InfeasibleError(
          "im test is infeasible: the design within cluster '" +
          layout.cluster_labels[k] +
          "' is rank deficient, so beta cannot be estimated cluster by "
          "cluster");
    }
    const Eigen::VectorXd theta = qr.solve(yk);
    const Eigen::VectorXd resid = yk - mk * theta;
    Eigen::MatrixXd r =
        qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd xtx_inv = qr.colsPermutation() *
                                    (rinv * rinv.transpose()) *
                                    qr.colsPermutation().transpose();
    beta_k[k] = theta[0];
    omega_k[k] = sandwich(mk, resid, local_groups, xtx_inv)(0, 0);
  }

  double mean = 0.0;
  for (double bk : beta_k) mean += bk;
  mean /= layout.r;
  double v_hat = 0.0;
  for (double bk : beta_k) v_hat += (bk - mean) * (bk - mean);
  v_hat /= (layout.r - 1);

  Prng rng(derive_seed(seed, stream::kImDraws));
  std::vector<double> ref(draws);
  std::vector<double> w(layout.r);
  for (int t = 0; t < draws; ++t) {
    double wm = 0.0;
    for (int k = 0; k < layout.r; ++k) {
      w[k] = std::sqrt(omega_k[k]) * rng.gauss();
      wm += w[k];
    }
    wm /= layout.r;
    double vw = 0.0;
    for (int k = 0; k < layout.r; ++k) vw += (w[k] - wm) * (w[k] - wm);
    ref[t] = vw / (layout.r - 1);
  }

  std::size_t at_least = 0;
  for (double v : ref) {
    if (v >= v_hat) ++at_least;
  }
  std::vector<double> sorted = ref;
  std::sort(sorted.begin(), sorted.end());
  long idx = static_cast<long>(std::ceil((1.0 - alpha) * draws));
  idx = std::clamp(idx, 1L, static_cast<long>(draws));
  const double crit = sorted[idx - 1];

  TestResult res;
  res.method = "im";
  res.alpha = alpha;
  res.seed = seed;
  res.draws = draws;
  res.statistic = v_hat;
  res.p_value = static_cast<double>(at_least) / draws;
  res.reject = (v_hat > crit);
  res.group_estimates = beta_k;
  return res;
}

TestResult mnw_test(const Dataset& ds, double alpha, int b,
                    std::uint64_t seed) {
  if (b < 1) throw ConfigError("mnw test needs at least one bootstrap draw");
  const ClusterLayout layout = build_layout(ds);
  if (layout.q < 2) {
    throw DegenerateDataError(
        "level-of-clustering tests need at least two sub-clusters");
  }
  const RegressionFit fit = ols_fit(ds);
  const Eigen::MatrixXd design = build_design(ds);
  const Eigen::VectorXd fitted = ds.y - fit.residuals;
  const WildStats ws = wild_stats(design, fitted, fit.residuals,
                                  layout.members, fit.xtx_inverse);
  const int p = ws.p;

  auto tau_for = [&](const std::vector<Eigen::VectorXd>& v) {
    Eigen::MatrixXd meat_j = Eigen::MatrixXd::Zero(p, p);
    std::vector<Eigen::VectorXd> vk(layout.r, Eigen::VectorXd::Zero(p));
    for (int j = 0; j < layout.q; ++j) {
      meat_j.noalias() += v[j] * v[j].transpose();
      vk[layout.cluster_of[j]] += v[j];
    }
    Eigen::MatrixXd meat_k = Eigen::MatrixXd::Zero(p, p);
    for (int k = 0; k < layout.r; ++k) {
      meat_k.noalias() += vk[k] * vk[k].transpose();
    }
    return sandwich00(ws.bread, meat_k) - sandwich00(ws.bread, meat_j);
  };

  const double tau = tau_for(ws.score);

  Prng rng(derive_seed(seed, stream::kMnwBoot));
  std::vector<Eigen::VectorXd> v(layout.q, Eigen::VectorXd::Zero(p));
  std::vector<int> omega(layout.q);
  std::size_t extreme = 0;
  for (int t = 0; t < b; ++t) {
    Eigen::VectorXd my = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < layout.q; ++j) {
      omega[j] = rng.rademacher();
      my += ws.fitted[j] + static_cast<double>(omega[j]) * ws.score[j];
    }
    const Eigen::VectorXd theta_star = ws.bread * my;
    for (int j = 0; j < layout.q; ++j) {
      v[j] = ws.fitted[j] + static_cast<double>(omega[j]) * ws.score[j] -
             ws.gram[j] * theta_star;
    }
    if (std::abs(tau_for(v)) >= std::abs(tau)) ++extreme;
  }

  TestResult res;
  res.method = "mnw";
  res.alpha = alpha;
  res.seed = seed;
  res.draws = b;
  res.statistic = tau;
  res.p_value = static_cast<double>(1 + extreme) / (b + 1);
  res.reject = (res.p_value <= alpha);
  return res;
}

TestResult cce_t_test(const Dataset& ds, double beta_null, Grouping grouping,
                      double alpha) {
  const ClusterLayout layout = build_layout(ds);
  const int g = (grouping == Grouping::cluster) ? layout.r : layout.q;
  if (g < 2) throw InfeasibleError("cce t-test needs at least two groups");
  const RegressionFit fit = ols_fit(ds);
  const double omega = cce_sandwich(ds, fit, grouping)(0, 0);
  const double t = t_ratio(fit.beta_hat - beta_null, omega);

  double p;
  if (t == 0.0) {
    p = 1.0;
  } else if (std::isinf(t)) {
    p = 0.0;
  } else {
    boost::math::students_t dist(g - 1);
    p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }

  TestResult res;
  res.method = (grouping == Grouping::cluster) ? "cce_coarse" : "cce_fine";
  res.alpha = alpha;
  res.statistic = t;
  res.p_value = p;
  res.reject = (p <= alpha);
  return res;
}

TestResult art_test(const Dataset& ds, double beta_null, Grouping grouping,
                    double alpha) {
  const ClusterLayout layout = build_layout(ds);
  const GroupSplit gs = groups_at(layout, grouping);
  const int g = static_cast<int>(gs.rows.size());
  if (g < 2) throw InfeasibleError("art needs at least two groups");
  if (g > 25) {
    throw InfeasibleError("art enumerates 2^G sign flips; G = " +
                          std::to_string(g) + " is too many groups");
  }
  const int p = ds.d() + 1;

  std::vector<double> dev(g);
  for (int gi = 0; gi < g; ++gi) {
    const auto& rows = gs.rows[gi];
    Eigen::MatrixXd mg(rows.size(), p);
    Eigen::VectorXd yg(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      mg(t, 0) = ds.x[rows[t]];
      for (int c = 0; c < ds.d(); ++c) mg(t, c + 1) = ds.w(rows[t], c);
      yg[t] = ds.y[rows[t]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(mg);
    qr.setThreshold(kPivotTol);
    if (qr.rank() < p) {
      throw InfeasibleError("art is infeasible: the design within group '" +
                            gs.labels[gi] + "' is rank deficient");
    }
    dev[gi] = qr.solve(yg)[0] - beta_null;
  }

  auto studentized = [g](const std::vector<double>& d) {
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= g;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double var = ss / (g - 1);
    return t_ratio(std::sqrt(static_cast<double>(g)) * mean, var);
  };

  const double t_obs = std::abs(studentized(dev));
  const std::size_t total = std::size_t{1} << g;
  std::size_t at_least = 0;
  std::vector<double> flipped(g);
  for (std::size_t mask = 0; mask < total; ++mask) {
    for (int gi = 0; gi < g; ++gi) {
      flipped[gi] = ((mask >> gi) & 1u) ? -dev[gi] : dev[gi];
    }
    if (std::abs(studentized(flipped)) >= t_obs) ++at_least;
  }

  TestResult res;
  res.method = (grouping == Grouping::cluster) ? "art_coarse" : "art_fine";
  res.alpha = alpha;
  res.statistic = t_obs;
  res.p_value = static_cast<double>(at_least) / static_cast<double>(total);
  res.reject = (res.p_value <= alpha);
  res.group_estimates.resize(g);
  for (int gi = 0; gi < g; ++gi) res.group_estimates[gi] = dev[gi] + beta_null;
  return res;
}

TestResult wild_bootstrap_t_test(const Dataset& ds, double beta_null,
                                 Grouping grouping, int b, std::uint64_t seed,
                                 double alpha) {
  if (b < 1) {
    throw ConfigError("wild bootstrap needs at least one draw");
  }
  const ClusterLayout layout = build_layout(ds);
  const GroupSplit gs = groups_at(layout, grouping);
  const int g = static_cast<int>(gs.rows.size());
  if (g < 2) throw InfeasibleError("wild bootstrap needs at least two groups");

  const RegressionFit fit = ols_fit(ds);
  const double omega = cce_sandwich(ds, fit, grouping)(0, 0);
  const double t_obs = t_ratio(fit.beta_hat - beta_null, omega);

  // Null-imposed fit: project y - x*beta_null on the controls.
  const Eigen::VectorXd y0 = ds.y - beta_null * ds.x;
  Eigen::VectorXd fitted0 = beta_null * ds.x;
  if (ds.d() > 0) fitted0 += ds.w * rank_truncated_ls(ds.w, y0);
  const Eigen::VectorXd resid0 = ds.y - fitted0;

  const Eigen::MatrixXd design = build_design(ds);
  const WildStats ws =
      wild_stats(design, fitted0, resid0, gs.rows, fit.xtx_inverse);
  const int p = ws.p;

  Prng rng(derive_seed(seed, stream::kWildBoot));
  std::vector<int> omega_g(g);
  std::size_t extreme = 0;
  for (int t = 0; t < b; ++t) {
    Eigen::VectorXd my = Eigen::VectorXd::Zero(p);
    for (int gi = 0; gi < g; ++gi) {
      omega_g[gi] = rng.rademacher();
      my += ws.fitted[gi] + static_cast<double>(omega_g[gi]) * ws.score[gi];
    }
    const Eigen::VectorXd theta_star = ws.bread * my;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (int gi = 0; gi < g; ++gi) {
      const Eigen::VectorXd v = ws.fitted[gi] +
                                static_cast<double>(omega_g[gi]) * ws.score[gi] -
                                ws.gram[gi] * theta_star;
      meat.noalias() += v * v.transpose();
    }
    const double om_star = sandwich00(ws.bread, meat);
    const double t_star = t_ratio(theta_star[0] - beta_null, om_star);
    if (std::abs(t_star) >= std::abs(t_obs)) ++extreme;
  }

  TestResult res;
  res.method = (grouping == Grouping::cluster) ? "wild_coarse" : "wild_fine";
  res.alpha = alpha;
  res.seed = seed;
  res.draws = b;
  res.statistic = t_obs;
  res.p_value = static_cast<double>(1 + extreme) / (b + 1);
  res.reject = (res.p_value <= alpha);
  return res;
}

}  // namespace wcr
