#include "wcr/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "wcr/errors.hpp"

namespace wcr {

namespace {

constexpr double kPivotTol = 1e-10;  // relative to the largest pivot

Eigen::MatrixXd xtx_inverse_from_qr(
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr, int p) {
  const Eigen::MatrixXd r =
      qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd core = rinv * rinv.transpose();
  return qr.colsPermutation() * core * qr.colsPermutation().transpose();
}

}  // namespace

Eigen::MatrixXd build_design(const Dataset& ds) {
  Eigen::MatrixXd m(ds.n(), ds.d() + 1);
  m.col(0) = ds.x;
  if (ds.d() > 0) m.rightCols(ds.d()) = ds.w;
  return m;
}

Eigen::VectorXd rank_truncated_ls(const Eigen::MatrixXd& a,
                                  const Eigen::VectorXd& b,
                                  std::vector<int>* dropped) {
  const int p = static_cast<int>(a.cols());
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  if (dropped) dropped->clear();
  if (p == 0) return coef;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(kPivotTol);
  const int rank = static_cast<int>(qr.rank());
  const auto& perm = qr.colsPermutation().indices();

  if (rank == p) {
    coef = qr.solve(b);
  } else {
    // Eigen's solve truncates at its own epsilon-based pivot count, which
    // need not match the tolerance above; drop the columns ourselves and
    // solve the reduced full-rank system.
    Eigen::MatrixXd kept(a.rows(), rank);
    for (int c = 0; c < rank; ++c) kept.col(c) = a.col(perm[c]);
    const Eigen::VectorXd reduced = kept.householderQr().solve(b);
    for (int c = 0; c < rank; ++c) coef[perm[c]] = reduced[c];
  }
  if (dropped) {
    for (int c = rank; c < p; ++c) dropped->push_back(perm[c]);
    std::sort(dropped->begin(), dropped->end());
  }
  return coef;
}

RegressionFit ols_fit(const Dataset& ds) {
  validate_dataset(ds);
  const int p = ds.d() + 1;
  const Eigen::MatrixXd m = build_design(ds);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(kPivotTol);
  if (qr.rank() < p) {
    throw SingularityError(
        "design matrix [x | w] is rank deficient; drop collinear controls");
  }
  RegressionFit fit;
  const Eigen::VectorXd theta = qr.solve(ds.y);
  fit.beta_hat = theta[0];
  fit.gamma_hat = theta.tail(ds.d());
  fit.residuals = ds.y - m * theta;
  fit.xtx_inverse = xtx_inverse_from_qr(qr, p);
  return fit;
}

PiEstimates estimate_pi(const Dataset& ds, const ClusterLayout& layout,
                        PiMode mode) {
  const int d = ds.d();
  PiEstimates out;
  out.pi_hat.resize(layout.q);
  out.dropped_columns.resize(layout.q);

  if (d == 0) {
    for (int j = 0; j < layout.q; ++j) out.pi_hat[j] = Eigen::VectorXd(0);
    out.mode = mode;
    return out;
  }

  bool pooled = (mode == PiMode::pooled);
  if (!pooled) {
    for (int j = 0; j < layout.q; ++j) {
      if (layout.n_j[j] < d) {
        pooled = true;  // too few rows for a within-sub-cluster fit
        break;
      }
    }
  }
  out.mode = pooled ? PiMode::pooled : PiMode::per_subcluster;

  if (pooled) {
    std::vector<int> dropped;
    const Eigen::VectorXd pi = rank_truncated_ls(ds.w, ds.x, &dropped);
    for (int j = 0; j < layout.q; ++j) {
      out.pi_hat[j] = pi;
      out.dropped_columns[j] = dropped;
    }
    return out;
  }

  for (int j = 0; j < layout.q; ++j) {
    const auto& rows = layout.members[j];
    Eigen::MatrixXd wj(rows.size(), d);
    Eigen::VectorXd xj(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      wj.row(t) = ds.w.row(rows[t]);
      xj[t] = ds.x[rows[t]];
    }
    out.pi_hat[j] = rank_truncated_ls(wj, xj, &out.dropped_columns[j]);
  }
  return out;
}

SubclusterScores compute_score_components(const Dataset& ds,
                                          const ClusterLayout& layout,
                                          const RegressionFit& fit,
                                          const PiEstimates& pi) {
  SubclusterScores sc;
  sc.numerator.assign(layout.q, 0.0);
  sc.denominator.assign(layout.q, 0.0);
  sc.x_sq_sum.assign(layout.q, 0.0);
  sc.n_j = layout.n_j;
  const int d = ds.d();

  for (int j = 0; j < layout.q; ++j) {
    double num = 0.0, den = 0.0, xsq = 0.0;
    for (int i : layout.members[j]) {
      double e = ds.x[i];
      for (int c = 0; c < d; ++c) e -= ds.w(i, c) * pi.pi_hat[j][c];
      num += e * fit.residuals[i];
      den += e * e;
      xsq += ds.x[i] * ds.x[i];
    }
    sc.numerator[j] = num;
    sc.denominator[j] = den;
    sc.x_sq_sum[j] = xsq;
  }
  return sc;
}

Eigen::MatrixXd sandwich(const Eigen::MatrixXd& design,
                         const Eigen::VectorXd& residuals,
                         const std::vector<std::vector<int>>& groups,
                         const Eigen::MatrixXd& xtx_inverse) {
  const int p = static_cast<int>(design.cols());
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd v(p);
  for (const auto& rows : groups) {
    v.setZero();
    for (int i : rows) v += design.row(i).transpose() * residuals[i];
    meat.noalias() += v * v.transpose();
  }
  return xtx_inverse * meat * xtx_inverse;
}

Eigen::MatrixXd cce_sandwich(const Dataset& ds, const RegressionFit& fit,
                             Grouping grouping) {
  const ClusterLayout layout = build_layout(ds);
  const std::vector<std::vector<int>> groups =
      (grouping == Grouping::subcluster) ? layout.members
                                         : cluster_members(layout);
  return sandwich(build_design(ds), fit.residuals, groups, fit.xtx_inverse);
}

// ---------------------------------------------------------------------------
// fwl_beta: self-contained Householder QR on plain arrays. Kept free of the
// Eigen solve path on purpose.
// ---------------------------------------------------------------------------

namespace {

// In-place thin QR of a (n x p), column-major. Applies the same Householder
// reflections to each vector in `carry`. Returns false if R has a relative
// zero pivot.
bool householder_qr(std::vector<double>& a, long n, int p,
                    std::vector<std::vector<double>*> carry) {
  auto col = [&](int c) { return a.data() + static_cast<long>(c) * n; };
  double max_diag = 0.0;
  std::vector<double> diag(p, 0.0);
  for (int k = 0; k < p; ++k) {
    double* ak = col(k);
    double norm = 0.0;
    for (long i = k; i < n; ++i) norm += ak[i] * ak[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) return false;
    const double alpha = (ak[k] > 0 ? -norm : norm);
    // v = x - alpha e_k, stored in place of column k below the diagonal
    ak[k] -= alpha;
    double vtv = 0.0;
    for (long i = k; i < n; ++i) vtv += ak[i] * ak[i];
    if (vtv == 0.0) return false;
    auto reflect = [&](double* u) {
      double dot = 0.0;
      for (long i = k; i < n; ++i) dot += ak[i] * u[i];
      const double s = 2.0 * dot / vtv;
      for (long i = k; i < n; ++i) u[i] -= s * ak[i];
    };
    for (int c = k + 1; c < p; ++c) reflect(col(c));
    for (auto* u : carry) reflect(u->data());
    ak[k] = alpha;  // R diagonal
    diag[k] = std::abs(alpha);
    max_diag = std::max(max_diag, diag[k]);
  }
  for (int k = 0; k < p; ++k) {
    if (diag[k] <= 1e-10 * max_diag) return false;
  }
  return true;
}

// Back-substitute R z = b[0..p) using the factor left by householder_qr.
std::vector<double> back_solve(const std::vector<double>& a, long n, int p,
                               const std::vector<double>& b) {
  std::vector<double> z(p, 0.0);
  for (int k = p - 1; k >= 0; --k) {
    double s = b[k];
    for (int c = k + 1; c < p; ++c) s -= a[static_cast<long>(c) * n + k] * z[c];
    z[k] = s / a[static_cast<long>(k) * n + k];
  }
  return z;
}

}  // namespace

double fwl_beta(const Dataset& ds) {
  validate_dataset(ds);
  const long n = ds.n();
  const int d = ds.d();

  std::vector<double> x(n), y(n);
  for (long i = 0; i < n; ++i) {
    x[i] = ds.x[i];
    y[i] = ds.y[i];
  }
  double x_scale = 0.0;
  for (long i = 0; i < n; ++i) x_scale += x[i] * x[i];

  std::vector<double> ex = x, ey = y;  // become projection residuals
  if (d > 0) {
    std::vector<double> w(static_cast<long>(d) * n);
    for (int c = 0; c < d; ++c) {
      for (long i = 0; i < n; ++i) w[static_cast<long>(c) * n + i] = ds.w(i, c);
    }
    std::vector<double> qtx = x, qty = y;
    if (n < d || !householder_qr(w, n, d, {&qtx, &qty})) {
      throw SingularityError("controls matrix w is rank deficient");
    }
    const auto pi_x = back_solve(w, n, d, qtx);
    const auto pi_y = back_solve(w, n, d, qty);
    for (long i = 0; i < n; ++i) {
      double px = 0.0, py = 0.0;
      for (int c = 0; c < d; ++c) {
        px += ds.w(i, c) * pi_x[c];
        py += ds.w(i, c) * pi_y[c];
      }
      ex[i] = x[i] - px;
      ey[i] = y[i] - py;
    }
  }

  double num = 0.0, den = 0.0;
  for (long i = 0; i < n; ++i) {
    num += ex[i] * ey[i];
    den += ex[i] * ex[i];
  }
  if (den <= 1e-20 * x_scale || den == 0.0) {
    throw SingularityError(
        "regressor x lies in the span of the controls; coefficient not "
        "identified");
  }
  return num / den;
}

}  // namespace wcr
