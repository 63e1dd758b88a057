#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "gresit/common.hpp"

namespace gresit {

struct HsicResult {
  double statistic = 0.0;         // biased estimator (1/n^2) tr(KHLH)
  std::optional<double> p_value;  // set by hsic_gamma_pvalue only
  double bandwidth_x = 1.0;
  double bandwidth_y = 1.0;
  bool degenerate = false;  // null variance or mean was not positive; p_value forced to 1
};

/// Median of the strictly positive pairwise Euclidean distances between rows.
/// Falls back to 1.0 when every pair coincides.
inline double median_heuristic_bandwidth(const Eigen::Ref<const Matrix>& x) {
  const Index n = x.rows();
  if (n < 2) throw ArgumentError("median heuristic needs at least 2 rows");
  const Index d = x.cols();
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    const double* a = rows.data() + i * d;
    for (Index j = i + 1; j < n; ++j) {
      const double* b = rows.data() + j * d;
      double s = 0.0;
      for (Index c = 0; c < d; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
      if (s > 0.0) dist.push_back(std::sqrt(s));
    }
  }
  if (dist.empty()) return 1.0;
  const auto mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  const double upper = dist[mid];
  if (dist.size() % 2 == 1) return upper;
  const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

/// Gaussian RBF Gram matrix K_ij = exp(-|x_i - x_j|^2 / (2 sigma^2)).
inline Matrix rbf_gram(const Eigen::Ref<const Matrix>& x, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("RBF bandwidth must be positive");
  const Index n = x.rows();
  const Vector sq = x.rowwise().squaredNorm();
  Matrix k = x * x.transpose();
  const double scale = -1.0 / (2.0 * sigma * sigma);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double d2 = std::max(0.0, sq(i) + sq(j) - 2.0 * k(i, j));
      k(i, j) = std::exp(scale * d2);
    }
    k(j, j) = 1.0;
  }
  // Enforce exact symmetry; the expansion above can differ in the last ulp.
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) k(j, i) = k(i, j);
  return k;
}

namespace detail {

/// H K H for H = I - 11^T / n.
inline Matrix double_center(const Matrix& k) {
  const Vector row_mean = k.rowwise().mean();
  const Vector col_mean = k.colwise().mean().transpose();
  const double grand = k.mean();
  Matrix out = k;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean.transpose();
  out.array() += grand;
  return out;
}

inline void check_rows(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError("HSIC inputs have " + std::to_string(x.rows()) + " and " + std::to_string(y.rows()) +
                         " rows");
  }
  if (x.rows() < 2) throw ArgumentError("HSIC needs at least 2 samples");
}

}  // namespace detail

/// Biased HSIC V-statistic with median-heuristic Gaussian kernels on each input.
inline HsicResult hsic_statistic(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
  detail::check_rows(x, y);
  HsicResult r;
  r.bandwidth_x = median_heuristic_bandwidth(x);
  r.bandwidth_y = median_heuristic_bandwidth(y);
  const Matrix kc = detail::double_center(rbf_gram(x, r.bandwidth_x));
  const Matrix l = rbf_gram(y, r.bandwidth_y);
  const double n = static_cast<double>(x.rows());
  // tr(KHLH) = sum_ij (HKH)_ij L_ij since H is idempotent and symmetric.
  r.statistic = (kc.array() * l.array()).sum() / (n * n);
  return r;
}

/// HSIC with a gamma approximation to the null distribution of n * HSIC
/// (moment matching as in Gretton et al., 2008).
inline HsicResult hsic_gamma_pvalue(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
  detail::check_rows(x, y);
  if (x.rows() < 4) throw ArgumentError("gamma approximation needs at least 4 samples");
  HsicResult r;
  r.bandwidth_x = median_heuristic_bandwidth(x);
  r.bandwidth_y = median_heuristic_bandwidth(y);
  Matrix k = rbf_gram(x, r.bandwidth_x);
  Matrix l = rbf_gram(y, r.bandwidth_y);
  const double n = static_cast<double>(x.rows());
  const Matrix kc = detail::double_center(k);
  const Matrix lc = detail::double_center(l);

  const Matrix prod = kc.cwiseProduct(lc);
  r.statistic = prod.sum() / (n * n);
  const double test_stat = n * r.statistic;

  // Null variance from B = ((HKH) o (HLH) / 6)^2 with the diagonal removed.
  const Matrix b = (prod / 6.0).array().square().matrix();
  double var = (b.sum() - b.diagonal().sum()) / (n * (n - 1.0));
  var *= 72.0 * (n - 4.0) * (n - 5.0) / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));

  // Null mean from the means of the off-diagonal kernel entries.
  const double mu_x = (k.sum() - k.diagonal().sum()) / (n * (n - 1.0));
  const double mu_y = (l.sum() - l.diagonal().sum()) / (n * (n - 1.0));
  // (1 + mu_x mu_y - mu_x - mu_y) / n, factored; a constant kernel makes it vanish.
  const double spread_x = 1.0 - mu_x;
  const double spread_y = 1.0 - mu_y;
  const double mean = spread_x * spread_y / n;

  if (spread_x <= 1e-12 || spread_y <= 1e-12 || !(var > 0.0) || !std::isfinite(var)) {
    r.p_value = 1.0;
    r.degenerate = true;
    return r;
  }
  const double shape = mean * mean / var;
  const double scale = var * n / mean;
  r.p_value = test_stat <= 0.0 ? 1.0 : boost::math::gamma_q(shape, test_stat / scale);
  return r;
}

}  // namespace gresit
