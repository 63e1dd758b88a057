#pragma once

// Multi-response group sparse additive model (MURGS).
//
// A response group Y (n x d_j) is regressed on candidate parent groups, each
// parent coordinate h of group g contributing one additive component function
// per response coordinate k. The penalty
//
//     sum_g sqrt(d_g) * max_k || f_g^(k) ||,   || f_g^(k) ||^2 = sum_h ||f_{g,h}^(k)||_n^2
//
// couples sparsity across responses (sup-norm) and parent coordinates (l2),
// so a parent group is either dropped for all responses or kept for all.
// Fitting is block-coordinate descent over parent groups; each block update is
// a closed-form soft-thresholding of the smoothed partial residuals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "gresit/common.hpp"

namespace gresit {

enum class SmootherKind { nadaraya_watson, local_linear };

struct SmootherMatrix {
  Matrix s;  // n x n linear smoother
  double bandwidth = 0.0;
  double trace = 0.0;
  bool degenerate = false;  // zero-variance input: uniform rows
};

using SmootherRef = std::shared_ptr<const SmootherMatrix>;

/// Empirical norm sqrt((1/n) sum v_i^2).
inline double norm_l2n(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

/// Plug-in bandwidth 0.6 * sd(x) * n^(-1/5), sd with denominator n.
inline double plugin_bandwidth(const Eigen::Ref<const Vector>& x) {
  return 0.6 * population_sd(x) * std::pow(static_cast<double>(x.size()), -0.2);
}

/// Gaussian-kernel smoother on a scalar predictor column. Nadaraya-Watson rows
/// are the normalized kernel weights; local-linear rows reproduce linear trends
/// and fall back to Nadaraya-Watson where the local design is singular.
inline SmootherMatrix smoother_matrix(const Eigen::Ref<const Vector>& x, double bandwidth,
                                      SmootherKind kind = SmootherKind::nadaraya_watson) {
  const Index n = x.size();
  if (n < 2) throw ArgumentError("smoother needs at least 2 samples");
  if (!(bandwidth > 0.0)) throw ArgumentError("smoother bandwidth must be positive");
  SmootherMatrix out;
  out.bandwidth = bandwidth;
  if (!(population_sd(x) > 0.0)) {
    out.s = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
    out.trace = 1.0;
    out.degenerate = true;
    return out;
  }
  // Built column-wise as the transpose so the inner loop is contiguous.
  Matrix st(n, n);
  const double inv_h = 1.0 / bandwidth;
  for (Index i = 0; i < n; ++i) {
    double* col = st.col(i).data();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double u = x(j) - x(i);
      const double t = u * inv_h;
      const double w = std::exp(-0.5 * t * t);
      col[j] = w;
      s0 += w;
      s1 += w * u;
      s2 += w * u * u;
    }
    const double det = s0 * s2 - s1 * s1;
    if (kind == SmootherKind::local_linear && det > 1e-10 * s0 * s2 && det > 0.0) {
      for (Index j = 0; j < n; ++j) col[j] *= (s2 - (x(j) - x(i)) * s1) / det;
    } else {
      for (Index j = 0; j < n; ++j) col[j] /= s0;
    }
  }
  out.s = st.transpose();
  out.trace = out.s.trace();
  return out;
}

/// Smoother with the plug-in bandwidth; zero-variance columns are flagged degenerate.
inline SmootherMatrix plugin_smoother(const Eigen::Ref<const Vector>& x,
                                      SmootherKind kind = SmootherKind::nadaraya_watson) {
  const double h = plugin_bandwidth(x);
  return smoother_matrix(x, h > 0.0 ? h : 1.0, kind);
}

/// Result of one closed-form block update for a parent group.
struct BlockUpdate {
  std::vector<Matrix> f;     // per parent coordinate h: n x d_j, column k = f_{g,h}^(k)
  Vector s_hat;              // per response k: sqrt(sum_h ||S_h R^(k)||_n^2)
  std::vector<Index> order;  // responses sorted by s_hat descending
  Index m_star = 0;          // number of responses sharing the sup-norm; 0 if zeroed
  double shared_norm = 0.0;  // (1/m*) (sum_{l<=m*} s_hat - sqrt(d_g) lambda)
  bool zero = false;
};

/// argmax_m (1/m) (sum_{l<=m} s_sorted[l] - threshold), m in 1..size, ties to the largest m.
inline Index select_m_star(std::span<const double> s_sorted, double threshold) {
  Index best_m = 0;
  double best = -std::numeric_limits<double>::infinity();
  double partial = 0.0;
  for (std::size_t m = 1; m <= s_sorted.size(); ++m) {
    partial += s_sorted[m - 1];
    const double value = (partial - threshold) / static_cast<double>(m);
    if (value >= best) {
      best = value;
      best_m = static_cast<Index>(m);
    }
  }
  return best_m;
}

/// Soft-thresholding block update for one parent group.
///
/// `residual` holds the partial residual R_g^(k) in column k; `smoothers` the
/// d_g smoother matrices of the group's coordinates. When `center` is false the
/// final mean removal is skipped (used to inspect the raw update).
inline BlockUpdate soft_threshold_group(const Eigen::Ref<const Matrix>& residual, std::span<const SmootherRef> smoothers,
                                        double lambda, bool center = true) {
  if (lambda < 0.0 || std::isnan(lambda)) throw ArgumentError("lambda must be non-negative");
  if (smoothers.empty()) throw ArgumentError("parent group has no smoothers");
  const Index n = residual.rows();
  const Index dj = residual.cols();
  for (const auto& s : smoothers)
    if (!s || s->s.rows() != n || s->s.cols() != n) throw DimensionError("smoother size does not match residual length");

  BlockUpdate out;
  const auto dg = static_cast<Index>(smoothers.size());
  out.f.reserve(smoothers.size());
  Vector sq = Vector::Zero(dj);
  for (const auto& s : smoothers) {
    Matrix p = s->s * residual;
    sq += p.colwise().squaredNorm().transpose() / static_cast<double>(n);
    out.f.push_back(std::move(p));
  }
  out.s_hat = sq.cwiseSqrt();

  const double threshold = std::sqrt(static_cast<double>(dg)) * lambda;
  out.order.resize(static_cast<std::size_t>(dj));
  std::iota(out.order.begin(), out.order.end(), Index{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](Index a, Index b) { return out.s_hat(a) > out.s_hat(b); });

  std::vector<double> sorted(static_cast<std::size_t>(dj));
  for (Index i = 0; i < dj; ++i) sorted[static_cast<std::size_t>(i)] = out.s_hat(out.order[static_cast<std::size_t>(i)]);
  // Summed in sorted order so the zero test agrees with the partial sums below.
  if (std::accumulate(sorted.begin(), sorted.end(), 0.0) <= threshold) {
    for (auto& fh : out.f) fh.setZero();
    out.zero = true;
    return out;
  }

  out.m_star = select_m_star(sorted, threshold);
  double top = 0.0;
  for (Index i = 0; i < out.m_star; ++i) top += sorted[static_cast<std::size_t>(i)];
  out.shared_norm = std::max(0.0, (top - threshold) / static_cast<double>(out.m_star));

  // Responses ranked within the top m* are rescaled to the shared norm; the
  // rest keep their smoothed residual.
  for (Index i = 0; i < out.m_star; ++i) {
    const Index k = out.order[static_cast<std::size_t>(i)];
    const double factor = out.s_hat(k) > 0.0 ? out.shared_norm / out.s_hat(k) : 0.0;
    for (auto& fh : out.f) fh.col(k) *= factor;
  }
  if (center) {
    for (auto& fh : out.f) fh.rowwise() -= fh.colwise().mean();
  }
  return out;
}

inline BlockUpdate soft_threshold_group(const Eigen::Ref<const Matrix>& residual,
                                        const std::vector<SmootherRef>& smoothers, double lambda, bool center = true) {
  return soft_threshold_group(residual, std::span<const SmootherRef>(smoothers.data(), smoothers.size()), lambda,
                              center);
}

/// Response matrix plus the precomputed smoothers of every candidate parent group.
class MurgsProblem {
 public:
  MurgsProblem(std::vector<std::vector<SmootherRef>> smoothers, Matrix y)
      : smoothers_(std::move(smoothers)), y_(std::move(y)) {
    if (y_.rows() < 2 || y_.cols() < 1) throw DimensionError("response must have at least 2 rows and 1 column");
    if (!y_.allFinite()) throw ArgumentError("response contains non-finite values");
    for (const auto& group : smoothers_) {
      if (group.empty()) throw ArgumentError("parent group with no coordinates");
      for (const auto& s : group)
        if (!s || s->s.rows() != y_.rows()) throw DimensionError("smoother size does not match the response");
    }
  }

  /// Builds plug-in smoothers for each column of each parent group.
  MurgsProblem(const std::vector<Matrix>& parents, const Matrix& y,
               SmootherKind kind = SmootherKind::nadaraya_watson)
      : MurgsProblem(build(parents, y.rows(), kind), y) {}

  Index n() const noexcept { return y_.rows(); }
  Index response_dim() const noexcept { return y_.cols(); }
  std::size_t group_count() const noexcept { return smoothers_.size(); }
  std::size_t group_dim(std::size_t g) const { return smoothers_.at(g).size(); }
  const std::vector<SmootherRef>& smoothers(std::size_t g) const { return smoothers_.at(g); }
  const Matrix& y() const noexcept { return y_; }

  /// nu_g = sum_h tr(S_{g,h}).
  double effective_df(std::size_t g) const {
    double nu = 0.0;
    for (const auto& s : smoothers_.at(g)) nu += s->trace;
    return nu;
  }

 private:
  static std::vector<std::vector<SmootherRef>> build(const std::vector<Matrix>& parents, Index n, SmootherKind kind) {
    std::vector<std::vector<SmootherRef>> out;
    for (const auto& g : parents) {
      if (g.rows() != n) throw DimensionError("parent group row count differs from the response");
      std::vector<SmootherRef> group;
      for (Index h = 0; h < g.cols(); ++h)
        group.push_back(std::make_shared<const SmootherMatrix>(plugin_smoother(g.col(h), kind)));
      out.push_back(std::move(group));
    }
    return out;
  }

  std::vector<std::vector<SmootherRef>> smoothers_;
  Matrix y_;
};

struct MurgsOptions {
  double tol = 1e-5;
  int max_sweeps = 200;
  // Backtrack each block update (halving the step toward the proposal) until
  // the penalized objective does not increase; false applies proposals as is.
  bool monotone = true;
  int max_halvings = 30;
};

struct MurgsFit {
  // f[g][h] is n x d_j with column k holding f_{g,h}^(k) at the training points.
  std::vector<std::vector<Matrix>> f;
  double lambda = 0.0;
  std::vector<std::size_t> active;      // candidate indices with a nonzero block
  std::vector<double> objective_trace;  // initial value, then one entry per sweep
  Matrix group_norms;                   // groups x d_j, ||f_g^(k)||
  int sweeps = 0;
  bool converged = false;

  /// Sum over all component functions: n x d_j.
  Matrix fitted(Index n, Index dj) const {
    Matrix total = Matrix::Zero(n, dj);
    for (const auto& group : f)
      for (const auto& fh : group) total += fh;
    return total;
  }
};

/// Group norms ||f_g^(k)|| = sqrt(sum_h ||f_{g,h}^(k)||_n^2) for every (g, k).
inline Matrix murgs_group_norms(const std::vector<std::vector<Matrix>>& f, Index n, Index dj) {
  Matrix norms = Matrix::Zero(static_cast<Index>(f.size()), dj);
  for (std::size_t g = 0; g < f.size(); ++g) {
    Vector sq = Vector::Zero(dj);
    for (const auto& fh : f[g]) sq += fh.colwise().squaredNorm().transpose() / static_cast<double>(n);
    norms.row(static_cast<Index>(g)) = sq.cwiseSqrt().transpose();
  }
  return norms;
}

/// Penalized empirical objective (1/(2n)) sum_{k,i} (y - f)^2 + lambda * sum_g sqrt(d_g) max_k ||f_g^(k)||.
inline double murgs_objective(const MurgsProblem& problem, const std::vector<std::vector<Matrix>>& f, double lambda) {
  const Index n = problem.n();
  const Index dj = problem.response_dim();
  Matrix resid = problem.y();
  for (const auto& group : f)
    for (const auto& fh : group) resid -= fh;
  const Matrix norms = murgs_group_norms(f, n, dj);
  double penalty = 0.0;
  for (std::size_t g = 0; g < f.size(); ++g)
    penalty += std::sqrt(static_cast<double>(f[g].size())) * norms.row(static_cast<Index>(g)).maxCoeff();
  return resid.squaredNorm() / (2.0 * static_cast<double>(n)) + lambda * penalty;
}

inline std::vector<std::size_t> active_groups(const MurgsFit& fit) {
  std::vector<std::size_t> out;
  for (Index g = 0; g < fit.group_norms.rows(); ++g)
    if (fit.group_norms.row(g).maxCoeff() > 0.0) out.push_back(static_cast<std::size_t>(g));
  return out;
}

/// Cyclic block-coordinate descent (backfitting) over parent groups. Starts
/// from zero, or from `warm` when given (must come from the same problem).
inline MurgsFit backfit(const MurgsProblem& problem, double lambda, const MurgsOptions& opts = {},
                        const MurgsFit* warm = nullptr) {
  if (lambda < 0.0 || std::isnan(lambda)) throw ArgumentError("lambda must be non-negative");
  const Index n = problem.n();
  const Index dj = problem.response_dim();
  const std::size_t groups = problem.group_count();

  MurgsFit fit;
  fit.lambda = lambda;
  if (warm && warm->f.size() == groups) {
    fit.f = warm->f;
  } else {
    fit.f.resize(groups);
    for (std::size_t g = 0; g < groups; ++g) fit.f[g].assign(problem.group_dim(g), Matrix::Zero(n, dj));
  }

  Matrix total = fit.fitted(n, dj);
  fit.objective_trace.push_back(murgs_objective(problem, fit.f, lambda));

  auto block_penalty = [&](const std::vector<Matrix>& block) {
    Vector sq = Vector::Zero(dj);
    for (const auto& fh : block) sq += fh.colwise().squaredNorm().transpose() / static_cast<double>(n);
    return lambda * std::sqrt(static_cast<double>(block.size())) * sq.cwiseSqrt().maxCoeff();
  };
  const double inv_2n = 1.0 / (2.0 * static_cast<double>(n));

  for (int sweep = 0; sweep < opts.max_sweeps && groups > 0; ++sweep) {
    double max_change = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      Matrix block_sum = Matrix::Zero(n, dj);
      for (const auto& fh : fit.f[g]) block_sum += fh;
      const Matrix partial = problem.y() - (total - block_sum);
      BlockUpdate upd = soft_threshold_group(partial, problem.smoothers(g), lambda);
      Matrix new_sum = Matrix::Zero(n, dj);
      for (const auto& fh : upd.f) new_sum += fh;
      if (!new_sum.allFinite()) throw NumericalError("non-finite values in backfitting sweep " + std::to_string(sweep));

      std::vector<Matrix> next = std::move(upd.f);
      if (opts.monotone) {
        // Only the block's own fit and penalty change; the rest is constant.
        const double current = (partial - block_sum).squaredNorm() * inv_2n + block_penalty(fit.f[g]);
        double step = 1.0;
        int halvings = 0;
        for (;;) {
          std::vector<Matrix> trial(next.size());
          Matrix trial_sum = block_sum + step * (new_sum - block_sum);
          for (std::size_t h = 0; h < next.size(); ++h) trial[h] = fit.f[g][h] + step * (next[h] - fit.f[g][h]);
          if ((partial - trial_sum).squaredNorm() * inv_2n + block_penalty(trial) <= current) {
            next = std::move(trial);
            new_sum = std::move(trial_sum);
            break;
          }
          if (++halvings > opts.max_halvings) {
            next = fit.f[g];
            new_sum = block_sum;
            break;
          }
          step *= 0.5;
        }
      }
      for (std::size_t h = 0; h < next.size(); ++h)
        for (Index k = 0; k < dj; ++k) max_change = std::max(max_change, norm_l2n(next[h].col(k) - fit.f[g][h].col(k)));
      total += new_sum - block_sum;
      fit.f[g] = std::move(next);
    }
    ++fit.sweeps;
    fit.objective_trace.push_back(murgs_objective(problem, fit.f, lambda));
    if (max_change < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  if (groups == 0) fit.converged = true;
  fit.group_norms = murgs_group_norms(fit.f, n, dj);
  fit.active = active_groups(fit);
  return fit;
}

/// Smallest lambda at which every block is zeroed when all fits start at zero:
/// max_g (1/sqrt(d_g)) sum_k s_hat_g^(k) with R = Y.
inline double lambda_max(const MurgsProblem& problem) {
  double best = 0.0;
  for (std::size_t g = 0; g < problem.group_count(); ++g) {
    const BlockUpdate upd = soft_threshold_group(problem.y(), problem.smoothers(g), 0.0, false);
    best = std::max(best, upd.s_hat.sum() / std::sqrt(static_cast<double>(problem.group_dim(g))));
  }
  return best;
}

/// Degrees of freedom d_j * sum over active groups of nu_g.
inline double murgs_df(const MurgsFit& fit, const MurgsProblem& problem) {
  double df = 0.0;
  for (std::size_t g : active_groups(fit)) df += problem.effective_df(g);
  return static_cast<double>(problem.response_dim()) * df;
}

/// Multi-response GCV score:
///   (1/n) sum_i sum_k (y_ik - f_ik)^2 / (n^2 d_j^2 - n d_j df)^2.
/// A non-positive base disqualifies the fit (+inf).
inline double gcv(const MurgsFit& fit, const MurgsProblem& problem) {
  const auto n = static_cast<double>(problem.n());
  const auto dj = static_cast<double>(problem.response_dim());
  const double rss = (problem.y() - fit.fitted(problem.n(), problem.response_dim())).squaredNorm();
  const double base = n * n * dj * dj - n * dj * murgs_df(fit, problem);
  if (!(base > 0.0)) return std::numeric_limits<double>::infinity();
  return rss / n / (base * base);
}

struct LambdaSelection {
  double lambda = 0.0;
  MurgsFit fit;
  std::vector<double> grid;
  std::vector<double> scores;
  std::vector<std::size_t> active_counts;
};

/// Log-spaced grid from lambda_max down to lambda_max * 1e-3, warm-started
/// from the previous fit; returns the GCV minimizer (ties to the larger lambda).
inline LambdaSelection select_lambda(const MurgsProblem& problem, std::size_t grid_size = 20,
                                     const MurgsOptions& opts = {}) {
  if (grid_size < 2) throw ArgumentError("lambda grid needs at least 2 points");
  LambdaSelection out;
  const double top = lambda_max(problem);
  out.grid.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i)
    out.grid[i] = top * std::pow(10.0, -3.0 * static_cast<double>(i) / static_cast<double>(grid_size - 1));

  double best = std::numeric_limits<double>::infinity();
  bool have_best = false;
  MurgsFit prev;
  for (std::size_t i = 0; i < grid_size; ++i) {
    MurgsFit fit = backfit(problem, out.grid[i], opts, i == 0 ? nullptr : &prev);
    const double score = gcv(fit, problem);
    out.scores.push_back(score);
    out.active_counts.push_back(fit.active.size());
    if (!have_best || score < best) {
      best = score;
      have_best = true;
      out.lambda = out.grid[i];
      out.fit = fit;
    }
    prev = std::move(fit);
  }
  return out;
}

}  // namespace gresit
