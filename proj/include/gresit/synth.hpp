#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "gresit/common.hpp"
#include "gresit/graph.hpp"
#include "gresit/grouped_data.hpp"

namespace gresit {

// Expected-parents constant for the proportional sparsity mode.
inline constexpr double kProportionalEdgeConstant = 2.0;

/// Erdos-Renyi DAG: a uniformly random topological order, then every forward
/// pair independently with probability `edge_probability`.
inline GroupDag sample_er_dag(std::size_t p, double edge_probability, Rng& rng,
                              std::vector<Node>* order_out = nullptr) {
  if (p < 1) throw ArgumentError("graph needs at least one node");
  if (edge_probability < 0.0 || edge_probability > 1.0) throw ArgumentError("edge probability must lie in [0, 1]");
  std::vector<Node> order(p);
  std::iota(order.begin(), order.end(), Node{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (u(rng) < edge_probability) edges.emplace_back(order[i], order[j]);
  if (order_out) *order_out = order;
  return GroupDag(p, edges);
}

inline GroupDag sample_er_dag(std::size_t p, double edge_probability, std::uint64_t seed) {
  Rng rng(seed);
  return sample_er_dag(p, edge_probability, rng);
}

inline double proportional_edge_probability(std::size_t p) {
  return std::min(1.0, kProportionalEdgeConstant / static_cast<double>(p));
}

struct GpOptions {
  std::size_t summands = 2;  // q: GP draws per output coordinate
  double lengthscale = 1.0;  // on standardized inputs
  double weight_low = 0.5;
  double weight_high = 2.0;
};

/// Randomly weighted sums of Gaussian-process draws evaluated at the sample
/// points. Each column of the result is one output coordinate. The process is
/// drawn at the distinct input rows, so repeated rows share their values.
inline Matrix sample_gp_mechanism(const Eigen::Ref<const Matrix>& inputs, std::size_t output_dim, Rng& rng,
                                  const GpOptions& opts = {}) {
  const Index n = inputs.rows();
  if (n < 2) throw ArgumentError("GP mechanism needs at least 2 samples");
  if (opts.summands < 1 || output_dim < 1) throw ArgumentError("GP mechanism needs q >= 1 and d_out >= 1");
  const Matrix z_all = standardize_columns(inputs);

  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  auto row_less = [&](Index a, Index b) {
    for (Index c = 0; c < z_all.cols(); ++c)
      if (z_all(a, c) != z_all(b, c)) return z_all(a, c) < z_all(b, c);
    return false;
  };
  std::stable_sort(rows.begin(), rows.end(), row_less);
  // Each row points at the first (lowest-index) row equal to it.
  std::vector<Index> rep(static_cast<std::size_t>(n));
  std::vector<Index> distinct;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 || row_less(rows[i - 1], rows[i])) distinct.push_back(rows[i]);
    rep[static_cast<std::size_t>(rows[i])] = distinct.back();
  }
  std::sort(distinct.begin(), distinct.end());
  std::vector<Index> rank(static_cast<std::size_t>(n), 0);
  for (std::size_t u = 0; u < distinct.size(); ++u) rank[static_cast<std::size_t>(distinct[u])] = static_cast<Index>(u);
  std::vector<Index> unique_of(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) unique_of[static_cast<std::size_t>(i)] = rank[static_cast<std::size_t>(rep[static_cast<std::size_t>(i)])];
  const auto m = static_cast<Index>(distinct.size());
  const Matrix z = z_all(distinct, Eigen::all);

  const Vector sq = z.rowwise().squaredNorm();
  Matrix k = z * z.transpose();
  const double scale = -0.5 / (opts.lengthscale * opts.lengthscale);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < m; ++i) k(i, j) = std::exp(scale * std::max(0.0, sq(i) + sq(j) - 2.0 * k(i, j)));
  for (Index j = 0; j < m; ++j)
    for (Index i = j + 1; i < m; ++i) k(j, i) = k(i, j);

  std::optional<Eigen::LLT<Matrix>> chol;
  for (double jitter : {1e-6, 1e-5, 1e-4}) {
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(kj);
    if (llt.info() == Eigen::Success) {
      chol.emplace(std::move(llt));
      break;
    }
  }
  if (!chol) throw NumericalError("GP kernel factorization failed after jitter escalation to 1e-4");

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> weight(opts.weight_low, opts.weight_high);
  std::bernoulli_distribution sign(0.5);
  const auto draws = static_cast<Index>(output_dim * opts.summands);
  Matrix e(m, draws);
  for (Index j = 0; j < draws; ++j)
    for (Index i = 0; i < m; ++i) e(i, j) = normal(rng);
  const Matrix f = chol->matrixL() * e;

  Matrix at_distinct = Matrix::Zero(m, static_cast<Index>(output_dim));
  for (std::size_t c = 0; c < output_dim; ++c)
    for (std::size_t q = 0; q < opts.summands; ++q) {
      const double w = weight(rng) * (sign(rng) ? 1.0 : -1.0);
      at_distinct.col(static_cast<Index>(c)) += w * f.col(static_cast<Index>(c * opts.summands + q));
    }
  return at_distinct(unique_of, Eigen::all);
}

inline Matrix sample_gp_mechanism(const Eigen::Ref<const Matrix>& inputs, std::size_t output_dim, std::uint64_t seed,
                                  const GpOptions& opts = {}) {
  Rng rng(seed);
  return sample_gp_mechanism(inputs, output_dim, rng, opts);
}

struct LogNormalParams {
  Vector mean;
  Matrix raw_covariance;  // symmetric draw before the PD repair
  Matrix covariance;      // repaired, unit diagonal
  bool repaired = false;  // eigenvalues were clipped
};

/// Symmetric matrix with unit diagonal and off-diagonals uniform on
/// [-0.8, 0.8], projected to positive definiteness by eigenvalue clipping at
/// 1e-3 and rescaled back to unit diagonal.
inline LogNormalParams sample_lognormal_params(std::size_t d, Rng& rng) {
  if (d < 1) throw ArgumentError("noise dimension must be >= 1");
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  LogNormalParams out;
  const auto dd = static_cast<Index>(d);
  out.mean.resize(dd);
  for (Index i = 0; i < dd; ++i) out.mean(i) = u(rng);
  out.raw_covariance = Matrix::Identity(dd, dd);
  for (Index i = 0; i < dd; ++i)
    for (Index j = i + 1; j < dd; ++j) out.raw_covariance(i, j) = out.raw_covariance(j, i) = u(rng);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.raw_covariance);
  Vector vals = eig.eigenvalues();
  out.repaired = vals.minCoeff() < 1e-3;
  if (out.repaired) {
    vals = vals.cwiseMax(1e-3);
    Matrix c = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    const Vector inv_sd = c.diagonal().cwiseSqrt().cwiseInverse();
    c = inv_sd.asDiagonal() * c * inv_sd.asDiagonal();
    out.covariance = 0.5 * (c + c.transpose());
  } else {
    out.covariance = out.raw_covariance;
  }
  return out;
}

/// Draws n rows of exp(N(mean, covariance)).
inline Matrix sample_lognormal(const LogNormalParams& params, Index n, Rng& rng) {
  const Index d = params.mean.size();
  Eigen::LLT<Matrix> llt(params.covariance);
  if (llt.info() != Eigen::Success) throw NumericalError("log-normal covariance is not positive definite");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix e(d, n);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) e(c, i) = normal(rng);
  Matrix g = llt.matrixL() * e;
  g.colwise() += params.mean;
  return g.transpose().array().exp().matrix();
}

inline Matrix sample_lognormal_noise(Index n, std::size_t d, Rng& rng) {
  return sample_lognormal(sample_lognormal_params(d, rng), n, rng);
}

inline Matrix sample_lognormal_noise(Index n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return sample_lognormal_noise(n, d, rng);
}

struct GanmSpec {
  std::vector<std::size_t> group_dims;
  std::optional<double> edge_probability;  // empty: proportional mode
  Index n = 1000;
  double snr = 2.0;
  std::uint64_t seed = 0;
  GpOptions gp;
  std::optional<GroupDag> graph;  // fixed graph instead of an Erdos-Renyi draw
};

struct NodeMechanism {
  std::vector<Node> parents;
  LogNormalParams noise;
  std::vector<double> signal_scale;  // per coordinate, applied to the GP draw
  std::vector<double> achieved_snr;  // per coordinate, Var(signal)/Var(noise)
};

struct GroundTruth {
  GroupDag dag;
  CausalOrder generation_order;
  std::vector<NodeMechanism> mechanisms;
};

/// Samples a group additive noise model: X_g = f_g(X_pa(g)) + N_g with f_g a
/// GP mechanism rescaled to the target signal-to-noise ratio, then
/// standardizes every column.
inline std::pair<GroupedDataset, GroundTruth> generate(const GanmSpec& spec) {
  const std::size_t p = spec.group_dims.size();
  if (p < 1) throw ArgumentError("GANM needs at least one group");
  if (spec.n < 2) throw ArgumentError("GANM needs n >= 2");
  if (!(spec.snr > 0.0)) throw ArgumentError("SNR must be positive");
  Rng rng(spec.seed);

  GroundTruth truth;
  if (spec.graph) {
    if (spec.graph->p() != p) throw DimensionError("fixed graph size differs from the number of groups");
    truth.dag = *spec.graph;
    truth.generation_order = CausalOrder(truth.dag.topological_order());
  } else {
    std::vector<Node> order;
    const double prob = spec.edge_probability.value_or(proportional_edge_probability(p));
    truth.dag = sample_er_dag(p, prob, rng, &order);
    truth.generation_order = CausalOrder(order);
  }

  const GroupSpec gspec = [&] {
    std::vector<Group> groups;
    for (std::size_t g = 0; g < p; ++g) groups.push_back({"g" + std::to_string(g + 1), spec.group_dims[g]});
    return GroupSpec(std::move(groups));
  }();

  Matrix data = Matrix::Zero(spec.n, static_cast<Index>(gspec.total_dim()));
  truth.mechanisms.resize(p);
  for (Node g : truth.generation_order.sequence()) {
    NodeMechanism& mech = truth.mechanisms[g];
    mech.parents = truth.dag.parents(g);
    const std::size_t d = gspec.dim(g);
    mech.noise = sample_lognormal_params(d, rng);
    const Matrix noise = sample_lognormal(mech.noise, spec.n, rng);
    Matrix value = noise;
    if (!mech.parents.empty()) {
      Matrix inputs(spec.n, 0);
      for (Node pa : mech.parents) {
        const auto cols = data.middleCols(static_cast<Index>(gspec.offset(pa)), static_cast<Index>(gspec.dim(pa)));
        Matrix grown(spec.n, inputs.cols() + cols.cols());
        grown << inputs, cols;
        inputs = std::move(grown);
      }
      Matrix signal = sample_gp_mechanism(inputs, d, rng, spec.gp);
      for (Index c = 0; c < static_cast<Index>(d); ++c) {
        const double var_noise = population_sd(noise.col(c)) * population_sd(noise.col(c));
        const double var_signal = population_sd(signal.col(c)) * population_sd(signal.col(c));
        double scale = 1.0;
        if (var_signal > 0.0 && var_noise > 0.0) scale = std::sqrt(spec.snr * var_noise / var_signal);
        signal.col(c) *= scale;
        mech.signal_scale.push_back(scale);
        const double achieved = var_noise > 0.0 ? population_sd(signal.col(c)) * population_sd(signal.col(c)) / var_noise
                                                : 0.0;
        mech.achieved_snr.push_back(achieved);
      }
      value += signal;
    }
    data.middleCols(static_cast<Index>(gspec.offset(g)), static_cast<Index>(d)) = value;
  }
  GroupedDataset ds(standardize_columns(data), gspec, true);
  return {std::move(ds), std::move(truth)};
}

}  // namespace gresit
