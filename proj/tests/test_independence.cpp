#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gresit/independence.hpp"

using namespace gresit;

namespace {

Matrix normal_matrix(Index n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  return x;
}

double sorted_median_distance(const Matrix& x) {
  std::vector<double> d;
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = i + 1; j < x.rows(); ++j) {
      const double v = (x.row(i) - x.row(j)).norm();
      if (v > 0.0) d.push_back(v);
    }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 == 1 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

double kernel(const Matrix& x, Index i, Index j, double sigma) {
  return std::exp(-(x.row(i) - x.row(j)).squaredNorm() / (2.0 * sigma * sigma));
}

// (1/n^2) sum_ij K_ij L_ij - (2/n^3) sum_ijq K_ij L_iq + (1/n^4) sum_ijqr K_ij L_qr
double hsic_quadruple_sum(const Matrix& x, const Matrix& y) {
  const Index n = x.rows();
  const double sx = sorted_median_distance(x), sy = sorted_median_distance(y);
  double a = 0.0, b = 0.0, c = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double kij = kernel(x, i, j, sx);
      a += kij * kernel(y, i, j, sy);
      for (Index q = 0; q < n; ++q) {
        b += kij * kernel(y, i, q, sy);
        for (Index r = 0; r < n; ++r) c += kij * kernel(y, q, r, sy);
      }
    }
  const double nn = static_cast<double>(n);
  return a / (nn * nn) - 2.0 * b / (nn * nn * nn) + c / (nn * nn * nn * nn);
}

}  // namespace

TEST(MedianHeuristic, Examples) {
  Matrix two(2, 1);
  two << 0, 2;
  EXPECT_DOUBLE_EQ(median_heuristic_bandwidth(two), 2.0);
  EXPECT_DOUBLE_EQ(median_heuristic_bandwidth(Matrix::Constant(5, 2, 3.0)), 1.0);
  Matrix three(3, 1);
  three << 0, 1, 3;
  EXPECT_DOUBLE_EQ(median_heuristic_bandwidth(three), 2.0);
  EXPECT_THROW(median_heuristic_bandwidth(Matrix::Zero(1, 1)), ArgumentError);
}

TEST(MedianHeuristic, IgnoresZeroDistancesAndMatchesSortedOracle) {
  Matrix dup(4, 1);
  dup << 0, 0, 0, 4;  // positive distances {4, 4, 4}
  EXPECT_DOUBLE_EQ(median_heuristic_bandwidth(dup), 4.0);
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = normal_matrix(3 + rep, 1 + rep % 3, rng);
    EXPECT_NEAR(median_heuristic_bandwidth(x), sorted_median_distance(x), 1e-14);
  }
}

TEST(RbfGram, Examples) {
  std::mt19937_64 rng(2);
  const Matrix x = normal_matrix(6, 2, rng);
  const Matrix k = rbf_gram(x, 0.7);
  for (Index i = 0; i < 6; ++i) EXPECT_EQ(k(i, i), 1.0);
  EXPECT_EQ(k, k.transpose());

  const double sigma = 1.3;
  Matrix pair(2, 1);
  pair << 0.0, sigma * std::sqrt(2.0);
  EXPECT_NEAR(rbf_gram(pair, sigma)(0, 1), std::exp(-1.0), 1e-14);

  Matrix three(3, 2);
  three << 0, 0, 1, 0, 1, 2;
  const Matrix g = rbf_gram(three, 1.0);
  EXPECT_NEAR(g(0, 1), std::exp(-0.5), 1e-14);
  EXPECT_NEAR(g(0, 2), std::exp(-2.5), 1e-14);
  EXPECT_NEAR(g(1, 2), std::exp(-2.0), 1e-14);
  EXPECT_THROW(rbf_gram(three, 0.0), ArgumentError);
}

TEST(HsicStatistic, Examples) {
  std::mt19937_64 rng(3);
  const Matrix x = normal_matrix(30, 2, rng);
  EXPECT_NEAR(hsic_statistic(x, Matrix::Constant(30, 1, 2.0)).statistic, 0.0, 1e-15);
  EXPECT_GT(hsic_statistic(x, x).statistic, 0.01);
  EXPECT_THROW(hsic_statistic(x, Matrix::Zero(29, 1)), DimensionError);
}

TEST(HsicStatistic, FixedFourSampleMatchesQuadrupleSum) {
  Matrix x(4, 1), y(4, 2);
  x << 0.1, -1.2, 0.7, 2.0;
  y << 1, 0, 0.5, 0.5, -1, 2, 0.3, -0.4;
  EXPECT_NEAR(hsic_statistic(x, y).statistic, hsic_quadruple_sum(x, y), 1e-12);
}

TEST(HsicStatistic, QuadrupleSumOracleAndSymmetries) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<Index> size(2, 12), dim(1, 3);
  for (int rep = 0; rep < 60; ++rep) {
    const Index n = size(rng);
    const Matrix x = normal_matrix(n, dim(rng), rng);
    Matrix y = normal_matrix(n, dim(rng), rng);
    if (rep % 3 == 0) y.col(0) += x.col(0).array().square().matrix();
    const double s = hsic_statistic(x, y).statistic;
    EXPECT_NEAR(s, hsic_quadruple_sum(x, y), 1e-8);
    EXPECT_GE(s, -1e-12);
    EXPECT_NEAR(s, hsic_statistic(y, x).statistic, 1e-10);

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const Matrix xp = x(perm, Eigen::all), yp = y(perm, Eigen::all);
    EXPECT_NEAR(hsic_statistic(xp, yp).statistic, s, 1e-12);
  }
}

TEST(HsicGamma, DegenerateAndPower) {
  std::mt19937_64 rng(5);
  const Matrix x = normal_matrix(500, 2, rng);
  const HsicResult c = hsic_gamma_pvalue(x, Matrix::Constant(500, 1, 1.0));
  EXPECT_NEAR(c.statistic, 0.0, 1e-15);
  EXPECT_EQ(*c.p_value, 1.0);
  EXPECT_TRUE(c.degenerate);

  std::normal_distribution<double> tiny(0.0, 1e-3);
  Matrix y = x;
  for (Index i = 0; i < y.size(); ++i) y.data()[i] += tiny(rng);
  EXPECT_LT(*hsic_gamma_pvalue(x, y).p_value, 0.01);
  EXPECT_THROW(hsic_gamma_pvalue(x.topRows(3), y.topRows(3)), ArgumentError);
}

TEST(HsicGamma, PValueInUnitInterval) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = normal_matrix(60, 1, rng);
    const Matrix y = normal_matrix(60, 2, rng);
    const double p = *hsic_gamma_pvalue(x, y).p_value;
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}
