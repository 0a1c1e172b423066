#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fmcwcs/least_squares.hpp"
#include "fmcwcs/random.hpp"

using namespace fmcwcs;

namespace {

using Dense = std::vector<std::vector<double>>;

Dense random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Dense m(rows, std::vector<double>(cols));
  for (auto& row : m)
    for (auto& v : row) v = rng.normal();
  return m;
}

LinearOperator dense_operator(const Dense& m) {
  LinearOperator j;
  j.rows = m.size();
  j.cols = m.front().size();
  j.apply = [m](std::span<const double> s) {
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r)
      for (std::size_t c = 0; c < s.size(); ++c) out[r] += m[r][c] * s[c];
    return out;
  };
  j.adjoint = [m](std::span<const double> y) {
    std::vector<double> out(m.front().size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r)
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += m[r][c] * y[r];
    return out;
  };
  return j;
}

// Normal equations solved by Gaussian elimination with partial pivoting.
std::vector<double> normal_equations_oracle(const Dense& m, const std::vector<double>& y) {
  const std::size_t n = m.front().size();
  Dense g(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t r = 0; r < m.size(); ++r) g[i][k] += m[r][i] * m[r][k];
    for (std::size_t r = 0; r < m.size(); ++r) g[i][n] += m[r][i] * y[r];
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(g[r][col]) > std::abs(g[piv][col])) piv = r;
    std::swap(g[col], g[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = g[r][col] / g[col][col];
      for (std::size_t k = col; k <= n; ++k) g[r][k] -= f * g[col][k];
    }
  }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = g[i][n] / g[i][i];
  return s;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(b[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff / scale;
}

}  // namespace

TEST(LsGradient, MatchesCentralFiniteDifferences) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = random_matrix(15, 6, seed);
    const auto j = dense_operator(m);
    const auto y = random_vector(15, seed + 100);
    const auto s = random_vector(6, seed + 200);
    const auto g = ls_gradient(j, y, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double h = 1e-5;
      auto sp = s, sm = s;
      sp[i] += h;
      sm[i] -= h;
      const double fd = (ls_objective(j, y, sp) - ls_objective(j, y, sm)) / (2.0 * h);
      EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST(LeastSquares, SolversMatchDenseOracle) {
  const auto m = random_matrix(40, 12, 9);
  const auto j = dense_operator(m);
  const auto y = random_vector(40, 10);
  const auto oracle = normal_equations_oracle(m, y);
  LsOptions cg;
  LsOptions bfgs;
  bfgs.solver = LsSolver::lbfgs;
  const auto a = least_squares(j, y, cg);
  const auto b = least_squares(j, y, bfgs);
  EXPECT_TRUE(a.converged);
  EXPECT_TRUE(b.converged);
  EXPECT_FALSE(a.rank_deficient);
  EXPECT_LT(max_rel_diff(a.solution, oracle), 1e-8);
  EXPECT_LT(max_rel_diff(b.solution, oracle), 1e-8);
  EXPECT_LT(max_rel_diff(a.solution, b.solution), 1e-5);
}

TEST(LeastSquares, NormalEquationResidualContract) {
  for (auto solver : {LsSolver::conjugate_gradient, LsSolver::lbfgs}) {
    const auto m = random_matrix(60, 25, 21);
    const auto j = dense_operator(m);
    const auto y = random_vector(60, 22);
    LsOptions opt;
    opt.solver = solver;
    const auto res = least_squares(j, y, opt);
    auto r = j.apply(res.solution);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= y[k];
    const auto g = j.adjoint(r);
    const auto b = j.adjoint(y);
    double gn = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gn += g[i] * g[i];
      bn += b[i] * b[i];
    }
    EXPECT_LE(std::sqrt(gn), 1e-6 * std::sqrt(bn));
    EXPECT_NEAR(res.relative_residual, std::sqrt(gn / bn), 1e-12);
  }
}

TEST(LeastSquares, ZeroRightHandSide) {
  const auto j = dense_operator(random_matrix(10, 4, 3));
  const auto res = least_squares(j, std::vector<double>(10, 0.0));
  EXPECT_TRUE(res.converged);
  for (double v : res.solution) EXPECT_EQ(v, 0.0);
}

TEST(LeastSquares, DuplicatedColumnIsFlaggedWithMinimumNormSolution) {
  auto m = random_matrix(20, 4, 31);
  for (auto& row : m) row.push_back(row[1]);
  const auto j = dense_operator(m);
  const auto y = random_vector(20, 32);
  // Reduced problem on the first four columns, then split column 1 evenly.
  Dense reduced(m.size());
  for (std::size_t r = 0; r < m.size(); ++r) reduced[r].assign(m[r].begin(), m[r].begin() + 4);
  auto expect = normal_equations_oracle(reduced, y);
  expect.push_back(expect[1] / 2.0);
  expect[1] /= 2.0;
  for (auto solver : {LsSolver::conjugate_gradient, LsSolver::lbfgs}) {
    LsOptions opt;
    opt.solver = solver;
    const auto res = least_squares(j, y, opt);
    EXPECT_TRUE(res.rank_deficient);
    if (solver == LsSolver::conjugate_gradient) {
      EXPECT_LT(max_rel_diff(res.solution, expect), 1e-7);
    } else {
      // The residual is still minimal even if the split differs.
      EXPECT_NEAR(ls_objective(j, y, res.solution), ls_objective(j, y, expect), 1e-8);
    }
  }
}

TEST(LeastSquares, RejectsBadInput) {
  const auto j = dense_operator(random_matrix(10, 4, 3));
  EXPECT_THROW(least_squares(j, std::vector<double>(9, 0.0)), std::invalid_argument);
  LsOptions opt;
  opt.tolerance = 0.0;
  EXPECT_THROW(least_squares(j, std::vector<double>(10, 1.0), opt), std::invalid_argument);
}
