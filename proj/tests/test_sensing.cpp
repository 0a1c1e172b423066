#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fmcwcs/random.hpp"
#include "fmcwcs/sensing.hpp"

using namespace fmcwcs;

namespace {

// Sylvester construction by Kronecker doubling: H_2n = [[H, H], [H, -H]].
std::vector<std::vector<int>> sylvester(std::size_t n) {
  std::vector<std::vector<int>> h{{1}};
  while (h.size() < n) {
    const std::size_t s = h.size();
    std::vector<std::vector<int>> next(2 * s, std::vector<int>(2 * s));
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t c = 0; c < s; ++c) {
        next[r][c] = h[r][c];
        next[r][c + s] = h[r][c];
        next[r + s][c] = h[r][c];
        next[r + s][c + s] = -h[r][c];
      }
    h = std::move(next);
  }
  return h;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<std::vector<double>> materialize(const SensingMatrix& a) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < a.rows(); ++k) rows.push_back(a.row(k));
  return rows;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Fwht, MatchesDenseSylvester) {
  for (std::size_t n : {1u, 2u, 4u, 8u, 32u, 128u, 256u}) {
    const auto h = sylvester(n);
    const auto x = random_vector(n, n);
    auto fast = x;
    fwht(fast);
    for (std::size_t r = 0; r < n; ++r) {
      double expect = 0.0;
      for (std::size_t c = 0; c < n; ++c) expect += h[r][c] * x[c];
      ASSERT_NEAR(fast[r], expect, 1e-10 * (1.0 + std::abs(expect))) << "n=" << n << " r=" << r;
    }
  }
}

TEST(Fwht, RejectsNonPowerOfTwo) {
  std::vector<double> v(6);
  EXPECT_THROW(fwht(v), std::invalid_argument);
}

TEST(HadamardEntry, MatchesKronecker) {
  const auto h = sylvester(64);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 64; ++c) ASSERT_EQ(hadamard_entry(r, c), h[r][c]);
}

TEST(SensingMatrix, ZeroInZeroOut) {
  const SensingMatrix a(64, 20, 1);
  const auto y = a.apply(std::vector<double>(64, 0.0));
  for (double v : y) EXPECT_EQ(v, 0.0);
  const auto x = a.apply_adjoint(std::vector<double>(20, 0.0));
  for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(SensingMatrix, UnrandomizedFirstColumn) {
  const auto a = SensingMatrix::unrandomized(8, 8);
  std::vector<double> e(8, 0.0);
  e[0] = 1.0;
  const auto y = a.apply(e);
  const auto h = sylvester(8);
  for (std::size_t r = 0; r < 8; ++r) EXPECT_EQ(y[r], h[r][0]);
}

TEST(SensingMatrix, ApplyMatchesDenseProduct) {
  const SensingMatrix a(64, 64, 99);
  const auto dense = materialize(a);
  const auto x = random_vector(64, 3);
  const auto y = a.apply(x);
  for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(y[k], dot(dense[k], x), 1e-10);
}

TEST(SensingMatrix, AdjointMatchesDenseTranspose) {
  const SensingMatrix a(64, 16, 5);
  const auto dense = materialize(a);
  const auto y = random_vector(16, 8);
  const auto x = a.apply_adjoint(y);
  for (std::size_t j = 0; j < 64; ++j) {
    double expect = 0.0;
    for (std::size_t k = 0; k < 16; ++k) expect += dense[k][j] * y[k];
    EXPECT_NEAR(x[j], expect, 1e-10);
  }
}

TEST(SensingMatrix, AdjointIdentity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SensingMatrix a(256, 77, seed);
    const auto x = random_vector(256, seed + 100);
    const auto y = random_vector(77, seed + 200);
    const double lhs = dot(a.apply(x), y);
    const double rhs = dot(x, a.apply_adjoint(y));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(SensingMatrix, FullUnrandomizedGramIsScaledIdentity) {
  const auto a = SensingMatrix::unrandomized(64, 64);
  const auto x = random_vector(64, 1);
  const auto back = a.apply_adjoint(a.apply(x));
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back[i], 64.0 * x[i], 1e-10);
}

TEST(SensingMatrix, OrthogonalPlusMinusOneRows) {
  for (std::size_t n : {4u, 16u, 64u, 256u}) {
    const SensingMatrix a(n, n, 1234 + n);
    const auto dense = materialize(a);
    for (std::size_t k = 0; k < n; ++k) {
      for (double v : dense[k]) ASSERT_TRUE(v == 1.0 || v == -1.0);
      for (std::size_t l = k; l < n; ++l)
        ASSERT_EQ(dot(dense[k], dense[l]), k == l ? static_cast<double>(n) : 0.0);
    }
  }
}

TEST(SensingMatrix, ConstantRowOnlyAtFullSampling) {
  const SensingMatrix part(256, 255, 7);
  for (std::size_t r : part.hadamard_rows()) EXPECT_NE(r, 0u);
  const SensingMatrix full(256, 256, 7);
  std::set<std::size_t> rows(full.hadamard_rows().begin(), full.hadamard_rows().end());
  EXPECT_EQ(rows.size(), 256u);
  EXPECT_EQ(full.hadamard_rows().back(), 0u);
}

TEST(SensingMatrix, PrefixSharesRows) {
  const SensingMatrix big(256, 200, 3);
  const SensingMatrix small(256, 50, 3);
  const auto pre = big.prefix(50);
  const auto x = random_vector(256, 4);
  EXPECT_EQ(pre.apply(x), small.apply(x));
  EXPECT_THROW(big.prefix(201), std::invalid_argument);
}

TEST(SensingMatrix, SeedDeterminism) {
  const SensingMatrix a(1024, 300, 42);
  const SensingMatrix b(1024, 300, 42);
  const SensingMatrix c(1024, 300, 43);
  const auto x = random_vector(1024, 9);
  EXPECT_EQ(a.apply(x), b.apply(x));
  EXPECT_NE(a.apply(x), c.apply(x));
}

TEST(SensingMatrix, ShapeErrors) {
  EXPECT_THROW(SensingMatrix(48, 10, 0), std::invalid_argument);
  EXPECT_THROW(SensingMatrix(64, 0, 0), std::invalid_argument);
  EXPECT_THROW(SensingMatrix(64, 65, 0), std::invalid_argument);
  const SensingMatrix a(64, 10, 0);
  EXPECT_THROW(a.apply(std::vector<double>(63)), std::invalid_argument);
  EXPECT_THROW(a.apply_adjoint(std::vector<double>(11)), std::invalid_argument);
}

TEST(SplitPattern, ConstantRow) {
  const auto a = SensingMatrix::unrandomized(16, 4);
  const auto [pos, neg] = a.split_pattern(0);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(pos[i], 1);
    EXPECT_EQ(neg[i], 0);
  }
}

TEST(SplitPattern, PartitionsAndReproducesRow) {
  const SensingMatrix a(16, 16, 77);
  const auto x = random_vector(16, 1);
  const auto y = a.apply(x);
  for (std::size_t k = 0; k < 16; ++k) {
    const auto [pos, neg] = a.split_pattern(k);
    const auto row = a.row(k);
    double detectors = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      ASSERT_EQ(pos[i] + neg[i], 1);
      ASSERT_EQ(static_cast<double>(pos[i]) - static_cast<double>(neg[i]), row[i]);
      detectors += pos[i] * x[i] - neg[i] * x[i];
    }
    EXPECT_NEAR(detectors, y[k], 1e-12);
  }
  EXPECT_THROW(a.split_pattern(16), std::out_of_range);
}
