#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fmcwcs/random.hpp"
#include "fmcwcs/sensing.hpp"
#include "fmcwcs/tv.hpp"

using namespace fmcwcs;

namespace {

// Piecewise-constant 16x16 phantom: two rectangles on a dark field.
std::vector<double> phantom(std::size_t side) {
  std::vector<double> x(side * side, 0.0);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      if (r >= 2 && r < 7 && c >= 3 && c < 11) x[r * side + c] = 1.0;
      if (r >= 9 && r < 14 && c >= 6 && c < 14) x[r * side + c] = 0.4;
    }
  return x;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0, t = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += (a[i] - b[i]) * (a[i] - b[i]);
    t += b[i] * b[i];
  }
  return std::sqrt(e / t);
}

}  // namespace

TEST(TotalVariation, ConstantAndImpulse) {
  std::vector<double> flat(64, 3.0);
  EXPECT_EQ(total_variation(flat, 8, 8), 0.0);
  std::vector<double> spike(64, 0.0);
  spike[27] = 2.0;
  // Four unit-size jumps of height 2 with periodic differences.
  EXPECT_DOUBLE_EQ(total_variation(spike, 8, 8), 8.0);
}

TEST(TotalVariation, GradientAdjointIdentity) {
  Rng rng(5);
  const std::size_t w = 12, h = 7;
  std::vector<double> x(w * h), ph(w * h), pv(w * h);
  for (auto& v : x) v = rng.normal();
  for (auto& v : ph) v = rng.normal();
  for (auto& v : pv) v = rng.normal();
  std::vector<double> gh, gv;
  detail::gradient(x, w, h, gh, gv);
  const auto dtp = detail::gradient_adjoint(ph, pv, w, h);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lhs += gh[i] * ph[i] + gv[i] * pv[i];
    rhs += x[i] * dtp[i];
  }
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(TvObjective, ZeroImageGivesMeasurementEnergy) {
  SensingMatrix a(64, 20, 3);
  Rng rng(1);
  std::vector<double> y(20);
  double e = 0.0;
  for (auto& v : y) {
    v = rng.normal();
    e += v * v;
  }
  EXPECT_NEAR(tv_objective(a, y, std::vector<double>(64, 0.0), 8, 8, 0.7), e, 1e-12 * e);
}

TEST(TvMinimize, ZeroMeasurementsGiveZeroImage) {
  SensingMatrix a(64, 32, 1);
  const auto res = tv_minimize(a, std::vector<double>(32, 0.0), 8, 8);
  EXPECT_TRUE(res.converged);
  for (double v : res.image) EXPECT_EQ(v, 0.0);
}

TEST(TvMinimize, DefaultAlphaIsSixteenthOfBackProjectionPeak) {
  const std::size_t side = 16, n = side * side;
  SensingMatrix a(n, n / 2, 4);
  const auto y = a.apply(phantom(side));
  const auto aty = a.apply_adjoint(y);
  double peak = 0.0;
  for (double v : aty) peak = std::max(peak, std::abs(v));
  EXPECT_DOUBLE_EQ(tv_minimize(a, y, side, side).alpha, peak / 16.0);
}

TEST(TvMinimize, RecoversPhantomFromFullSampling) {
  const std::size_t side = 16, n = side * side;
  SensingMatrix a(n, n, 11);
  const auto x0 = phantom(side);
  const auto y = a.apply(x0);
  TvConfig cfg;
  cfg.alpha = 1e-3;
  const auto res = tv_minimize(a, y, side, side, cfg);
  EXPECT_LT(rel_err(res.image, x0), 0.02);
}

TEST(TvMinimize, ObjectiveHistoryIsMonotoneAndBelowZeroImage) {
  const std::size_t side = 16, n = side * side;
  for (std::uint64_t seed : {2u, 7u, 19u}) {
    SensingMatrix a(n, n / 4, seed);
    Rng rng(seed);
    auto y = a.apply(phantom(side));
    for (auto& v : y) v += 0.5 * rng.normal();
    const auto res = tv_minimize(a, y, side, side);
    ASSERT_FALSE(res.objective_history.empty());
    double at_zero = 0.0;
    for (double v : y) at_zero += v * v;
    EXPECT_LE(res.objective_history.front(), at_zero);
    for (std::size_t k = 1; k < res.objective_history.size(); ++k)
      EXPECT_LE(res.objective_history[k], res.objective_history[k - 1] + 1e-8);
    EXPECT_NEAR(tv_objective(a, y, res.image, side, side, res.alpha),
                res.objective_history.back(), 1e-9 * res.objective_history.back());
  }
}

TEST(TvMinimize, Deterministic) {
  const std::size_t side = 16, n = side * side;
  SensingMatrix a(n, n / 3, 8);
  const auto y = a.apply(phantom(side));
  const auto r1 = tv_minimize(a, y, side, side);
  const auto r2 = tv_minimize(a, y, side, side);
  EXPECT_EQ(r1.image, r2.image);
  EXPECT_EQ(r1.objective_history, r2.objective_history);
}

TEST(TvMinimize, RejectsBadInput) {
  SensingMatrix a(64, 16, 1);
  std::vector<double> y(16, 1.0);
  EXPECT_THROW(tv_minimize(a, y, 4, 8), std::invalid_argument);
  EXPECT_THROW(tv_minimize(a, std::vector<double>(15, 1.0), 8, 8), std::invalid_argument);
  y[3] = std::nan("");
  EXPECT_THROW(tv_minimize(a, y, 8, 8), std::invalid_argument);
  TvConfig bad;
  bad.alpha = -1.0;
  EXPECT_THROW(tv_minimize(a, std::vector<double>(16, 1.0), 8, 8, bad), std::invalid_argument);
  bad = {};
  bad.penalty_growth = 0.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
