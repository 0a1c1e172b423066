#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fmcwcs/random.hpp"
#include "fmcwcs/wavelet.hpp"

using namespace fmcwcs;

namespace {

std::vector<double> smooth_signal(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    x[i] = std::sin(0.1 * t) + 0.001 * t * t - 0.5 * std::cos(0.37 * t);
  }
  return x;
}

double energy(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

}  // namespace

TEST(FilterBank, Sym20IsOrthonormal) {
  const auto& bank = sym20_filters();
  ASSERT_EQ(bank.length(), 40u);
  const auto lo = bank.lowpass();
  const auto hi = bank.highpass();
  double sum = 0.0;
  for (double v : lo) sum += v;
  // The published sym20 coefficients are accurate to about 1e-11.
  EXPECT_NEAR(sum, std::sqrt(2.0), 1e-10);
  for (std::size_t shift = 0; shift < 40; shift += 2) {
    double ll = 0.0, lh = 0.0;
    for (std::size_t k = 0; k + shift < 40; ++k) {
      ll += lo[k] * lo[k + shift];
      lh += lo[k] * hi[k + shift];
    }
    EXPECT_NEAR(ll, shift == 0 ? 1.0 : 0.0, 1e-10) << shift;
    EXPECT_NEAR(lh, 0.0, 1e-10) << shift;
  }
}

TEST(DwtMaxLevel, KnownLengths) {
  EXPECT_EQ(dwt_max_level(203, 40), 2u);
  EXPECT_EQ(dwt_max_level(16650, 40), 8u);
  EXPECT_EQ(dwt_max_level(38, 40), 0u);
  EXPECT_EQ(dwt_max_level(1024, 2), 10u);
}

// Reference coefficients from PyWavelets 1.x, wavedec(x, 'sym20',
// mode='periodization', level=2) on smooth_signal(203).
TEST(Wavedec, Sym20MatchesReference) {
  const auto x = smooth_signal(203);
  const auto dec = wavedec(x, sym20_filters(), 2);
  ASSERT_EQ(dec.approx.size(), 51u);
  ASSERT_EQ(dec.details[1].size(), 51u);
  ASSERT_EQ(dec.details[0].size(), 102u);
  auto check = [](const std::vector<double>& v, double first, double mid, double last) {
    EXPECT_NEAR(v.front(), first, 1e-9);
    EXPECT_NEAR(v[v.size() / 2], mid, 1e-9);
    EXPECT_NEAR(v.back(), last, 1e-9);
  };
  check(dec.approx, 31.794856875271403, 18.051944113673994, 88.77453016504589);
  check(dec.details[1], -6.436635437949774, -0.00010649726880093536, 20.2372126377992);
  check(dec.details[0], 2.073164365682413, -2.5660794904414666e-10, 16.51526964636914);
}

TEST(Wavedec, PerfectReconstruction) {
  Rng rng(1);
  for (std::size_t n : {80u, 203u, 1000u, 16650u}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    const std::size_t levels = dwt_max_level(n, 40);
    const auto back = waverec(wavedec(x, sym20_filters(), levels), sym20_filters());
    ASSERT_EQ(back.size(), n);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(back[i], x[i], 1e-9) << n;
  }
}

TEST(Wavedec, EnergyPreservedOnDyadicLength) {
  Rng rng(2);
  std::vector<double> x(512);
  for (double& v : x) v = rng.normal();
  const auto dec = wavedec(x, sym20_filters(), dwt_max_level(512, 40));
  double e = energy(dec.approx);
  for (const auto& d : dec.details) e += energy(d);
  EXPECT_NEAR(e, energy(x), 1e-9 * energy(x));
}

TEST(Haar2d, MatchesReferenceMagnitudes) {
  // PyWavelets wavedec2(img, 'haar', level=2) on img = arange(16)^1.5.
  std::vector<double> img(16);
  for (std::size_t i = 0; i < 16; ++i) img[i] = std::pow(static_cast<double>(i), 1.5);
  haar2d_forward(img, 4);
  EXPECT_NEAR(img[0], 94.51863073, 1e-7);
  EXPECT_NEAR(std::abs(img[1 * 4 + 0]), 63.8075722, 1e-7);   // detail along rows axis
  EXPECT_NEAR(std::abs(img[0 * 4 + 1]), 15.39405931, 1e-7);  // detail along columns axis
  EXPECT_NEAR(std::abs(img[1 * 4 + 1]), 4.86334066, 1e-7);
  EXPECT_NEAR(std::abs(img[0 * 4 + 2]), 2.09016994, 1e-7);   // finest column-axis band
  EXPECT_NEAR(std::abs(img[2 * 4 + 0]), 9.09016994, 1e-7);   // finest row-axis band
  EXPECT_NEAR(std::abs(img[2 * 4 + 2]), 1.09016994, 1e-7);   // finest diagonal band
  EXPECT_NEAR(std::abs(img[3 * 4 + 3]), 0.42572534, 1e-7);
}

TEST(Haar2d, OrthonormalAndInvertible) {
  Rng rng(3);
  for (std::size_t side : {1u, 2u, 8u, 64u}) {
    std::vector<double> x(side * side);
    for (double& v : x) v = rng.normal();
    auto c = x;
    haar2d_forward(c, side);
    EXPECT_NEAR(energy(c), energy(x), 1e-10 * energy(x));
    haar2d_inverse(c, side);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(c[i], x[i], 1e-12);
  }
}

TEST(Haar2d, ConstantImageHasOnlyDc) {
  std::vector<double> x(64, 1.0);
  haar2d_forward(x, 8);
  EXPECT_NEAR(x[0], 8.0, 1e-12);
  for (std::size_t i = 1; i < 64; ++i) EXPECT_NEAR(x[i], 0.0, 1e-12);
}

TEST(Haar2d, RejectsNonSquare) {
  std::vector<double> x(12);
  EXPECT_THROW(haar2d_forward(x, 3), std::invalid_argument);
}
