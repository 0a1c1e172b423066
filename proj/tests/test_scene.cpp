#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "fmcwcs/scene.hpp"

using namespace fmcwcs;

namespace {

PixelReturns returns_for(const Scene& s, double total_power = 1.0) {
  return returns_from_scene(s, IlluminationProfile::gaussian(s.width, s.height, total_power),
                            CollectionGeometry{}, paper_chirp());
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fmcwcs_test_" + name);
}

}  // namespace

TEST(DemoScene, ReferenceLayout) {
  const auto s = paper_demo_scene(128, 128);
  EXPECT_EQ(s.width, 128);
  EXPECT_EQ(s.height, 128);
  EXPECT_NEAR(s.max_depth(), 22.0, 0.5);
  EXPECT_TRUE(s.has_label("toroid"));
  std::set<double> depths;
  for (double d : s.depth_m)
    if (d > 0.0) depths.insert(d);
  EXPECT_GE(depths.size(), 4u);
  EXPECT_NO_THROW(s.validate(paper_chirp().max_range_m()));
  // Each named object covers pixels at the desk-scale resolution too.
  const auto desk = paper_demo_scene(32, 32);
  for (const auto& [id, name] : desk.label_names)
    EXPECT_GE(desk.pixels_with_label(name).size(), 8u) << name;
}

TEST(Illumination, GaussianTotalsConfiguredPower) {
  const auto g = IlluminationProfile::gaussian(128, 128, 1.0);
  EXPECT_NEAR(g.total(), 1.0, 1e-12);
  double peak = 0.0;
  for (double p : g.power_w) {
    EXPECT_GE(p, 0.0);
    peak = std::max(peak, p);
  }
  EXPECT_GT(peak, 50e-6);
  EXPECT_LT(peak, 200e-6);
}

TEST(ReturnsFromScene, ZeroReflectivityGivesNoLight) {
  auto s = single_plane_scene(8, 8, 10.0);
  std::fill(s.reflectivity.begin(), s.reflectivity.end(), 0.0);
  const auto r = returns_for(s);
  for (const auto& ret : r.returns) EXPECT_EQ(ret.amplitude, 0.0);
}

TEST(ReturnsFromScene, InverseSquareLaw) {
  const auto near = single_plane_scene(8, 8, 5.0);
  const auto far = single_plane_scene(8, 8, 10.0);
  const auto rn = returns_for(near);
  const auto rf = returns_for(far);
  for (std::size_t i = 0; i < rn.size(); ++i)
    EXPECT_NEAR(rf.received_power_w[i], rn.received_power_w[i] / 4.0,
                1e-12 * rn.received_power_w[i]);
}

TEST(ReturnsFromScene, DemoPowersAreNanowattScale) {
  const auto r = returns_for(paper_demo_scene(128, 128));
  double peak = 0.0, total = 0.0;
  for (double p : r.received_power_w) {
    peak = std::max(peak, p);
    total += p;
  }
  EXPECT_GT(peak, 1e-11);
  EXPECT_LT(peak, 1e-8);
  EXPECT_LE(total, 1.0);
}

TEST(ReturnsFromScene, AmplitudeScalesWithSqrtOfIllumination) {
  const auto s = paper_demo_scene(16, 16);
  const auto a = returns_for(s, 1.0);
  const auto b = returns_for(s, 9.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(b.returns[i].amplitude, 3.0 * a.returns[i].amplitude,
                1e-12 * (1.0 + b.returns[i].amplitude));
    EXPECT_EQ(b.returns[i].delay_s, a.returns[i].delay_s);
  }
}

TEST(ReturnsFromScene, RejectsDepthBeyondRange) {
  const auto s = single_plane_scene(4, 4, 30.0);
  EXPECT_THROW(returns_for(s), std::invalid_argument);
}

TEST(ReturnsFromScene, RejectsMismatchedIllumination) {
  const auto s = single_plane_scene(4, 4, 10.0);
  EXPECT_THROW(returns_from_scene(s, IlluminationProfile::uniform(8, 8), CollectionGeometry{},
                                  paper_chirp()),
               std::invalid_argument);
}

TEST(SceneFile, HandWrittenSinglePixel) {
  std::istringstream in(R"(fmcw-scene 1
width 4
height 4
depth_scale 1
depth
0 0 0 0
0 10 0 0
0 0 0 0
0 0 0 0
reflectivity
0 0 0 0
0 0.5 0 0
0 0 0 0
0 0 0 0
)");
  const auto s = parse_scene_text(in);
  const auto r = returns_from_scene(s, IlluminationProfile::uniform(4, 4), CollectionGeometry{},
                                    paper_chirp());
  EXPECT_DOUBLE_EQ(r.returns[5].delay_s, 2.0 * 10.0 / 2.998e8);
  for (std::size_t i = 0; i < 16; ++i) {
    if (i != 5) {
      EXPECT_EQ(r.returns[i].amplitude, 0.0);
    }
  }
}

TEST(SceneFile, AllZeroSceneIsValid) {
  std::ostringstream text;
  text << "fmcw-scene 1\nwidth 2\nheight 2\ndepth_scale 1\ndepth\n0 0\n0 0\nreflectivity\n0 0\n0 0\n";
  std::istringstream in(text.str());
  const auto s = parse_scene_text(in);
  const auto r = returns_from_scene(s, IlluminationProfile::uniform(2, 2), CollectionGeometry{},
                                    paper_chirp());
  for (const auto& ret : r.returns) EXPECT_EQ(ret.amplitude, 0.0);
}

TEST(SceneFile, MalformedInputs) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_scene_text(in);
  };
  EXPECT_THROW(parse("fmcw-scene 1\nwidth 2\nheight 2\ndepth\n0 0 0\nreflectivity\n0 0 0 0\n"),
               std::invalid_argument);
  EXPECT_THROW(parse("fmcw-scene 1\nwidth 1\nheight 1\ndepth\n-3\nreflectivity\n0.5\n"),
               std::invalid_argument);
  EXPECT_THROW(parse("fmcw-scene 1\nwidth 1\nheight 1\ndepth\n3\nreflectivity\n1.5\n"),
               std::invalid_argument);
  EXPECT_THROW(parse("fmcw-scene 1\nwidth 1\nheight 1\ndepth\n3\nreflectivity\nabc\n"),
               std::invalid_argument);
  EXPECT_THROW(parse("not-a-scene\n"), std::invalid_argument);
  EXPECT_THROW(load_scene(temp_file("does_not_exist.txt")), std::runtime_error);
}

TEST(SceneFile, TextRoundtrip) {
  const auto s = paper_demo_scene(32, 32);
  const auto path = temp_file("roundtrip.scene");
  save_scene(s, path);
  EXPECT_EQ(load_scene(path), s);
  std::filesystem::remove(path);
}

TEST(SceneFile, JsonRoundtrip) {
  const auto s = two_plane_scene(16, 8, 8.0, 16.0);
  const auto path = temp_file("roundtrip.json");
  save_scene(s, path);
  EXPECT_EQ(load_scene(path), s);
  std::filesystem::remove(path);
}

TEST(BuiltinScenes, Generators) {
  const auto plane = builtin_scene("single-plane", 8, 8);
  for (double d : plane.depth_m) EXPECT_EQ(d, 10.0);
  EXPECT_TRUE(builtin_scene("torus-only", 32, 32).has_label("toroid"));
  EXPECT_THROW(builtin_scene("nope", 8, 8), std::invalid_argument);
  EXPECT_THROW(builtin_scene("paper-demo", 0, 8), std::invalid_argument);
}

TEST(Scene, MissingLabel) {
  EXPECT_THROW(single_plane_scene(4, 4, 1.0).pixels_with_label("toroid"), std::invalid_argument);
}
