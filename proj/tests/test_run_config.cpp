#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "fmcwcs/run_config.hpp"

using namespace fmcwcs;

namespace {

std::string error_key(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

RunConfig from(const std::string& text) { return config_from_toml(toml::parse(text)); }

}  // namespace

TEST(RunConfig, DefaultsMirrorReferenceChirp) {
  RunConfig c;
  apply_preset(c, "desk");
  EXPECT_EQ(c.width, 32);
  EXPECT_DOUBLE_EQ(c.chirp.bandwidth_hz, 100e9);
  EXPECT_DOUBLE_EQ(c.chirp.period_s, 1e-3);
  EXPECT_DOUBLE_EQ(c.chirp.sample_rate_hz, 33.3e6);
  EXPECT_EQ(c.sweep.sample_ratios.size(), 20u);
  EXPECT_NO_THROW(c.validate());
  apply_preset(c, "paper");
  EXPECT_EQ(c.width, 128);
  EXPECT_EQ(c.sweep.sample_ratios.size(), 50u);
  EXPECT_EQ(c.sweep.psnr_levels.size(), 6u);
}

TEST(RunConfig, TomlRoundTripIsExact) {
  auto c = from(R"(
    preset = "paper"
    seed = 123456789
    [noise]
    psnr = 2.5
    [tv]
    alpha = 0.0123
    [sweep]
    sample_ratios = [0.1, 0.3]
    psnr_levels = [5, inf]
  )");
  EXPECT_EQ(c.width, 128);
  EXPECT_EQ(c.seed, 123456789u);
  EXPECT_TRUE(std::isinf(c.sweep.psnr_levels[1]));
  const auto again = from(config_to_toml(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
  EXPECT_EQ(config_to_toml(again), config_to_toml(c));
}

TEST(RunConfig, EveryKeyAcceptsItsOwnSerializedValue) {
  RunConfig c;
  apply_preset(c, "desk");
  c.seed = 5;
  const auto j = config_to_json(c);
  // Literal for each dotted key, taken from the serialized document.
  std::map<std::string, std::string> literals;
  std::istringstream doc(config_to_toml(c));
  std::string section;
  for (std::string line; std::getline(doc, line);) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2) + ".";
      continue;
    }
    const auto eq = line.find(" = ");
    literals[section + line.substr(0, eq)] = line.substr(eq + 3);
  }
  for (const auto& key : config_keys()) {
    ASSERT_TRUE(literals.count(key)) << key;
    const auto& literal = literals[key];
    RunConfig d = c;
    EXPECT_NO_THROW(set_config_value(d, key, literal)) << key << " = " << literal;
    EXPECT_EQ(config_to_json(d), j) << key;
  }
}

TEST(RunConfig, UnknownKeysAreRejected) {
  EXPECT_EQ(error_key([] { from("colour = 1"); }), "colour");
  EXPECT_EQ(error_key([] { from("[tv]\nalpah = 1"); }), "tv.alpah");
  EXPECT_EQ(error_key([] { from("[tv.extra]\nx = 1"); }), "tv.extra.x");
  RunConfig c;
  EXPECT_EQ(error_key([&] { apply_override(c, "nope=1"); }), "nope");
  EXPECT_EQ(error_key([&] { apply_override(c, "noequals"); }), "noequals");
}

TEST(RunConfig, TypeErrorsNameTheKey) {
  EXPECT_EQ(error_key([] { from("[noise]\npsnr = \"high\""); }), "noise.psnr");
  EXPECT_EQ(error_key([] { from("[tv]\nmax_inner_iters = 2.5"); }), "tv.max_inner_iters");
  EXPECT_EQ(error_key([] { from("[tv]\nmax_inner_iters = -3"); }), "tv.max_inner_iters");
  EXPECT_EQ(error_key([] { from("[sweep]\nraster = 1"); }), "sweep.raster");
  EXPECT_EQ(error_key([] { from("[sweep]\nsample_ratios = [0.1, \"x\"]"); }), "sweep.sample_ratios[1]");
  EXPECT_EQ(error_key([] { from("[chirp]\nwaveform = \"sine\""); }), "chirp.waveform");
  EXPECT_EQ(error_key([] { from("[recon]\nls_solver = \"newton\""); }), "recon.ls_solver");
  EXPECT_EQ(error_key([] { from("preset = \"huge\""); }), "preset");
}

TEST(RunConfig, RangeErrorsNameTheKey) {
  auto check = [](const std::string& text) {
    return error_key([&] { from(text).validate(); });
  };
  EXPECT_EQ(check("[chirp]\nbandwidth_hz = 0"), "chirp.bandwidth_hz");
  EXPECT_EQ(check("[chirp]\nsample_rate_hz = 1000.0"), "chirp.sample_rate_hz");
  EXPECT_EQ(check("[noise]\npsnr = -1"), "noise.psnr");
  EXPECT_EQ(check("[noise]\nlinewidth_hz = nan"), "noise.linewidth_hz");
  EXPECT_EQ(check("[acquisition]\nsample_ratio = 1.5"), "acquisition.sample_ratio");
  EXPECT_EQ(check("[scene]\nwidth = 0"), "scene.width");
  EXPECT_EQ(check("[recon]\nmask_threshold = 0"), "recon.mask_threshold");
  EXPECT_EQ(check("[recon]\nsupport_fraction = 0"), "recon.support_fraction");
  EXPECT_EQ(check("[tv]\npenalty_growth = 0.5"), "tv.penalty_growth");
  EXPECT_EQ(check("[sweep]\nsample_ratios = [0.5, 0.2]"), "sweep.sample_ratios");
  EXPECT_EQ(check("[sweep]\nrepetitions = 0"), "sweep.repetitions");
  EXPECT_EQ(check("[sweep]\npsnr_levels = []"), "sweep.psnr_levels");
  EXPECT_EQ(check("workers = 0"), "workers");
  EXPECT_EQ(check("[flux]\nrate_hz = 0"), "flux.rate_hz");
}

TEST(RunConfig, OverridesAcceptBareWordsAndTomlLiterals) {
  RunConfig c;
  apply_override(c, "scene.source=two-plane");
  EXPECT_EQ(c.scene, "two-plane");
  apply_override(c, "noise.psnr=inf");
  EXPECT_TRUE(std::isinf(c.noise.psnr));
  apply_override(c, "sweep.linewidths_hz=[1e5, 2e6]");
  EXPECT_EQ(c.sweep.linewidths_hz, (std::vector<double>{1e5, 2e6}));
  apply_override(c, "preset=paper");
  EXPECT_EQ(c.width, 128);
}

TEST(RunConfig, ProjectionCount) {
  RunConfig c;
  c.sample_ratio = 0.25;
  EXPECT_EQ(c.projection_count(1024), 256u);
  c.sample_ratio = 1e-6;
  EXPECT_EQ(c.projection_count(1024), 1u);
  c.projections = 77;
  EXPECT_EQ(c.projection_count(1024), 77u);
}

TEST(RunConfig, MissingFile) {
  EXPECT_EQ(error_key([] { load_config_file("/nonexistent/run.toml"); }), "config");
}
