#include <gtest/gtest.h>

#include <sstream>

#include "iclust/experiment.hpp"

using namespace iclust;

TEST(PatternCsv, RoundTripIsExact) {
  const auto x = sample_poisson(200, Window::unit(), RandomStream(1));
  std::ostringstream os;
  write_pattern_csv(os, x);
  EXPECT_EQ(os.str().substr(0, 4), "x,y\n");
  std::istringstream is(os.str());
  EXPECT_EQ(read_pattern_csv(is), x);
}

TEST(KernelJson, RoundTrip) {
  auto k = MixtureKernel::gaussian(0.25, 0.01) + MixtureKernel::gaussian(-1.0 / 3.0, 0.2);
  k.set_constant(0.1);
  k.set_dirac(0.5);
  EXPECT_EQ(kernel_from_json(json::parse(kernel_to_json(k).dump())), k);
}

TEST(Config, PresetsRoundTrip) {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    EXPECT_EQ(parse_config(config_to_json(c).dump(2)), c) << name;
  }
  EXPECT_EQ(preset("fig1").variants.size(), 3u);
  EXPECT_THROW(preset("nope"), ConfigurationError);
}

TEST(Config, SyntaxErrorReportsLine) {
  const std::string text = "{\n  \"model\": {\n    \"dim\": 2,\n    \"p\": 1.0,,\n  }\n}\n";
  try {
    parse_config(text);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line, 4);
  }
}

TEST(Config, ValidationErrorReportsLine) {
  const std::string text = R"({
  "model": {
    "count": {"law": "poisson", "mean": 0.5},
    "displacement": {"kind": "gaussian", "sigma": 0.1}
  },
  "run": {
    "replicates": 0
  }
})";
  try {
    parse_config(text);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line, 7);
    EXPECT_NE(std::string(e.what()).find("run.replicates"), std::string::npos);
  }
}

TEST(Config, UnknownKindsAreRejected) {
  EXPECT_THROW(parse_config(R"({"model": {"count": {"law": "geometric", "mean": 1}}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"model": {"count": {"law": "poisson", "mean": 1},
      "displacement": {"kind": "gaussian", "sigma": 0.1}, "noise": {"kind": "cox"}}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"model": {"count": {"law": "poisson", "mean": 1},
      "displacement": {"kind": "gaussian", "sigma": 0.1}}, "run": {"mode": "equilibrium"}})"), ConfigError);
}

TEST(Config, VariantsMergeOntoBaseModel) {
  const auto c = parse_config(R"({
    "model": {"count": {"law": "poisson", "mean": 0.5},
              "displacement": {"kind": "gaussian", "sigma": 0.1},
              "noise": {"kind": "poisson", "rho": 10}},
    "variants": [{"name": "a"}, {"name": "b", "model": {"noise": {"kind": "dpp", "tau": 0.05}}}]
  })");
  ASSERT_EQ(c.variants.size(), 2u);
  EXPECT_EQ(c.variants[0].params.noise, NoiseSpec::poisson(10));
  EXPECT_EQ(c.variants[1].params.noise, NoiseSpec::dpp(10, 0.05, 1));
}

TEST(Theory, Fig1OrderingAndFig3Convergence) {
  const auto fig1 = preset("fig1");
  const auto r = theory_r_grid(fig1);
  std::map<std::string, MixtureKernel> k;
  for (const auto& v : fig1.variants) k.emplace(v.name, pcf_generation_n(pcf_model(v, 1, PcfConvention::kKernelAnchored), 1));
  for (double x : r) {
    EXPECT_LT(k.at("dpp")(x), k.at("poisson")(x)) << x;
    EXPECT_LT(k.at("poisson")(x), k.at("wper")(x)) << x;
  }
  const auto fig3 = preset("fig3");
  for (const auto& v : fig3.variants) {
    const auto g8 = pcf_generation_n(pcf_model(v, 8, PcfConvention::kKernelAnchored), 8);
    const auto g16 = pcf_generation_n(pcf_model(v, 16, PcfConvention::kKernelAnchored), 16);
    double m = 0.0;
    for (double x : theory_r_grid(fig3)) m = std::max(m, std::abs(g8(x) - g16(x)));
    EXPECT_LT(m, 1e-3) << v.name;
  }
}
