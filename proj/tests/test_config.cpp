#include <doctest.h>

#include <string>

#include "solnoise/config.hpp"

using namespace solnoise;

TEST_CASE("defaults") {
  auto cfg = parse_config("");
  CHECK(cfg.params.D == 1.0);
  CHECK(cfg.params.delta == -0.01);
  CHECK(cfg.params.epsilon == 1.8);
  CHECK(cfg.params.beta == 0.5);
  CHECK(cfg.params.mu == -0.05);
  CHECK(cfg.params.nu == 0.0);
  CHECK(cfg.grid_n == 512);
  CHECK(cfg.grid_window == 40.0);
  CHECK(cfg.backgrounds.size() == 3);
  CHECK(cfg.slot_width == 0.3);
  CHECK(cfg.eta_z == 0.4);
  CHECK(cfg.seed == 12345);
}

TEST_CASE("parsing: comments, whitespace, overrides") {
  auto cfg = parse_config(
      "# leading comment\n"
      "  cgle.delta = -0.02   # trailing comment\n"
      "\n"
      "grid.n=128\n"
      "pair.backgrounds = single , explicit\n"
      "pair.theta = 1.5707963267948966\n"
      "seed = 77\n");
  CHECK(cfg.params.delta == -0.02);
  CHECK(cfg.grid_n == 128);
  REQUIRE(cfg.backgrounds.size() == 2);
  CHECK(cfg.backgrounds[0] == PairSelector::Single);
  CHECK(cfg.backgrounds[1] == PairSelector::Explicit);
  CHECK(cfg.seed == 77);
}

TEST_CASE("parsing rejects malformed input with line numbers") {
  using doctest::Contains;
  CHECK_THROWS_WITH_AS(parse_config("cgle.delta = -0.01\nbogus.key = 1\n"),
                       Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("\n\nno equals sign here\n"),
                       Contains("line 3"), ConfigError);
  CHECK_THROWS_AS(parse_config("cgle.delta = not_a_number\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid.n = 12.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("pair.backgrounds = diagonal\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid.n = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("grid.window = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("z.dz = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("z.stride = 0\n"), ConfigError);
}

TEST_CASE("serialize / parse roundtrip is exact") {
  auto cfg = parse_config(
      "cgle.delta = -0.012345678901234567\n"
      "grid.window = 37.5\n"
      "pair.backgrounds = out_of_phase,single\n"
      "relax.tol = 1e-7\n"
      "out.dir = some/dir\n");
  const std::string s1 = serialize_config(cfg);
  auto back = parse_config(s1);
  CHECK(serialize_config(back) == s1);
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("hash distinguishes configs and is stable") {
  auto a = parse_config("");
  auto b = parse_config("seed = 12346\n");
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a) == config_hash(parse_config("")));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("builtin presets parse") {
  const auto& presets = builtin_presets();
  for (const char* name : {"fig1", "fig2", "fig3", "validate"}) {
    REQUIRE(presets.count(name) == 1);
    auto cfg = parse_config(presets.at(name));
    CHECK(cfg.out_dir == name);
  }
  CHECK(parse_config(presets.at("fig2")).eta_z == 0.4);
  CHECK(parse_config(presets.at("fig3")).backgrounds.size() == 4);
  CHECK(parse_config(presets.at("validate")).grid_n == 64);
}

TEST_CASE("selector names") {
  CHECK(std::string(pair_selector_name(PairSelector::Single)) == "single");
  CHECK(std::string(pair_selector_name(PairSelector::InPhase)) == "in_phase");
  CHECK(std::string(pair_selector_name(PairSelector::Orthogonal)) == "orthogonal");
  CHECK(std::string(pair_selector_name(PairSelector::OutOfPhase)) == "out_of_phase");
  CHECK(std::string(pair_selector_name(PairSelector::Explicit)) == "explicit");
}
