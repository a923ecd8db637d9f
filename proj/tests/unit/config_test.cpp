#include <gtest/gtest.h>

#include "urbanrisk/config.hpp"
#include "urbanrisk/errors.hpp"

namespace urbanrisk {
namespace {

#ifndef URBANRISK_CONFIG_DIR
#define URBANRISK_CONFIG_DIR "configs"
#endif

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(default_config().validate()); }

TEST(Config, ShippedConfigsLoad) {
  const auto desk = load_config(URBANRISK_CONFIG_DIR "/desk.toml");
  ASSERT_EQ(desk.cities.size(), 1u);
  EXPECT_EQ(desk.cities[0].n_buildings, 1000);
  EXPECT_EQ(desk.split.regime, eval::SplitRegime::kTemporal);
  EXPECT_EQ(desk.split.bounds.train_end, 2021);
  EXPECT_DOUBLE_EQ(desk.policy.depth_impassable_m, 0.5);
  const auto quick = load_config(URBANRISK_CONFIG_DIR "/quick.toml");
  EXPECT_EQ(quick.cities[0].city_id, "smk");
  EXPECT_EQ(quick.cities[0].n_buildings, 150);
}

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.cities.size(), default_config().cities.size());
  EXPECT_EQ(c.time_budget_s, default_config().time_budget_s);
}

TEST(Config, UnknownKeysAreNamed) {
  try {
    parse_config("[hazard]\ndepth_free = 0.1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("hazard.depth_free"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_config("bogus = 1\n"), ConfigError);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_config("[split]\nregime = \"random\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[hazard]\ndepth_free_m = 0.6\ndepth_impassable_m = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("time_budget_s = \"soon\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[split]\nregime = \"unseen_city\"\nheld_out_city = \"nowhere\"\n"), ConfigError);
  EXPECT_THROW(parse_config("this is not toml"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/urbanrisk.toml"), ConfigError);
}

}  // namespace
}  // namespace urbanrisk
