#include <gtest/gtest.h>

#include "stdsh/scenario.hpp"

using namespace stdsh::sim;

TEST(Scenario, TemplatesRoundTripThroughText) {
  for (int id = 1; id <= 5; ++id) {
    const ScenarioConfig c = scenario_template(id);
    const std::string text = format_scenario(c);
    const ScenarioConfig back = parse_scenario(text);
    EXPECT_EQ(format_scenario(back), text) << "scenario " << id;
    EXPECT_EQ(back.demand.turn_overrides.size(), c.demand.turn_overrides.size());
  }
}

TEST(Scenario, DefaultsFillOmittedKeys) {
  const ScenarioConfig c = parse_scenario("[scenario]\nid = 3\n[demand]\ncorridor_rate_vph = 500 # peak\n");
  EXPECT_EQ(c.id, 3);
  EXPECT_EQ(c.demand.corridor_rate_vph, 500.0);
  EXPECT_EQ(c.network.intersections, 6u);
  EXPECT_EQ(c.network.tram_stops.size(), 3u);
  EXPECT_EQ(c.horizon_s, 1800);
}

TEST(Scenario, TurnOverrideKeys) {
  const ScenarioConfig c = parse_scenario("[demand]\nturns.4.S = 0.2, 0.5, 0.3\n");
  const auto it = c.demand.turn_overrides.find({4, Side::kSouth});
  ASSERT_NE(it, c.demand.turn_overrides.end());
  EXPECT_EQ(it->second.through, 0.5);
}

TEST(Scenario, ErrorsCarryLineAndField) {
  try {
    parse_scenario("[network]\nintersections = 6\nspacing_m = fast\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "spacing_m");
  }
  try {
    parse_scenario("[demand]\n\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "bogus");
  }
  EXPECT_THROW(parse_scenario("[weather]\n"), ConfigError);
  EXPECT_THROW(parse_scenario("[demand\n"), ConfigError);
  EXPECT_THROW(parse_scenario("[demand]\ncorridor_rate_vph\n"), ConfigError);
  EXPECT_THROW(parse_scenario("[demand]\nside_turns = 0.5,0.5,0.5\n"), ConfigError);
  EXPECT_THROW(parse_scenario("[scenario]\nid = 9\n"), ConfigError);
  EXPECT_THROW(parse_scenario("[network]\ntram_stops = 1,7\n"), ConfigError);
  EXPECT_THROW(parse_scenario("[demand]\nskew_entries = N9\n"), ConfigError);
}

TEST(Scenario, TemplateIdsOutsideRangeRejected) {
  EXPECT_THROW(scenario_template(0), std::invalid_argument);
  EXPECT_THROW(scenario_template(6), std::invalid_argument);
}

TEST(Scenario, DemandLevelsOrdered) {
  EXPECT_LT(scenario_template(1).demand.corridor_rate_vph, scenario_template(3).demand.corridor_rate_vph);
  EXPECT_GT(scenario_template(2).demand.ramp_end_factor, 1.0);
  EXPECT_EQ(scenario_template(4).demand.skew_factor, 1.6);
  EXPECT_EQ(scenario_template(5).demand.skew_factor, 1.6);
}
