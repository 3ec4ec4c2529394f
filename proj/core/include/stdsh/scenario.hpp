#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stdsh::sim {

enum class Side : unsigned char { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
enum class Turn : unsigned char { kLeft = 0, kThrough = 1, kRight = 2 };

struct TurnRatios {
  double left = 0.1;
  double through = 0.8;
  double right = 0.1;
};

struct NetworkConfig {
  std::size_t intersections = 6;
  double spacing_m = 300.0;       // between adjacent corridor intersections
  double entry_length_m = 200.0;  // corridor entry links at both ends
  double side_length_m = 150.0;   // side-street approaches
  std::vector<std::size_t> tram_stops = {1, 3, 5};
  int tram_dwell_s = 20;
};

struct SignalConfig {
  double saturation_veh_per_s = 0.5;  // per lane
  double car_speed_kmh = 50.0;        // cars and buses
  double tram_speed_kmh = 40.0;
  double speed_threshold_kmh = 5.0;
};

// Entry names: "W" / "E" are the corridor ends, "N<i>" / "S<i>" the side
// streets of intersection i (0-based).
struct DemandConfig {
  double corridor_rate_vph = 200.0;
  double side_rate_vph = 200.0;
  // Linear ramp applied to every car rate: factor goes from 1 at t=0 to
  // ramp_end_factor at t=ramp_duration_s, then stays there.
  double ramp_end_factor = 1.0;
  int ramp_duration_s = 1800;
  double skew_factor = 1.0;
  std::vector<std::string> skew_entries;
  int bus_headway_s = 600;  // 0 disables
  int bus_offset_s = 60;
  int tram_headway_s = 300;  // 0 disables
  int tram_offset_s = 30;
  TurnRatios arterial_turns{0.1, 0.8, 0.1};
  TurnRatios side_turns{0.1, 0.8, 0.1};
  // (intersection, approach side) -> ratios
  std::map<std::pair<std::size_t, Side>, TurnRatios> turn_overrides;
  double car_extra_occupancy_mean = 0.5;  // car occupancy = 1 + Poisson(mean)
  int bus_occupancy = 40;
  int tram_occupancy = 150;
};

struct ScenarioConfig {
  int id = 1;
  int horizon_s = 1800;
  NetworkConfig network;
  SignalConfig signal;
  DemandConfig demand;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, std::string field, const std::string& what)
      : std::runtime_error("config line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Sectioned key = value text with [network], [signal], [demand] and
// [scenario] blocks; '#' starts a comment. Omitted keys keep their defaults.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);
std::string format_scenario(const ScenarioConfig& config);

// Built-in desk-scale templates for scenarios 1..5.
ScenarioConfig scenario_template(int id);

// Throws std::invalid_argument describing the first violated constraint.
void validate(const ScenarioConfig& config);

std::string side_name(Side side);

}  // namespace stdsh::sim
