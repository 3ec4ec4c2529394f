#include "stdsh/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace stdsh::sim {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Field {
  std::size_t line;
  std::string key;
  std::string_view value;

  [[noreturn]] void fail(const std::string& why) const { throw ConfigError(line, key, why); }

  double real() const {
    double v = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail("expected a number, got '" + std::string(value) + "'");
    return v;
  }

  long long integer() const {
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) fail("expected an integer, got '" + std::string(value) + "'");
    return v;
  }

  int non_negative_int() const {
    const long long v = integer();
    if (v < 0 || v > 1'000'000'000) fail("expected a non-negative integer");
    return static_cast<int>(v);
  }

  std::vector<std::size_t> index_list() const {
    std::vector<std::size_t> out;
    if (value.empty()) return out;
    for (auto part : split(value, ',')) {
      Field f{line, key, part};
      const long long v = f.integer();
      if (v < 0) fail("indices must be non-negative");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  }

  TurnRatios ratios() const {
    const auto parts = split(value, ',');
    if (parts.size() != 3) fail("expected three ratios 'left,through,right'");
    TurnRatios r;
    r.left = Field{line, key, parts[0]}.real();
    r.through = Field{line, key, parts[1]}.real();
    r.right = Field{line, key, parts[2]}.real();
    if (r.left < 0 || r.through < 0 || r.right < 0) fail("ratios must be non-negative");
    if (std::abs(r.left + r.through + r.right - 1.0) > 1e-9) fail("ratios must sum to 1");
    return r;
  }
};

Side parse_side(const Field& f, std::string_view s) {
  if (s == "N") return Side::kNorth;
  if (s == "E") return Side::kEast;
  if (s == "S") return Side::kSouth;
  if (s == "W") return Side::kWest;
  f.fail("unknown approach side '" + std::string(s) + "'");
}

void apply_field(ScenarioConfig& c, std::string_view section, const Field& f) {
  auto& n = c.network;
  auto& s = c.signal;
  auto& d = c.demand;
  const std::string& k = f.key;
  if (section == "network") {
    if (k == "intersections") {
      const long long v = f.integer();
      if (v < 1 || v > 64) f.fail("intersections must be in [1, 64]");
      n.intersections = static_cast<std::size_t>(v);
    } else if (k == "spacing_m") {
      n.spacing_m = f.real();
    } else if (k == "entry_length_m") {
      n.entry_length_m = f.real();
    } else if (k == "side_length_m") {
      n.side_length_m = f.real();
    } else if (k == "tram_stops") {
      n.tram_stops = f.index_list();
    } else if (k == "tram_dwell_s") {
      n.tram_dwell_s = f.non_negative_int();
    } else {
      f.fail("unknown key in [network]");
    }
  } else if (section == "signal") {
    if (k == "saturation_veh_per_s") {
      s.saturation_veh_per_s = f.real();
    } else if (k == "car_speed_kmh") {
      s.car_speed_kmh = f.real();
    } else if (k == "tram_speed_kmh") {
      s.tram_speed_kmh = f.real();
    } else if (k == "speed_threshold_kmh") {
      s.speed_threshold_kmh = f.real();
    } else {
      f.fail("unknown key in [signal]");
    }
  } else if (section == "demand") {
    if (k == "corridor_rate_vph") {
      d.corridor_rate_vph = f.real();
    } else if (k == "side_rate_vph") {
      d.side_rate_vph = f.real();
    } else if (k == "ramp_end_factor") {
      d.ramp_end_factor = f.real();
    } else if (k == "ramp_duration_s") {
      d.ramp_duration_s = f.non_negative_int();
    } else if (k == "skew_factor") {
      d.skew_factor = f.real();
    } else if (k == "skew_entries") {
      d.skew_entries.clear();
      if (!f.value.empty())
        for (auto e : split(f.value, ',')) d.skew_entries.emplace_back(e);
    } else if (k == "bus_headway_s") {
      d.bus_headway_s = f.non_negative_int();
    } else if (k == "bus_offset_s") {
      d.bus_offset_s = f.non_negative_int();
    } else if (k == "tram_headway_s") {
      d.tram_headway_s = f.non_negative_int();
    } else if (k == "tram_offset_s") {
      d.tram_offset_s = f.non_negative_int();
    } else if (k == "arterial_turns") {
      d.arterial_turns = f.ratios();
    } else if (k == "side_turns") {
      d.side_turns = f.ratios();
    } else if (k.rfind("turns.", 0) == 0) {
      const auto parts = split(std::string_view(k).substr(6), '.');
      if (parts.size() != 2) f.fail("expected turns.<intersection>.<N|E|S|W>");
      const long long i = Field{f.line, k, parts[0]}.integer();
      if (i < 0) f.fail("intersection index must be non-negative");
      d.turn_overrides[{static_cast<std::size_t>(i), parse_side(f, parts[1])}] = f.ratios();
    } else if (k == "car_extra_occupancy_mean") {
      d.car_extra_occupancy_mean = f.real();
    } else if (k == "bus_occupancy") {
      d.bus_occupancy = f.non_negative_int();
    } else if (k == "tram_occupancy") {
      d.tram_occupancy = f.non_negative_int();
    } else {
      f.fail("unknown key in [demand]");
    }
  } else if (section == "scenario") {
    if (k == "id") {
      const long long v = f.integer();
      if (v < 1 || v > 5) f.fail("scenario id must be in [1, 5]");
      c.id = static_cast<int>(v);
    } else if (k == "horizon_s") {
      const int v = f.non_negative_int();
      if (v < 0) f.fail("horizon must be >= 0");
      c.horizon_s = v;
    } else {
      f.fail("unknown key in [scenario]");
    }
  } else {
    f.fail("key outside of a known section");
  }
}

std::string join_indices(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string num(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string ratios_text(const TurnRatios& r) { return num(r.left) + ',' + num(r.through) + ',' + num(r.right); }

bool valid_entry(const std::string& name, std::size_t n) {
  if (name == "W" || name == "E") return true;
  if (name.size() < 2 || (name[0] != 'N' && name[0] != 'S')) return false;
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
  return ec == std::errc() && ptr == name.data() + name.size() && idx < n;
}

}  // namespace

std::string side_name(Side side) {
  static constexpr const char* kNames[] = {"N", "E", "S", "W"};
  return kNames[static_cast<int>(side)];
}

ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig c;
  std::string section;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(line_no, std::string(line), "unterminated section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section != "network" && section != "signal" && section != "demand" && section != "scenario") {
          throw ConfigError(line_no, section, "unknown section");
        }
      } else {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, std::string(line), "expected key = value");
        Field f{line_no, std::string(trim(line.substr(0, eq))), trim(line.substr(eq + 1))};
        if (f.key.empty()) throw ConfigError(line_no, "", "empty key");
        apply_field(c, section, f);
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  try {
    validate(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(line_no, "validation", e.what());
  }
  return c;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario(const ScenarioConfig& c) {
  std::ostringstream os;
  const auto& n = c.network;
  const auto& s = c.signal;
  const auto& d = c.demand;
  os << "[scenario]\nid = " << c.id << "\nhorizon_s = " << c.horizon_s << "\n\n";
  os << "[network]\nintersections = " << n.intersections << "\nspacing_m = " << num(n.spacing_m)
     << "\nentry_length_m = " << num(n.entry_length_m) << "\nside_length_m = " << num(n.side_length_m)
     << "\ntram_stops = " << join_indices(n.tram_stops) << "\ntram_dwell_s = " << n.tram_dwell_s << "\n\n";
  os << "[signal]\nsaturation_veh_per_s = " << num(s.saturation_veh_per_s) << "\ncar_speed_kmh = " << num(s.car_speed_kmh)
     << "\ntram_speed_kmh = " << num(s.tram_speed_kmh) << "\nspeed_threshold_kmh = " << num(s.speed_threshold_kmh) << "\n\n";
  os << "[demand]\ncorridor_rate_vph = " << num(d.corridor_rate_vph) << "\nside_rate_vph = " << num(d.side_rate_vph)
     << "\nramp_end_factor = " << num(d.ramp_end_factor) << "\nramp_duration_s = " << d.ramp_duration_s
     << "\nskew_factor = " << num(d.skew_factor) << "\nskew_entries = ";
  for (std::size_t i = 0; i < d.skew_entries.size(); ++i) os << (i ? "," : "") << d.skew_entries[i];
  os << "\nbus_headway_s = " << d.bus_headway_s << "\nbus_offset_s = " << d.bus_offset_s
     << "\ntram_headway_s = " << d.tram_headway_s << "\ntram_offset_s = " << d.tram_offset_s
     << "\narterial_turns = " << ratios_text(d.arterial_turns) << "\nside_turns = " << ratios_text(d.side_turns);
  for (const auto& [key, r] : d.turn_overrides) {
    os << "\nturns." << key.first << '.' << side_name(key.second) << " = " << ratios_text(r);
  }
  os << "\ncar_extra_occupancy_mean = " << num(d.car_extra_occupancy_mean) << "\nbus_occupancy = " << d.bus_occupancy
     << "\ntram_occupancy = " << d.tram_occupancy << "\n";
  return os.str();
}

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
  };
  const auto& n = c.network;
  const auto& s = c.signal;
  const auto& d = c.demand;
  require(c.id >= 1 && c.id <= 5, "scenario id must be in [1, 5]");
  require(c.horizon_s >= 0, "horizon must be >= 0");
  require(n.intersections >= 1, "need at least one intersection");
  require(n.spacing_m > 0 && n.entry_length_m > 0 && n.side_length_m > 0, "link lengths must be positive");
  for (std::size_t stop : n.tram_stops) require(stop < n.intersections, "tram stop beyond the corridor");
  require(s.saturation_veh_per_s > 0 && s.saturation_veh_per_s <= 1.0, "saturation must be in (0, 1] veh/s");
  require(s.car_speed_kmh > 0 && s.tram_speed_kmh > 0, "free-flow speeds must be positive");
  require(s.speed_threshold_kmh > 0, "speed threshold must be positive");
  require(d.corridor_rate_vph >= 0 && d.side_rate_vph >= 0, "arrival rates must be >= 0");
  require(d.ramp_end_factor >= 0 && d.skew_factor >= 0, "rate multipliers must be >= 0");
  require(d.car_extra_occupancy_mean >= 0, "occupancy mean must be >= 0");
  require(d.bus_occupancy >= 1 && d.tram_occupancy >= 1, "transit occupancy must be >= 1");
  auto check_ratios = [&](const TurnRatios& r) {
    require(r.left >= 0 && r.through >= 0 && r.right >= 0, "turning ratios must be >= 0");
    require(std::abs(r.left + r.through + r.right - 1.0) <= 1e-9, "turning ratios must sum to 1");
  };
  check_ratios(d.arterial_turns);
  check_ratios(d.side_turns);
  for (const auto& [key, r] : d.turn_overrides) {
    require(key.first < n.intersections, "turning override beyond the corridor");
    check_ratios(r);
  }
  for (const auto& e : d.skew_entries) require(valid_entry(e, n.intersections), "unknown entry '" + e + "'");
}

ScenarioConfig scenario_template(int id) {
  ScenarioConfig c;
  c.id = id;
  auto& d = c.demand;
  switch (id) {
    case 1:  // off-peak
      d.corridor_rate_vph = d.side_rate_vph = 200.0;
      break;
    case 2:  // off-peak to peak
      d.corridor_rate_vph = d.side_rate_vph = 200.0;
      d.ramp_end_factor = 2.5;
      d.ramp_duration_s = 1800;
      break;
    case 3:  // peak
      d.corridor_rate_vph = d.side_rate_vph = 500.0;
      break;
    case 4:  // inbound toward the area around intersection 2
      d.corridor_rate_vph = d.side_rate_vph = 350.0;
      d.skew_factor = 1.6;
      d.skew_entries = {"W", "E"};
      d.turn_overrides[{2, Side::kWest}] = TurnRatios{0.3, 0.4, 0.3};
      d.turn_overrides[{2, Side::kEast}] = TurnRatios{0.3, 0.4, 0.3};
      break;
    case 5:  // outbound away from the area around intersection 2
      d.corridor_rate_vph = d.side_rate_vph = 350.0;
      d.skew_factor = 1.6;
      d.skew_entries = {"N2", "S2"};
      d.turn_overrides[{2, Side::kNorth}] = TurnRatios{0.45, 0.1, 0.45};
      d.turn_overrides[{2, Side::kSouth}] = TurnRatios{0.45, 0.1, 0.45};
      break;
    default:
      throw std::invalid_argument("scenario id must be in [1, 5]");
  }
  return c;
}

}  // namespace stdsh::sim
