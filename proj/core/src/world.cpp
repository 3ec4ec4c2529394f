#include "stdsh/world.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace stdsh::sim {
namespace {

constexpr Side kSides[] = {Side::kNorth, Side::kEast, Side::kSouth, Side::kWest};

Phase phase_for(Side side, LaneKind kind) {
  const bool ns = side == Side::kNorth || side == Side::kSouth;
  if (kind == LaneKind::kTram) return 2;
  if (ns) return kind == LaneKind::kRight ? 1 : 0;
  return kind == LaneKind::kRight ? 3 : 2;
}

}  // namespace

Side exit_side(Side approach, Turn turn) {
  const int a = static_cast<int>(approach);
  switch (turn) {
    case Turn::kThrough:
      return static_cast<Side>((a + 2) % 4);
    case Turn::kLeft:
      return static_cast<Side>((a + 1) % 4);
    case Turn::kRight:
      return static_cast<Side>((a + 3) % 4);
  }
  return approach;
}

World::World(ScenarioConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
  validate(config_);
  build_network();
}

World load_scenario(const ScenarioConfig& config, std::uint64_t seed) { return World(config, seed); }

void World::build_network() {
  const auto& net = config_.network;
  const std::size_t n = net.intersections;
  approach_lanes_.assign(n, {});
  controllers_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    controllers_[i].intersection = i;
    auto approach_length = [&](Side side) {
      if (side == Side::kNorth || side == Side::kSouth) return net.side_length_m;
      if (side == Side::kWest) return i == 0 ? net.entry_length_m : net.spacing_m;
      return i + 1 == n ? net.entry_length_m : net.spacing_m;
    };
    auto add_lane = [&](Side side, LaneKind kind) {
      Lane lane;
      lane.intersection = i;
      lane.side = side;
      lane.kind = kind;
      lane.length_m = approach_length(side);
      lane.phase = phase_for(side, kind);
      lane.has_tram_stop = kind == LaneKind::kTram &&
                           std::find(net.tram_stops.begin(), net.tram_stops.end(), i) != net.tram_stops.end();
      approach_lanes_[i].push_back(lanes_.size());
      lanes_.push_back(std::move(lane));
    };
    for (Side side : kSides) {
      add_lane(side, LaneKind::kThroughLeft);
      add_lane(side, LaneKind::kRight);
    }
    add_lane(Side::kEast, LaneKind::kTram);
    add_lane(Side::kWest, LaneKind::kTram);
  }

  const auto& d = config_.demand;
  auto skewed = [&](const std::string& name, double rate) {
    const bool hit = std::find(d.skew_entries.begin(), d.skew_entries.end(), name) != d.skew_entries.end();
    return hit ? rate * d.skew_factor : rate;
  };
  entries_.push_back({0, Side::kWest, skewed("W", d.corridor_rate_vph)});
  entries_.push_back({n - 1, Side::kEast, skewed("E", d.corridor_rate_vph)});
  for (std::size_t i = 0; i < n; ++i) {
    entries_.push_back({i, Side::kNorth, skewed("N" + std::to_string(i), d.side_rate_vph)});
    entries_.push_back({i, Side::kSouth, skewed("S" + std::to_string(i), d.side_rate_vph)});
  }
}

std::size_t World::lane_index(std::size_t intersection, Side side, LaneKind kind) const {
  if (intersection >= approach_lanes_.size()) throw std::out_of_range("unknown intersection");
  for (std::size_t l : approach_lanes_[intersection]) {
    if (lanes_[l].side == side && lanes_[l].kind == kind) return l;
  }
  throw std::out_of_range("no such lane at intersection " + std::to_string(intersection));
}

std::span<const std::size_t> World::approach_lanes(std::size_t intersection) const {
  if (intersection >= approach_lanes_.size()) {
    throw std::out_of_range("unknown intersection " + std::to_string(intersection));
  }
  return approach_lanes_[intersection];
}

const SignalController& World::controller(std::size_t intersection) const {
  if (intersection >= controllers_.size()) {
    throw std::out_of_range("unknown intersection " + std::to_string(intersection));
  }
  return controllers_[intersection];
}

double World::free_flow_kmh(Mode mode) const {
  return mode == Mode::kTram ? config_.signal.tram_speed_kmh : config_.signal.car_speed_kmh;
}

double World::speed_kmh(const Vehicle& v) const {
  return v.state == VehicleState::kMoving ? free_flow_kmh(v.mode) : 0.0;
}

bool World::is_delayed(const Vehicle& v) const {
  if (v.state == VehicleState::kExited || v.state == VehicleState::kDwelling) return false;
  return speed_kmh(v) < config_.signal.speed_threshold_kmh;
}

double World::rate_factor(int t) const {
  const auto& d = config_.demand;
  if (d.ramp_duration_s <= 0) return d.ramp_end_factor;
  const double frac = std::min(1.0, static_cast<double>(t) / d.ramp_duration_s);
  return 1.0 + (d.ramp_end_factor - 1.0) * frac;
}

Turn World::draw_turn(std::size_t intersection, Side side) {
  const auto& d = config_.demand;
  TurnRatios r = (side == Side::kEast || side == Side::kWest) ? d.arterial_turns : d.side_turns;
  if (auto it = d.turn_overrides.find({intersection, side}); it != d.turn_overrides.end()) r = it->second;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  if (u < r.left) return Turn::kLeft;
  if (u < r.left + r.through) return Turn::kThrough;
  return Turn::kRight;
}

void World::enter_approach(Vehicle& v, std::size_t intersection, Side side) {
  v.turn = v.mode == Mode::kCar ? draw_turn(intersection, side) : Turn::kThrough;
  const LaneKind kind = v.mode == Mode::kTram      ? LaneKind::kTram
                        : v.turn == Turn::kRight ? LaneKind::kRight
                                                 : LaneKind::kThroughLeft;
  v.lane = lane_index(intersection, side, kind);
  v.position_m = 0.0;
  v.state = VehicleState::kMoving;
  v.dwelled_on_lane = false;
  v.dwell_left = 0;
}

void World::spawn_vehicle(Mode mode, std::size_t intersection, Side side) {
  const auto& d = config_.demand;
  Vehicle v;
  v.id = vehicles_.size();
  v.mode = mode;
  v.spawn_time = t_;
  switch (mode) {
    case Mode::kCar:
      v.occupancy = 1;
      if (d.car_extra_occupancy_mean > 0.0) {
        v.occupancy += std::poisson_distribution<int>(d.car_extra_occupancy_mean)(rng_);
      }
      break;
    case Mode::kBus:
      v.occupancy = d.bus_occupancy;
      break;
    case Mode::kTram:
      v.occupancy = d.tram_occupancy;
      break;
  }
  enter_approach(v, intersection, side);
  active_.push_back(v.id);
  vehicles_.push_back(v);
  ++spawned_total_;
}

std::size_t World::insert_vehicle(Mode mode, int occupancy, std::size_t lane, double position_m, Turn turn) {
  if (lane >= lanes_.size()) throw std::out_of_range("unknown lane");
  if (occupancy < 1) throw std::invalid_argument("occupancy must be >= 1");
  Vehicle v;
  v.id = vehicles_.size();
  v.mode = mode;
  v.occupancy = occupancy;
  v.spawn_time = t_;
  v.lane = lane;
  v.turn = turn;
  v.position_m = position_m;
  active_.push_back(v.id);
  vehicles_.push_back(v);
  ++spawned_total_;
  return v.id;
}

std::size_t World::insert_queued_vehicle(Mode mode, int occupancy, std::size_t lane, Turn turn) {
  const std::size_t id = insert_vehicle(mode, occupancy, lane, lanes_.at(lane).length_m, turn);
  vehicles_[id].state = VehicleState::kQueued;
  lanes_[lane].queue.push_back(id);
  return id;
}

void World::spawn() {
  const auto& d = config_.demand;
  const double factor = rate_factor(t_);
  double max_factor = std::max(1.0, d.ramp_end_factor);
  for (const Entry& e : entries_) {
    // Non-homogeneous Poisson arrivals by thinning a homogeneous process at
    // the peak rate.
    const double peak = e.base_rate_vph * max_factor / 3600.0;
    if (peak <= 0.0) continue;
    const int candidates = std::poisson_distribution<int>(peak)(rng_);
    const double keep = e.base_rate_vph * factor / 3600.0 / peak;
    for (int k = 0; k < candidates; ++k) {
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < keep) {
        spawn_vehicle(Mode::kCar, e.intersection, e.side);
      }
    }
  }
  const std::size_t last = controllers_.size() - 1;
  auto scheduled = [&](int headway, int offset) {
    return headway > 0 && t_ >= offset && (t_ - offset) % headway == 0;
  };
  if (scheduled(d.bus_headway_s, d.bus_offset_s)) {
    spawn_vehicle(Mode::kBus, 0, Side::kWest);
    spawn_vehicle(Mode::kBus, last, Side::kEast);
  }
  if (scheduled(d.tram_headway_s, d.tram_offset_s)) {
    spawn_vehicle(Mode::kTram, 0, Side::kWest);
    spawn_vehicle(Mode::kTram, last, Side::kEast);
  }
}

void World::move_vehicles() {
  for (std::size_t id : active_) {
    Vehicle& v = vehicles_[id];
    if (v.state == VehicleState::kDwelling) {
      if (--v.dwell_left <= 0) v.state = VehicleState::kMoving;
      continue;
    }
    if (v.state != VehicleState::kMoving) continue;
    Lane& lane = lanes_[v.lane];
    v.position_m += free_flow_kmh(v.mode) / 3.6;
    if (v.mode == Mode::kTram && lane.has_tram_stop && !v.dwelled_on_lane &&
        v.position_m >= lane.length_m / 2.0 && config_.network.tram_dwell_s > 0) {
      v.position_m = lane.length_m / 2.0;
      v.state = VehicleState::kDwelling;
      v.dwell_left = config_.network.tram_dwell_s;
      v.dwelled_on_lane = true;
      continue;
    }
    if (v.position_m >= lane.length_m) {
      v.position_m = lane.length_m;
      v.state = VehicleState::kQueued;
      lane.queue.push_back(id);
      ++lane.arrivals;
    }
  }
}

void World::route(Vehicle& v) {
  const Lane& lane = lanes_[v.lane];
  const std::size_t i = lane.intersection;
  const Side out = exit_side(lane.side, v.turn);
  if (out == Side::kEast && i + 1 < controllers_.size()) {
    enter_approach(v, i + 1, Side::kWest);
  } else if (out == Side::kWest && i > 0) {
    enter_approach(v, i - 1, Side::kEast);
  } else {
    v.state = VehicleState::kExited;
    v.exit_time = t_;
    ++exited_total_;
    ++exited_this_step_;
  }
}

void World::discharge(StepRecord& rec) {
  const double sat = config_.signal.saturation_veh_per_s;
  for (std::size_t l = 0; l < lanes_.size(); ++l) {
    Lane& lane = lanes_[l];
    const SignalController& c = controllers_[lane.intersection];
    const bool green = c.stage == Stage::kGreen && c.current_phase == lane.phase;
    if (!green) {
      lane.discharge_credit = 0.0;
      continue;
    }
    lane.discharge_credit = std::min(1.0, lane.discharge_credit + sat);
    if (!lane.queue.empty() && lane.discharge_credit >= 1.0 - 1e-12) {
      lane.discharge_credit -= 1.0;
      const std::size_t id = lane.queue.front();
      lane.queue.pop_front();
      rec.discharges.push_back({t_, lane.intersection, l, c.stage, c.current_phase});
      route(vehicles_[id]);
    }
  }
}

void World::record_second() {
  SecondRecord r;
  r.t = t_;
  r.delayed.assign(controllers_.size(), 0);
  r.queued.assign(controllers_.size(), 0);
  for (std::size_t id : active_) {
    Vehicle& v = vehicles_[id];
    const std::size_t i = lanes_[v.lane].intersection;
    if (is_delayed(v)) {
      r.delayed[i] += v.occupancy;
      ++v.waiting_s;
    }
    if (v.state == VehicleState::kQueued && v.mode != Mode::kTram) ++r.queued[i];
  }
  for (std::size_t i = 0; i < controllers_.size(); ++i) {
    r.network_delayed += r.delayed[i];
    r.network_queued += r.queued[i];
  }
  seconds_.push_back(std::move(r));
}

void World::tick_controllers() {
  for (SignalController& c : controllers_) {
    switch (c.stage) {
      case Stage::kGreen:
        if (c.remaining > 0 && --c.remaining == 0) c.trigger = true;
        break;
      case Stage::kAmber:
        if (--c.remaining == 0) {
          c.stage = Stage::kAllRed;
          c.remaining = kAllRedSeconds;
        }
        break;
      case Stage::kAllRed:
        if (--c.remaining == 0) {
          c.stage = Stage::kGreen;
          c.current_phase = c.pending_phase;
          c.remaining = c.pending_green;
        }
        break;
    }
  }
}

StepRecord World::step() {
  if (finished()) throw std::logic_error("step: world already reached its horizon");
  StepRecord rec;
  rec.t = t_;
  exited_this_step_ = 0;
  const std::int64_t spawned_before = spawned_total_;
  spawn();
  move_vehicles();
  discharge(rec);
  std::erase_if(active_, [&](std::size_t id) { return vehicles_[id].state == VehicleState::kExited; });
  record_second();
  tick_controllers();
  rec.spawned = spawned_total_ - spawned_before;
  rec.exited = exited_this_step_;
  ++t_;
  return rec;
}

void World::apply_signal(std::size_t intersection, Phase phase, int green_s) {
  if (intersection >= controllers_.size()) {
    throw std::out_of_range("apply_signal: unknown intersection " + std::to_string(intersection));
  }
  SignalController& c = controllers_[intersection];
  if (!c.trigger) throw std::logic_error("apply_signal: no decision pending at intersection " + std::to_string(intersection));
  if (phase >= kPhaseCount) throw std::invalid_argument("apply_signal: unknown phase " + std::to_string(phase));
  if (phase == c.current_phase) throw std::invalid_argument("apply_signal: repeating the current phase is not allowed");
  if (green_s < kMinGreenSeconds || green_s > kMaxGreenSeconds) {
    throw std::invalid_argument("apply_signal: green " + std::to_string(green_s) + " s outside [8, 45]");
  }
  c.stage = Stage::kAmber;
  c.remaining = kAmberSeconds;
  c.pending_phase = phase;
  c.pending_green = green_s;
  c.trigger = false;
}

std::int64_t World::delayed_passengers(std::size_t intersection) const {
  if (intersection >= controllers_.size()) {
    throw std::out_of_range("delayed_passengers: unknown intersection " + std::to_string(intersection));
  }
  std::int64_t total = 0;
  for (std::size_t id : active_) {
    const Vehicle& v = vehicles_[id];
    if (lanes_[v.lane].intersection == intersection && is_delayed(v)) total += v.occupancy;
  }
  return total;
}

std::int64_t World::delayed_passengers() const {
  std::int64_t total = 0;
  for (std::size_t id : active_) {
    const Vehicle& v = vehicles_[id];
    if (is_delayed(v)) total += v.occupancy;
  }
  return total;
}

MetricsLog World::metrics_log() const {
  MetricsLog log;
  log.intersections = controllers_.size();
  log.seconds = seconds_;
  for (const Vehicle& v : vehicles_) {
    if (v.mode == Mode::kCar) continue;
    log.transit.push_back({v.id, v.mode, v.waiting_s, v.state == VehicleState::kExited});
  }
  return log;
}

}  // namespace stdsh::sim
