#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "stdsh/scenario.hpp"

namespace stdsh::sim {

enum class Mode : unsigned char { kCar = 0, kBus = 1, kTram = 2 };
inline constexpr std::size_t kModeCount = 3;

enum class VehicleState : unsigned char { kMoving, kQueued, kDwelling, kExited };
enum class Stage : unsigned char { kGreen, kAmber, kAllRed };

inline constexpr std::size_t kPhaseCount = 4;
inline constexpr int kAmberSeconds = 3;
inline constexpr int kAllRedSeconds = 2;
inline constexpr int kMinGreenSeconds = 8;
inline constexpr int kMaxGreenSeconds = 45;

// Phases (left-hand traffic): 0 = N-S through + left, 1 = N-S protected right,
// 2 = E-W through + left (also trams), 3 = E-W protected right.
using Phase = std::size_t;

enum class LaneKind : unsigned char { kThroughLeft, kRight, kTram };

struct Lane {
  std::size_t intersection = 0;
  Side side = Side::kNorth;
  LaneKind kind = LaneKind::kThroughLeft;
  double length_m = 0.0;
  Phase phase = 0;                  // phase whose green discharges this lane
  bool has_tram_stop = false;
  std::deque<std::size_t> queue;    // vehicle ids, head first
  double discharge_credit = 0.0;
  std::int64_t arrivals = 0;        // vehicles that reached the stop line
};

struct Vehicle {
  std::size_t id = 0;
  Mode mode = Mode::kCar;
  int occupancy = 1;
  std::size_t lane = 0;  // global lane index
  Turn turn = Turn::kThrough;
  double position_m = 0.0;
  VehicleState state = VehicleState::kMoving;
  int spawn_time = 0;
  int exit_time = -1;
  int waiting_s = 0;
  int dwell_left = 0;
  bool dwelled_on_lane = false;
};

struct SignalController {
  std::size_t intersection = 0;
  Phase current_phase = 0;
  Stage stage = Stage::kGreen;
  int remaining = 0;
  bool trigger = true;
  Phase pending_phase = 0;
  int pending_green = 0;
};

// One simulated second.
struct SecondRecord {
  int t = 0;
  std::int64_t network_delayed = 0;                 // persons
  std::vector<std::int64_t> delayed;                // per intersection, persons
  std::int64_t network_queued = 0;                  // road vehicles (no trams)
  std::vector<std::int64_t> queued;                 // per intersection
};

struct TransitRecord {
  std::size_t vehicle_id = 0;
  Mode mode = Mode::kBus;
  int waiting_s = 0;
  bool completed = false;
};

struct MetricsLog {
  std::size_t intersections = 0;
  std::vector<SecondRecord> seconds;
  std::vector<TransitRecord> transit;
};

struct DischargeEvent {
  int t = 0;
  std::size_t intersection = 0;
  std::size_t lane = 0;
  Stage stage = Stage::kGreen;
  Phase controller_phase = 0;
};

// What happened during one step.
struct StepRecord {
  int t = 0;
  std::int64_t spawned = 0;
  std::int64_t exited = 0;
  std::vector<DischargeEvent> discharges;
};

// Point-queue corridor simulator. Vehicles travel each approach link at
// free-flow speed, then wait in a per-lane vertical queue that discharges at
// the saturation rate while the lane's phase is green.
class World {
 public:
  static constexpr std::size_t kVehicleLanesPerIntersection = 8;

  World(ScenarioConfig config, std::uint64_t seed);

  const ScenarioConfig& config() const { return config_; }
  int now() const { return t_; }
  bool finished() const { return t_ >= config_.horizon_s; }
  std::size_t num_intersections() const { return controllers_.size(); }

  StepRecord step();

  // Starts amber -> all-red -> green(phase, green_s). Requires an active
  // trigger, a phase different from the current one and green_s in [8, 45].
  void apply_signal(std::size_t intersection, Phase phase, int green_s);

  // Persons in vehicles slower than the speed threshold, excluding trams
  // dwelling at a stop.
  std::int64_t delayed_passengers(std::size_t intersection) const;
  std::int64_t delayed_passengers() const;

  const std::vector<SignalController>& controllers() const { return controllers_; }
  const SignalController& controller(std::size_t intersection) const;
  const std::vector<Lane>& lanes() const { return lanes_; }
  // Global lane indices approaching an intersection, in feature order.
  std::span<const std::size_t> approach_lanes(std::size_t intersection) const;
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::span<const std::size_t> active() const { return active_; }

  double speed_kmh(const Vehicle& v) const;
  double free_flow_kmh(Mode mode) const;
  bool is_delayed(const Vehicle& v) const;

  std::int64_t spawned_total() const { return spawned_total_; }
  std::int64_t exited_total() const { return exited_total_; }
  std::int64_t in_network() const { return static_cast<std::int64_t>(active_.size()); }

  const std::vector<SecondRecord>& seconds() const { return seconds_; }
  MetricsLog metrics_log() const;

  // Test hook: place a vehicle on a lane at a position without going through
  // the demand model. Counts as a spawn.
  std::size_t insert_vehicle(Mode mode, int occupancy, std::size_t lane, double position_m,
                             Turn turn = Turn::kThrough);
  // Test hook: place a vehicle directly in a lane's queue.
  std::size_t insert_queued_vehicle(Mode mode, int occupancy, std::size_t lane,
                                    Turn turn = Turn::kThrough);

  std::size_t lane_index(std::size_t intersection, Side side, LaneKind kind) const;

 private:
  struct Entry {
    std::size_t intersection;
    Side side;
    double base_rate_vph;
  };

  void build_network();
  void spawn();
  void spawn_vehicle(Mode mode, std::size_t intersection, Side side);
  void move_vehicles();
  void discharge(StepRecord& rec);
  void route(Vehicle& v);
  void enter_approach(Vehicle& v, std::size_t intersection, Side side);
  void record_second();
  void tick_controllers();
  Turn draw_turn(std::size_t intersection, Side side);
  double rate_factor(int t) const;

  ScenarioConfig config_;
  std::mt19937_64 rng_;
  int t_ = 0;
  std::vector<Lane> lanes_;
  std::vector<std::vector<std::size_t>> approach_lanes_;
  std::vector<SignalController> controllers_;
  std::vector<Vehicle> vehicles_;
  std::vector<std::size_t> active_;
  std::vector<Entry> entries_;
  std::vector<SecondRecord> seconds_;
  std::int64_t spawned_total_ = 0;
  std::int64_t exited_total_ = 0;
  std::int64_t exited_this_step_ = 0;
};

World load_scenario(const ScenarioConfig& config, std::uint64_t seed);

// Side a vehicle leaves the intersection by, given the side it approached
// from and its turn (left-hand traffic).
Side exit_side(Side approach, Turn turn);

}  // namespace stdsh::sim
