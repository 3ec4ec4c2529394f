#include "stdsh/env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace stdsh::env {
namespace {

constexpr std::size_t kVeh = 0, kPax = 4, kQueue = 8, kSpeed = 12;

std::size_t mode_slot(sim::Mode mode) {
  switch (mode) {
    case sim::Mode::kBus:
      return 1;
    case sim::Mode::kTram:
      return 2;
    case sim::Mode::kCar:
      return 3;
  }
  return 3;
}

}  // namespace

Action decode_action(std::size_t index) {
  if (index >= kActionCount) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, 152)");
  }
  return {index / kGreenChoices, sim::kMinGreenSeconds + static_cast<int>(index % kGreenChoices)};
}

std::size_t encode_action(Action action) {
  if (action.phase >= sim::kPhaseCount) throw std::out_of_range("phase out of range");
  if (action.green_s < sim::kMinGreenSeconds || action.green_s > sim::kMaxGreenSeconds) {
    throw std::out_of_range("green " + std::to_string(action.green_s) + " s outside [8, 45]");
  }
  return action.phase * kGreenChoices + static_cast<std::size_t>(action.green_s - sim::kMinGreenSeconds);
}

ActionMask action_mask(sim::Phase current_phase) {
  if (current_phase >= sim::kPhaseCount) throw std::out_of_range("phase out of range");
  ActionMask mask;
  for (std::size_t a = 0; a < kActionCount; ++a) mask[a] = a / kGreenChoices != current_phase;
  return mask;
}

std::size_t observation_width(const sim::World& world, std::size_t intersection) {
  return world.approach_lanes(intersection).size() * kLaneFeatures + sim::kPhaseCount;
}

std::vector<double> observe(const sim::World& world, std::size_t intersection) {
  const auto lanes = world.approach_lanes(intersection);
  std::vector<double> obs(lanes.size() * kLaneFeatures + sim::kPhaseCount, 0.0);

  // lane index -> block offset
  std::vector<std::size_t> block(world.lanes().size(), SIZE_MAX);
  for (std::size_t k = 0; k < lanes.size(); ++k) block[lanes[k]] = k * kLaneFeatures;

  std::vector<double> speed_sum(obs.size(), 0.0);
  for (std::size_t id : world.active()) {
    const sim::Vehicle& v = world.vehicles()[id];
    const std::size_t off = block[v.lane];
    if (off == SIZE_MAX) continue;
    const bool queued = v.state == sim::VehicleState::kQueued;
    const double speed = world.speed_kmh(v);
    for (std::size_t s : {std::size_t{0}, mode_slot(v.mode)}) {
      obs[off + kVeh + s] += 1.0;
      obs[off + kPax + s] += v.occupancy;
      if (queued) obs[off + kQueue + s] += 1.0;
      speed_sum[off + kSpeed + s] += speed;
    }
  }
  for (std::size_t k = 0; k < lanes.size(); ++k) {
    const std::size_t off = k * kLaneFeatures;
    const bool tram_lane = world.lanes()[lanes[k]].kind == sim::LaneKind::kTram;
    const double free_total = world.free_flow_kmh(tram_lane ? sim::Mode::kTram : sim::Mode::kCar);
    const double free_flow[4] = {free_total, world.free_flow_kmh(sim::Mode::kBus),
                                 world.free_flow_kmh(sim::Mode::kTram), world.free_flow_kmh(sim::Mode::kCar)};
    for (std::size_t s = 0; s < 4; ++s) {
      const double n = obs[off + kVeh + s];
      obs[off + kSpeed + s] = n > 0 ? speed_sum[off + kSpeed + s] / n : free_flow[s];
    }
  }
  obs[lanes.size() * kLaneFeatures + world.controller(intersection).current_phase] = 1.0;
  return obs;
}

void normalize_observation(std::span<double> obs) {
  if (obs.size() < sim::kPhaseCount || (obs.size() - sim::kPhaseCount) % kLaneFeatures != 0) {
    throw std::invalid_argument("observation width " + std::to_string(obs.size()) + " is not 16*L+4");
  }
  const std::size_t lanes = (obs.size() - sim::kPhaseCount) / kLaneFeatures;
  for (std::size_t k = 0; k < lanes; ++k) {
    double* f = obs.data() + k * kLaneFeatures;
    for (std::size_t s = 0; s < 4; ++s) {
      f[kVeh + s] /= 10.0;
      f[kPax + s] /= 100.0;
      f[kQueue + s] /= 10.0;
      f[kSpeed + s] /= 50.0;
    }
  }
}

void RewardConfig::validate() const {
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) throw std::invalid_argument("reward weights must be >= 0");
  if (m < 0) throw std::invalid_argument("reward window m must be >= 1 (or 0 for the full log)");
  if (!(theta_v > 0.0)) throw std::invalid_argument("speed threshold must be > 0");
}

double compute_reward(std::span<const sim::SecondRecord> log, std::size_t intersection,
                      const RewardConfig& config) {
  config.validate();
  if (log.empty()) throw std::invalid_argument("compute_reward: empty window");
  std::size_t m = log.size();
  if (config.m > 0) {
    m = static_cast<std::size_t>(config.m);
    if (m > log.size()) throw std::invalid_argument("compute_reward: log shorter than window m");
    log = log.last(m);
  }
  std::int64_t local = 0, network = 0;
  for (const sim::SecondRecord& r : log) {
    if (intersection >= r.delayed.size()) throw std::out_of_range("compute_reward: unknown intersection");
    local += r.delayed[intersection];
    network += r.network_delayed;
  }
  const double md = static_cast<double>(m);
  return -(config.w1 / md * static_cast<double>(local) + config.w2 / md * static_cast<double>(network));
}

CorridorEnv::CorridorEnv(sim::ScenarioConfig config, std::uint64_t seed, RewardConfig reward,
                         std::size_t window, int cadence_s)
    : world_([&] {
        reward.validate();
        config.signal.speed_threshold_kmh = reward.theta_v;
        return sim::World(std::move(config), seed);
      }()),
      reward_(reward),
      window_(window),
      cadence_s_(cadence_s) {
  if (window_ == 0) throw std::invalid_argument("feature window must be >= 1");
  if (cadence_s_ <= 0) throw std::invalid_argument("snapshot cadence must be >= 1 s");
  obs_width_ = observation_width(world_, 0);
  for (std::size_t i = 1; i < num_agents(); ++i) {
    if (observation_width(world_, i) != obs_width_) {
      throw std::logic_error("intersections have differing observation widths");
    }
  }
  last_decision_.assign(num_agents(), 0);
  snapshot();
}

std::vector<std::size_t> CorridorEnv::triggered() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_agents(); ++i) {
    if (world_.controller(i).trigger) out.push_back(i);
  }
  return out;
}

sim::Phase CorridorEnv::current_phase(std::size_t agent) const { return world_.controller(agent).current_phase; }

std::vector<double> CorridorEnv::observation(std::size_t agent) const {
  std::vector<double> obs = observe(world_, agent);
  normalize_observation(obs);
  return obs;
}

Tensor CorridorEnv::mean_observation() const {
  Tensor out = Tensor::zeros({1, obs_width_});
  auto d = out.data();
  for (std::size_t i = 0; i < num_agents(); ++i) {
    const auto obs = observation(i);
    for (std::size_t k = 0; k < obs_width_; ++k) d[k] += obs[k];
  }
  for (double& x : d) x /= static_cast<double>(num_agents());
  return out;
}

Tensor CorridorEnv::node_features() const {
  const std::size_t n = num_agents();
  const std::size_t row = n * obs_width_;
  std::vector<double> data;
  data.reserve(window_ * row);
  const std::size_t have = snapshots_.size();
  for (std::size_t tau = 0; tau < window_; ++tau) {
    const std::size_t missing = window_ - have;
    const std::size_t src = tau < missing ? 0 : tau - missing;
    data.insert(data.end(), snapshots_[src].begin(), snapshots_[src].end());
  }
  return Tensor({window_ * n, obs_width_}, std::move(data));
}

void CorridorEnv::act(std::size_t agent, std::size_t action) {
  const Action a = decode_action(action);
  world_.apply_signal(agent, a.phase, a.green_s);
  last_decision_.at(agent) = world_.now();
}

double CorridorEnv::reward_since_decision(std::size_t agent) const {
  const auto& seconds = world_.seconds();
  const auto from = static_cast<std::size_t>(last_decision_.at(agent));
  return compute_reward(std::span(seconds).subspan(from), agent, reward_);
}

sim::StepRecord CorridorEnv::step() {
  sim::StepRecord rec = world_.step();
  if (world_.now() % cadence_s_ == 0) snapshot();
  return rec;
}

void CorridorEnv::snapshot() {
  std::vector<double> snap;
  snap.reserve(num_agents() * obs_width_);
  for (std::size_t i = 0; i < num_agents(); ++i) {
    const auto obs = observation(i);
    snap.insert(snap.end(), obs.begin(), obs.end());
  }
  snapshots_.push_back(std::move(snap));
  while (snapshots_.size() > window_) snapshots_.pop_front();
}

}  // namespace stdsh::env
