#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "stdsh/tensor.hpp"
#include "stdsh/world.hpp"

namespace stdsh::env {

inline constexpr std::size_t kGreenChoices = 38;  // 8..45 s
inline constexpr std::size_t kActionCount = kGreenChoices * sim::kPhaseCount;
inline constexpr std::size_t kLaneFeatures = 16;

struct Action {
  sim::Phase phase = 0;
  int green_s = sim::kMinGreenSeconds;
  bool operator==(const Action&) const = default;
};

Action decode_action(std::size_t index);
std::size_t encode_action(Action action);

// true = allowed. The 38 actions that would repeat the current phase are off.
using ActionMask = std::array<bool, kActionCount>;
ActionMask action_mask(sim::Phase current_phase);

// Per approaching lane: {vehicles, persons, queued vehicles, mean speed km/h}
// each broken down as {total, bus, tram, car}; then a one-hot of the current
// phase. An empty lane (or an absent mode) reports its free-flow speed.
std::size_t observation_width(const sim::World& world, std::size_t intersection);
std::vector<double> observe(const sim::World& world, std::size_t intersection);

// Fixed rescaling used as network input: counts /10, persons /100,
// queues /10, speeds /50. The phase one-hot is left as is.
void normalize_observation(std::span<double> obs);

struct RewardConfig {
  double w1 = 0.5;  // local (own intersection) weight
  double w2 = 0.5;  // network weight
  // Averaging window in seconds. 0 means "the whole log passed in", i.e. the
  // time since the agent's previous decision.
  int m = 0;
  double theta_v = 5.0;  // km/h; applied to the simulator's delay test

  void validate() const;
};

// r = -((w1/m) sum_t N_t^i + (w2/m) sum_t Nhat_t) over the last m seconds of
// the log.
double compute_reward(std::span<const sim::SecondRecord> log, std::size_t intersection,
                      const RewardConfig& config);

// A world plus the bookkeeping agents need: decision instants, reward
// windows and the node-feature history consumed by the hypergraph encoder.
class CorridorEnv {
 public:
  CorridorEnv(sim::ScenarioConfig config, std::uint64_t seed, RewardConfig reward = {},
              std::size_t window = 5, int cadence_s = 5);

  const sim::World& world() const { return world_; }
  std::size_t num_agents() const { return world_.num_intersections(); }
  std::size_t obs_width() const { return obs_width_; }
  std::size_t window() const { return window_; }
  bool done() const { return world_.finished(); }
  int now() const { return world_.now(); }

  std::vector<std::size_t> triggered() const;
  sim::Phase current_phase(std::size_t agent) const;
  // Normalized observation.
  std::vector<double> observation(std::size_t agent) const;
  // Mean of all agents' normalized observations (1 x obs_width).
  Tensor mean_observation() const;
  // (window * agents) x obs_width, row tau*agents + i, oldest snapshot first;
  // short histories are padded by repeating the earliest snapshot.
  Tensor node_features() const;

  void act(std::size_t agent, std::size_t action);
  // Reward over the seconds elapsed since the agent's last decision.
  double reward_since_decision(std::size_t agent) const;
  int last_decision(std::size_t agent) const { return last_decision_.at(agent); }

  sim::StepRecord step();

 private:
  void snapshot();

  sim::World world_;
  RewardConfig reward_;
  std::size_t window_;
  int cadence_s_;
  std::size_t obs_width_ = 0;
  std::vector<int> last_decision_;
  std::deque<std::vector<double>> snapshots_;  // each agents * obs_width
};

}  // namespace stdsh::env
