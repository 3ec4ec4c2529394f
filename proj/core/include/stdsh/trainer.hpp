#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stdsh/encoder.hpp"
#include "stdsh/env.hpp"
#include "stdsh/hypergraph.hpp"
#include "stdsh/networks.hpp"
#include "stdsh/optim.hpp"
#include "stdsh/scenario.hpp"

namespace stdsh::marl {

struct TrainConfig {
  double gamma = 0.98;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.01;
  int epochs = 4;
  std::size_t minibatch = 256;
  double max_grad_norm = 0.5;
  int horizon_s = 1800;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  bool normalize_advantages = true;
  // Each decision's reward is weighted by its window length in seconds and
  // multiplied by this before computing returns.
  double reward_scale = 5e-5;
  std::size_t hidden = 256;
  std::size_t model_width = 64;
  std::size_t heads = 4;
  std::size_t window = 5;    // hypergraph time steps
  int cadence_s = 5;         // seconds between feature snapshots
  env::RewardConfig reward;

  void validate() const;
};

// Which components are present (true) in the model.
struct AblationConfig {
  bool hg = true;
  bool dsha = true;
  bool she = true;
  bool the = true;

  // Comma-separated list of components to remove, e.g. "hg" or "dsha,she".
  // "" and "none" give the full model.
  static AblationConfig parse(std::string_view removed);
  // "full", or the removed components joined by '+', e.g. "hg-off".
  std::string label() const;
  bool operator==(const AblationConfig&) const = default;
};

// One agent decision.
struct Transition {
  std::size_t agent = 0;
  int time = 0;
  std::vector<double> obs;  // normalized
  std::size_t action = 0;
  double old_log_prob = 0.0;
  env::ActionMask mask{};
  double reward = 0.0;
  int duration_s = 0;   // seconds until the agent's next decision (or the horizon)
  Tensor critic_input;  // node-feature window, or mean observation without HG
  bool done = false;
};

struct TransitionBatch {
  std::vector<Transition> steps;
  double episode_reward = 0.0;  // sum of raw rewards over all agents
};

struct Sample {
  std::size_t action = 0;
  double log_prob = 0.0;
};

// Masked categorical sample from the policy.
Sample act(const PolicyNet& policy, std::span<const double> obs, const env::ActionMask& mask,
           std::mt19937_64& rng);
// Argmax over allowed logits.
std::size_t act_greedy(const PolicyNet& policy, std::span<const double> obs, const env::ActionMask& mask);
// Masked softmax probabilities of a 1 x A logit row.
std::vector<double> masked_probs(std::span<const double> logits, std::span<const bool> mask);

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);
std::vector<double> advantages(std::span<const double> returns, std::span<const double> values,
                               bool normalize = false);

// Generic PPO actor batch; masks are row-major B x A allowed flags.
struct PolicyBatch {
  Tensor obs;  // B x obs_width
  Mask mask;   // B x A
  std::vector<std::size_t> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
};

struct PpoStats {
  double actor_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  std::size_t minibatches = 0;
  std::vector<double> first_epoch_ratios;  // in sample order
};

// Clipped surrogate with entropy bonus, shuffled minibatches, global-norm
// clipping. Throws std::runtime_error (before any parameter change of the
// offending minibatch) on a non-finite loss.
PpoStats ppo_update(const PolicyNet& policy, Adam& optimizer, const PolicyBatch& batch,
                    const TrainConfig& config, std::mt19937_64& rng);

// Centralized value function: hypergraph encoder -> g -> critic MLP, or the
// critic MLP directly on a mean observation when HG is ablated.
class CriticModel {
 public:
  CriticModel(std::size_t obs_width, std::size_t agents, const TrainConfig& config,
              const AblationConfig& ablation, std::uint64_t seed);
  // Explicit parts, for tests.
  CriticModel(std::optional<dsha::Encoder> encoder, hg::STHypergraph graph, CriticNet critic);

  // inputs: node windows (N x obs_width) or 1 x obs_width rows. Returns B x 1.
  Tensor values(Tape& tape, std::span<const Tensor> inputs) const;
  // 0.5 * mean((R - V)^2)
  Tensor loss(Tape& tape, std::span<const Tensor> inputs, std::span<const double> returns) const;

  bool uses_hypergraph() const { return encoder_.has_value(); }
  const hg::STHypergraph& graph() const { return graph_; }
  const std::optional<dsha::Encoder>& encoder() const { return encoder_; }
  const CriticNet& critic() const { return critic_; }
  std::vector<Tensor> parameters() const;
  std::vector<NamedTensor> named_parameters() const;

 private:
  std::optional<dsha::Encoder> encoder_;
  hg::STHypergraph graph_;
  CriticNet critic_;
};

struct CriticStats {
  double loss = 0.0;
  double grad_norm = 0.0;
};

CriticStats critic_update(const CriticModel& critic, Adam& optimizer, std::span<const Tensor> inputs,
                          std::span<const double> returns, const TrainConfig& config,
                          std::mt19937_64& rng);

// Runs one episode of `env`, resampling only for triggered agents.
TransitionBatch rollout(env::CorridorEnv& env, const PolicyNet& policy, bool hypergraph_input,
                        std::mt19937_64& rng);

struct UpdateStats {
  int update = 0;
  double mean_reward = 0.0;  // per decision, unscaled
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // actor, pre-clip
  std::size_t decisions = 0;
  std::vector<double> first_epoch_ratios;
};

inline constexpr std::string_view kTrainLogHeader =
    "update,mean_reward,actor_loss,critic_loss,entropy,grad_norm";

class Trainer {
 public:
  Trainer(sim::ScenarioConfig scenario, TrainConfig config, AblationConfig ablation, std::uint64_t seed);

  // One episode of experience followed by one PPO + critic update.
  UpdateStats train_episode();
  // Writes one CSV line per update (header first) when log is non-null.
  std::vector<UpdateStats> train(int episodes, std::ostream* log = nullptr);

  const PolicyNet& policy() const { return policy_; }
  const CriticModel& critic() const { return critic_; }
  const AblationConfig& ablation() const { return ablation_; }
  const TrainConfig& config() const { return config_; }
  std::size_t obs_width() const { return obs_width_; }

  std::vector<NamedTensor> named_parameters() const;
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  sim::ScenarioConfig scenario_;
  TrainConfig config_;
  AblationConfig ablation_;
  std::uint64_t seed_;
  std::size_t obs_width_;
  std::size_t agents_;
  PolicyNet policy_;
  CriticModel critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  std::mt19937_64 rng_;
  int updates_ = 0;
};

// Per-intersection observation width of a scenario.
std::size_t scenario_obs_width(const sim::ScenarioConfig& scenario);

// Loads only the actor from a trainer checkpoint.
PolicyNet load_policy(const std::filesystem::path& checkpoint, std::size_t obs_width);

std::string format_train_log_row(const UpdateStats& stats);

}  // namespace stdsh::marl
