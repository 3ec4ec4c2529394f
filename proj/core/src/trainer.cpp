#include "stdsh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "stdsh/checkpoint.hpp"

namespace stdsh::marl {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

Tensor column(std::span<const double> v) { return Tensor({v.size(), 1}, {v.begin(), v.end()}); }

Mask mask_row(const env::ActionMask& m) {
  Mask out(1, m.size());
  for (std::size_t a = 0; a < m.size(); ++a) out.set(0, a, m[a]);
  return out;
}

std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

Tensor policy_logits(Tape& tape, const PolicyNet& policy, std::span<const double> obs) {
  return policy.forward(tape, Tensor({1, obs.size()}, {obs.begin(), obs.end()}));
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::runtime_error(std::string(what) + ": non-finite loss, update aborted");
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
  if (!(clip_epsilon > 0.0)) throw std::invalid_argument("clip epsilon must be > 0");
  if (entropy_coef < 0.0) throw std::invalid_argument("entropy coefficient must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (minibatch < 1) throw std::invalid_argument("minibatch must be >= 1");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("grad-norm clip must be > 0");
  if (horizon_s < 1) throw std::invalid_argument("horizon must be >= 1 s");
  if (!(reward_scale > 0.0)) throw std::invalid_argument("reward scale must be > 0");
  reward.validate();
}

AblationConfig AblationConfig::parse(std::string_view removed) {
  AblationConfig out;
  std::string item;
  std::stringstream ss{std::string(removed)};
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item.empty() || item == "none") continue;
    if (item == "hg") {
      out.hg = false;
    } else if (item == "dsha") {
      out.dsha = false;
    } else if (item == "she") {
      out.she = false;
    } else if (item == "the") {
      out.the = false;
    } else {
      throw std::invalid_argument("unknown ablation component '" + item + "' (expected hg, dsha, she, the)");
    }
  }
  if (out.hg && !out.she && !out.the) {
    throw std::invalid_argument("removing both she and the leaves the hypergraph without hyperedges");
  }
  return out;
}

std::string AblationConfig::label() const {
  std::string s;
  auto add = [&](bool present, const char* name) {
    if (present) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(hg, "hg");
  add(dsha, "dsha");
  add(she, "she");
  add(the, "the");
  return s.empty() ? "full" : s + "-off";
}

std::vector<double> masked_probs(std::span<const double> logits, std::span<const bool> mask) {
  if (logits.size() != mask.size()) throw std::invalid_argument("masked_probs: size mismatch");
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < logits.size(); ++a) {
    if (mask[a]) hi = std::max(hi, logits[a]);
  }
  if (std::isinf(hi)) throw std::invalid_argument("all actions are masked");
  std::vector<double> p(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    if (mask[a]) z += p[a] = std::exp(logits[a] - hi);
  }
  for (double& x : p) x /= z;
  return p;
}

Sample act(const PolicyNet& policy, std::span<const double> obs, const env::ActionMask& mask,
           std::mt19937_64& rng) {
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw std::invalid_argument("act: all actions are masked");
  }
  Tape tape(Tape::Mode::kInference);
  const Tensor logits = policy_logits(tape, policy, obs);
  // Same op as the PPO update uses, so old and new log-probs agree bitwise
  // while the parameters are unchanged.
  const Tensor logp = tape.masked_log_softmax(logits, mask_row(mask));
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  std::size_t chosen = kNone;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    chosen = a;
    acc += std::exp(logp.data()[a]);
    if (u < acc) break;
  }
  return {chosen, logp.data()[chosen]};
}

std::size_t act_greedy(const PolicyNet& policy, std::span<const double> obs, const env::ActionMask& mask) {
  Tape tape(Tape::Mode::kInference);
  const Tensor logits = policy_logits(tape, policy, obs);
  std::size_t best = kNone;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a] && (best == kNone || logits.data()[a] > logits.data()[best])) best = a;
  }
  if (best == kNone) throw std::invalid_argument("act_greedy: all actions are masked");
  return best;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc = rewards[k] + gamma * acc;
    out[k] = acc;
  }
  return out;
}

std::vector<double> advantages(std::span<const double> returns, std::span<const double> values, bool normalize) {
  if (returns.size() != values.size()) {
    throw std::invalid_argument("advantages: " + std::to_string(returns.size()) + " returns vs " +
                                std::to_string(values.size()) + " values");
  }
  std::vector<double> adv(returns.size());
  for (std::size_t k = 0; k < adv.size(); ++k) adv[k] = returns[k] - values[k];
  if (normalize && adv.size() >= 2) {
    const double n = static_cast<double>(adv.size());
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : adv) a = sd > 0.0 ? (a - mean) / sd : 0.0;
  }
  return adv;
}

PpoStats ppo_update(const PolicyNet& policy, Adam& optimizer, const PolicyBatch& batch,
                    const TrainConfig& config, std::mt19937_64& rng) {
  const std::size_t n = batch.actions.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  if (batch.obs.rows() != n || batch.mask.rows() != n || batch.old_log_probs.size() != n ||
      batch.advantages.size() != n) {
    throw std::invalid_argument("ppo_update: batch fields disagree in length");
  }
  const std::size_t width = batch.obs.cols();
  const std::size_t actions = batch.mask.cols();
  std::vector<Tensor> params = policy.parameters();

  PpoStats stats;
  stats.first_epoch_ratios.assign(n, 0.0);
  double loss_sum = 0.0, ent_sum = 0.0, norm_sum = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t b = std::min(config.minibatch, n - start);
      std::vector<double> obs(b * width), old(b), adv(b);
      std::vector<std::size_t> act(b);
      Mask mask(b, actions);
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t k = order[start + r];
        std::copy_n(batch.obs.data().begin() + static_cast<std::ptrdiff_t>(k * width), width,
                    obs.begin() + static_cast<std::ptrdiff_t>(r * width));
        for (std::size_t a = 0; a < actions; ++a) mask.set(r, a, batch.mask(k, a));
        old[r] = batch.old_log_probs[k];
        adv[r] = batch.advantages[k];
        act[r] = batch.actions[k];
      }

      Tape tape;
      const Tensor logits = policy.forward(tape, Tensor({b, width}, std::move(obs)));
      const Tensor logp_all = tape.masked_log_softmax(logits, mask);
      const Tensor p_all = tape.masked_softmax(logits, mask);
      const Tensor logp = tape.gather(logp_all, act);
      const Tensor ratio = tape.exp(tape.sub(logp, column(old)));
      const Tensor a = column(adv);
      const Tensor surr = tape.mean(tape.minimum(
          tape.mul(ratio, a), tape.mul(tape.clip(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon), a)));
      const Tensor entropy = tape.scale(tape.reduce_sum(tape.mul(p_all, logp_all)), -1.0 / static_cast<double>(b));
      const Tensor loss = tape.sub(tape.scale(surr, -1.0), tape.scale(entropy, config.entropy_coef));
      require_finite(loss.item(), "ppo_update");

      if (epoch == 0) {
        for (std::size_t r = 0; r < b; ++r) stats.first_epoch_ratios[order[start + r]] = ratio.data()[r];
      }
      optimizer.zero_grad();
      tape.backward(loss);
      norm_sum += clip_grad_norm(params, config.max_grad_norm);
      optimizer.step();
      loss_sum += loss.item();
      ent_sum += entropy.item();
      ++stats.minibatches;
    }
  }
  const double m = static_cast<double>(stats.minibatches);
  stats.actor_loss = loss_sum / m;
  stats.entropy = ent_sum / m;
  stats.grad_norm = norm_sum / m;
  return stats;
}

CriticModel::CriticModel(std::size_t obs_width, std::size_t agents, const TrainConfig& config,
                         const AblationConfig& ablation, std::uint64_t seed)
    : graph_(agents, config.window,
             ablation.hg ? hg::EdgeFamilies{ablation.she, ablation.the} : hg::EdgeFamilies{}),
      critic_(ablation.hg ? config.model_width : obs_width, seed ^ 0xc417'1c00ULL, config.hidden) {
  if (ablation.hg) {
    dsha::EncoderConfig ec;
    ec.feature_width = obs_width;
    ec.heads = config.heads;
    ec.model_width = config.model_width;
    ec.attention = ablation.dsha;
    encoder_.emplace(ec, seed ^ 0xe4c0'de00ULL);
  }
}

CriticModel::CriticModel(std::optional<dsha::Encoder> encoder, hg::STHypergraph graph, CriticNet critic)
    : encoder_(std::move(encoder)), graph_(std::move(graph)), critic_(std::move(critic)) {}

Tensor CriticModel::values(Tape& tape, std::span<const Tensor> inputs) const {
  if (inputs.empty()) throw std::invalid_argument("critic: no inputs");
  std::vector<Tensor> rows;
  rows.reserve(inputs.size());
  for (const Tensor& x : inputs) {
    if (encoder_) {
      rows.push_back(encoder_->encode(tape, x, graph_.incidence()).graph_embedding);
    } else {
      if (x.rows() != 1) throw std::invalid_argument("critic without hypergraph expects 1-row inputs");
      rows.push_back(x);
    }
  }
  return critic_.forward(tape, rows.size() == 1 ? rows.front() : tape.concat_rows(rows));
}

Tensor CriticModel::loss(Tape& tape, std::span<const Tensor> inputs, std::span<const double> returns) const {
  if (inputs.size() != returns.size()) throw std::invalid_argument("critic loss: inputs/returns mismatch");
  const Tensor v = values(tape, inputs);
  return tape.scale(tape.mean(tape.square(tape.sub(column(returns), v))), 0.5);
}

std::vector<Tensor> CriticModel::parameters() const {
  std::vector<Tensor> p = critic_.parameters();
  if (encoder_) {
    const auto e = encoder_->parameters();
    p.insert(p.end(), e.begin(), e.end());
  }
  return p;
}

std::vector<NamedTensor> CriticModel::named_parameters() const {
  std::vector<NamedTensor> p = critic_.named_parameters();
  if (encoder_) {
    const auto e = encoder_->named_parameters();
    p.insert(p.end(), e.begin(), e.end());
  }
  return p;
}

CriticStats critic_update(const CriticModel& critic, Adam& optimizer, std::span<const Tensor> inputs,
                          std::span<const double> returns, const TrainConfig& config, std::mt19937_64& rng) {
  const std::size_t n = inputs.size();
  if (n == 0) throw std::invalid_argument("critic_update: empty batch");
  if (returns.size() != n) throw std::invalid_argument("critic_update: inputs/returns mismatch");
  std::vector<Tensor> params = critic.parameters();
  CriticStats stats;
  std::size_t steps = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t b = std::min(config.minibatch, n - start);
      std::vector<Tensor> xs;
      std::vector<double> rs;
      for (std::size_t r = 0; r < b; ++r) {
        xs.push_back(inputs[order[start + r]]);
        rs.push_back(returns[order[start + r]]);
      }
      Tape tape;
      const Tensor loss = critic.loss(tape, xs, rs);
      require_finite(loss.item(), "critic_update");
      optimizer.zero_grad();
      tape.backward(loss);
      stats.grad_norm += clip_grad_norm(params, config.max_grad_norm);
      optimizer.step();
      stats.loss += loss.item();
      ++steps;
    }
  }
  stats.loss /= static_cast<double>(steps);
  stats.grad_norm /= static_cast<double>(steps);
  return stats;
}

TransitionBatch rollout(env::CorridorEnv& env, const PolicyNet& policy, bool hypergraph_input,
                        std::mt19937_64& rng) {
  TransitionBatch batch;
  std::vector<std::ptrdiff_t> pending(env.num_agents(), -1);
  while (!env.done()) {
    const auto triggered = env.triggered();
    if (!triggered.empty()) {
      const Tensor critic_input = hypergraph_input ? env.node_features() : env.mean_observation();
      for (std::size_t i : triggered) {
        if (pending[i] >= 0) {
          Transition& prev = batch.steps[static_cast<std::size_t>(pending[i])];
          prev.reward = env.reward_since_decision(i);
          prev.duration_s = env.now() - prev.time;
        }
        Transition tr;
        tr.agent = i;
        tr.time = env.now();
        tr.obs = env.observation(i);
        tr.mask = env::action_mask(env.current_phase(i));
        const Sample s = act(policy, tr.obs, tr.mask, rng);
        tr.action = s.action;
        tr.old_log_prob = s.log_prob;
        tr.critic_input = critic_input;
        env.act(i, s.action);
        pending[i] = static_cast<std::ptrdiff_t>(batch.steps.size());
        batch.steps.push_back(std::move(tr));
      }
    }
    env.step();
  }
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (pending[i] < 0) continue;
    Transition& tr = batch.steps[static_cast<std::size_t>(pending[i])];
    tr.reward = env.reward_since_decision(i);
    tr.duration_s = env.now() - tr.time;
    tr.done = true;
  }
  for (const Transition& tr : batch.steps) batch.episode_reward += tr.reward;
  return batch;
}

std::size_t scenario_obs_width(const sim::ScenarioConfig& scenario) {
  sim::ScenarioConfig probe = scenario;
  probe.demand.corridor_rate_vph = 0.0;
  probe.demand.side_rate_vph = 0.0;
  return env::observation_width(sim::World(probe, 0), 0);
}

Trainer::Trainer(sim::ScenarioConfig scenario, TrainConfig config, AblationConfig ablation, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      config_(config),
      ablation_(ablation),
      seed_(seed),
      obs_width_([&] {
        config_.validate();
        scenario_.horizon_s = config_.horizon_s;
        return scenario_obs_width(scenario_);
      }()),
      agents_(scenario_.network.intersections),
      policy_(obs_width_, env::kActionCount, seed * 7919 + 1, config_.hidden),
      critic_(obs_width_, agents_, config_, ablation_, seed * 7919 + 2),
      actor_opt_(policy_.parameters(), AdamConfig{config_.actor_lr}),
      critic_opt_(critic_.parameters(), AdamConfig{config_.critic_lr}),
      rng_(seed * 7919 + 3) {}

UpdateStats Trainer::train_episode() {
  env::CorridorEnv env(scenario_, seed_ * 1'000'003ULL + static_cast<std::uint64_t>(updates_), config_.reward,
                       config_.window, config_.cadence_s);
  TransitionBatch batch = rollout(env, policy_, ablation_.hg, rng_);
  const std::size_t n = batch.steps.size();
  if (n == 0) throw std::runtime_error("train_episode: no decisions were made");

  // Monte-Carlo returns along each agent's own decision stream. A reward is a
  // per-second mean, so it is weighted by how long it was earned for; otherwise
  // long greens would look better simply by producing fewer rewards.
  std::vector<double> returns(n);
  for (std::size_t agent = 0; agent < agents_; ++agent) {
    std::vector<std::size_t> idx;
    std::vector<double> r;
    for (std::size_t k = 0; k < n; ++k) {
      if (batch.steps[k].agent != agent) continue;
      idx.push_back(k);
      r.push_back(batch.steps[k].reward * batch.steps[k].duration_s * config_.reward_scale);
    }
    const auto g = discounted_returns(r, config_.gamma);
    for (std::size_t j = 0; j < idx.size(); ++j) returns[idx[j]] = g[j];
  }

  std::vector<Tensor> inputs;
  inputs.reserve(n);
  for (const Transition& tr : batch.steps) inputs.push_back(tr.critic_input);
  std::vector<double> values(n);
  for (std::size_t start = 0; start < n; start += config_.minibatch) {
    const std::size_t b = std::min(config_.minibatch, n - start);
    Tape tape(Tape::Mode::kInference);
    const Tensor v = critic_.values(tape, std::span(inputs).subspan(start, b));
    std::copy(v.data().begin(), v.data().end(), values.begin() + static_cast<std::ptrdiff_t>(start));
  }

  PolicyBatch pb;
  const std::size_t width = obs_width_;
  std::vector<double> obs;
  obs.reserve(n * width);
  pb.mask = Mask(n, env::kActionCount);
  for (std::size_t k = 0; k < n; ++k) {
    const Transition& tr = batch.steps[k];
    obs.insert(obs.end(), tr.obs.begin(), tr.obs.end());
    for (std::size_t a = 0; a < env::kActionCount; ++a) pb.mask.set(k, a, tr.mask[a]);
    pb.actions.push_back(tr.action);
    pb.old_log_probs.push_back(tr.old_log_prob);
  }
  pb.obs = Tensor({n, width}, std::move(obs));
  pb.advantages = advantages(returns, values, config_.normalize_advantages);

  const PpoStats ps = ppo_update(policy_, actor_opt_, pb, config_, rng_);
  const CriticStats cs = critic_update(critic_, critic_opt_, inputs, returns, config_, rng_);

  UpdateStats out;
  out.update = ++updates_;
  out.mean_reward = batch.episode_reward / static_cast<double>(n);
  out.actor_loss = ps.actor_loss;
  out.critic_loss = cs.loss;
  out.entropy = ps.entropy;
  out.grad_norm = ps.grad_norm;
  out.decisions = n;
  out.first_epoch_ratios = ps.first_epoch_ratios;
  return out;
}

std::vector<UpdateStats> Trainer::train(int episodes, std::ostream* log) {
  std::vector<UpdateStats> all;
  if (log != nullptr && updates_ == 0) *log << kTrainLogHeader << '\n';
  for (int e = 0; e < episodes; ++e) {
    all.push_back(train_episode());
    if (log != nullptr) *log << format_train_log_row(all.back()) << '\n' << std::flush;
  }
  return all;
}

std::string format_train_log_row(const UpdateStats& s) {
  std::ostringstream os;
  os.precision(10);
  os << s.update << ',' << s.mean_reward << ',' << s.actor_loss << ',' << s.critic_loss << ',' << s.entropy << ','
     << s.grad_norm;
  return os.str();
}

std::vector<NamedTensor> Trainer::named_parameters() const {
  std::vector<NamedTensor> p = policy_.named_parameters();
  const auto c = critic_.named_parameters();
  p.insert(p.end(), c.begin(), c.end());
  return p;
}

void Trainer::save(const std::filesystem::path& path) const { save_checkpoint(path, named_parameters()); }

void Trainer::load(const std::filesystem::path& path) {
  auto target = named_parameters();
  assign_checkpoint(load_checkpoint(path), target);
}

PolicyNet load_policy(const std::filesystem::path& checkpoint, std::size_t obs_width) {
  const auto source = load_checkpoint(checkpoint);
  std::size_t hidden = 0;
  for (const NamedTensor& t : source) {
    if (t.name == "actor.W1") hidden = t.value.cols();
  }
  if (hidden == 0) throw std::runtime_error("checkpoint " + checkpoint.string() + " has no actor.W1");
  PolicyNet policy(obs_width, env::kActionCount, 0, hidden);
  auto target = policy.named_parameters();
  assign_checkpoint(source, target);
  return policy;
}

}  // namespace stdsh::marl
