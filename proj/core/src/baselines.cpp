#include "stdsh/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stdsh::baselines {

CycleResult webster_cycle(std::span<const double> critical_flow_ratios, double lost_time_s) {
  if (!(lost_time_s > 0.0)) throw std::invalid_argument("lost time must be > 0");
  double y = 0.0;
  for (double r : critical_flow_ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("flow ratios must be >= 0");
    y += r;
  }
  const int lo = static_cast<int>(critical_flow_ratios.size()) * sim::kMinGreenSeconds +
                 static_cast<int>(std::lround(lost_time_s));
  const int hi = static_cast<int>(critical_flow_ratios.size()) * sim::kMaxGreenSeconds +
                 static_cast<int>(std::lround(lost_time_s));
  if (y >= 1.0) return {hi, true};
  const double c0 = std::round((1.5 * lost_time_s + 5.0) / (1.0 - y));
  if (c0 > hi) return {hi, true};
  return {static_cast<int>(std::max(c0, static_cast<double>(lo))), false};
}

std::vector<int> green_split(int cycle_s, std::span<const double> ratios, double lost_time_s) {
  const std::size_t p = ratios.size();
  if (p == 0) throw std::invalid_argument("green_split: no phases");
  const int usable = cycle_s - static_cast<int>(std::lround(lost_time_s));
  const int lo = static_cast<int>(p) * sim::kMinGreenSeconds;
  const int hi = static_cast<int>(p) * sim::kMaxGreenSeconds;
  if (usable < lo || usable > hi) {
    throw std::invalid_argument("green_split: cycle " + std::to_string(cycle_s) + " s cannot be split within [8, 45]");
  }
  const double y = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  std::vector<int> g(p);
  for (std::size_t k = 0; k < p; ++k) {
    const double share = y > 0.0 ? ratios[k] / y : 1.0 / static_cast<double>(p);
    g[k] = std::clamp(static_cast<int>(std::lround(usable * share)), sim::kMinGreenSeconds, sim::kMaxGreenSeconds);
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratios[a] > ratios[b]; });
  int residual = usable - std::accumulate(g.begin(), g.end(), 0);
  while (residual != 0) {
    const int dir = residual > 0 ? 1 : -1;
    for (std::size_t k : order) {
      if (residual == 0) break;
      const int next = g[k] + dir;
      if (next < sim::kMinGreenSeconds || next > sim::kMaxGreenSeconds) continue;
      g[k] = next;
      residual -= dir;
    }
  }
  return g;
}

std::vector<std::array<double, sim::kPhaseCount>> measure_flow_ratios(const sim::ScenarioConfig& scenario,
                                                                     std::uint64_t seed, int warmup_s) {
  if (warmup_s < 1) throw std::invalid_argument("warm-up must be >= 1 s");
  sim::ScenarioConfig cfg = scenario;
  cfg.horizon_s = warmup_s;
  sim::World world(cfg, seed);
  const std::size_t n = world.num_intersections();
  while (!world.finished()) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = world.controller(i);
      if (c.trigger) world.apply_signal(i, (c.current_phase + 1) % sim::kPhaseCount, 20);
    }
    world.step();
  }
  const double sat = cfg.signal.saturation_veh_per_s;
  std::vector<std::array<double, sim::kPhaseCount>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].fill(0.0);
    for (std::size_t l : world.approach_lanes(i)) {
      const sim::Lane& lane = world.lanes()[l];
      const double ratio = static_cast<double>(lane.arrivals) / warmup_s / sat;
      out[i][lane.phase] = std::max(out[i][lane.phase], ratio);
    }
  }
  return out;
}

std::vector<WebsterPlan> plan_fixed_time(const sim::ScenarioConfig& scenario, std::uint64_t seed, int warmup_s) {
  std::vector<WebsterPlan> plans;
  for (const auto& ratios : measure_flow_ratios(scenario, seed, warmup_s)) {
    WebsterPlan plan;
    plan.flow_ratio = ratios;
    const CycleResult c = webster_cycle(ratios, kLostTimeSeconds);
    plan.cycle_s = c.cycle_s;
    plan.oversaturated = c.oversaturated;
    const auto g = green_split(c.cycle_s, ratios, kLostTimeSeconds);
    std::copy(g.begin(), g.end(), plan.green_s.begin());
    plans.push_back(plan);
  }
  return plans;
}

void FixedTimeController::control(sim::World& world) const {
  if (plans_.size() != world.num_intersections()) throw std::invalid_argument("one plan per intersection required");
  for (std::size_t i = 0; i < plans_.size(); ++i) {
    const auto& c = world.controller(i);
    if (!c.trigger) continue;
    const sim::Phase next = (c.current_phase + 1) % sim::kPhaseCount;
    world.apply_signal(i, next, plans_[i].green_s[next]);
  }
}

std::size_t random_policy(const env::ActionMask& mask, std::mt19937_64& rng) {
  const auto allowed = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (allowed == 0) throw std::invalid_argument("random_policy: all actions are masked");
  std::size_t k = std::uniform_int_distribution<std::size_t>(0, allowed - 1)(rng);
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a] && k-- == 0) return a;
  }
  return mask.size();  // unreachable
}

}  // namespace stdsh::baselines
