#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "stdsh/env.hpp"
#include "stdsh/scenario.hpp"
#include "stdsh/world.hpp"

namespace stdsh::baselines {

inline constexpr double kLostTimeSeconds =
    static_cast<double>(sim::kPhaseCount * (sim::kAmberSeconds + sim::kAllRedSeconds));
inline constexpr int kMinCycle = static_cast<int>(sim::kPhaseCount) * sim::kMinGreenSeconds + 20;
inline constexpr int kMaxCycle = static_cast<int>(sim::kPhaseCount) * sim::kMaxGreenSeconds + 20;

struct CycleResult {
  int cycle_s = 0;
  bool oversaturated = false;  // Y >= 1 or C0 above the maximum; cycle forced to the maximum
};

// Webster: C0 = (1.5 L + 5) / (1 - Y), Y = sum of critical flow ratios,
// rounded and clamped to [4*8 + L, 4*45 + L].
CycleResult webster_cycle(std::span<const double> critical_flow_ratios, double lost_time_s);

// Greens proportional to the flow ratios, clamped to [8, 45], with the
// rounding residual handed out one second at a time by descending ratio so
// that sum(greens) + L == cycle.
std::vector<int> green_split(int cycle_s, std::span<const double> ratios, double lost_time_s);

struct WebsterPlan {
  int cycle_s = 0;
  std::array<int, sim::kPhaseCount> green_s{};
  bool oversaturated = false;
  std::array<double, sim::kPhaseCount> flow_ratio{};
};

// Critical flow ratio per phase and intersection, measured as stop-line
// arrivals over a warm-up run under equal 20 s greens.
std::vector<std::array<double, sim::kPhaseCount>> measure_flow_ratios(const sim::ScenarioConfig& scenario,
                                                                     std::uint64_t seed,
                                                                     int warmup_s = 300);

std::vector<WebsterPlan> plan_fixed_time(const sim::ScenarioConfig& scenario, std::uint64_t seed,
                                         int warmup_s = 300);

// Cycles P1 -> P2 -> P3 -> P4 with the planned greens.
class FixedTimeController {
 public:
  explicit FixedTimeController(std::vector<WebsterPlan> plans) : plans_(std::move(plans)) {}
  // Applies the next phase at every triggered intersection.
  void control(sim::World& world) const;
  const std::vector<WebsterPlan>& plans() const { return plans_; }

 private:
  std::vector<WebsterPlan> plans_;
};

// Uniform over the allowed indices.
std::size_t random_policy(const env::ActionMask& mask, std::mt19937_64& rng);

}  // namespace stdsh::baselines
