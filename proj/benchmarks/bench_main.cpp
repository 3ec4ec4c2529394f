#include <benchmark/benchmark.h>

#include <random>

#include "stdsh/baselines.hpp"
#include "stdsh/encoder.hpp"
#include "stdsh/env.hpp"
#include "stdsh/hypergraph.hpp"
#include "stdsh/networks.hpp"
#include "stdsh/world.hpp"

using namespace stdsh;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(r * c);
  for (double& x : v) x = u(rng);
  return Tensor({r, c}, std::move(v));
}

void BM_EncoderForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = hg::build_st_hypergraph(n, 5);
  dsha::Encoder enc({.feature_width = 164, .heads = 4, .model_width = 64}, 1);
  const Tensor x = random_tensor(n * 5, 164, 2);
  for (auto _ : state) {
    Tape tape(Tape::Mode::kInference);
    benchmark::DoNotOptimize(enc.encode(tape, x, g.incidence()).graph_embedding.data().data());
  }
}
BENCHMARK(BM_EncoderForward)->Arg(6)->Arg(12);

void BM_EncoderForwardBackward(benchmark::State& state) {
  const auto g = hg::build_st_hypergraph(6, 5);
  dsha::Encoder enc({.feature_width = 164, .heads = 4, .model_width = 64}, 1);
  const Tensor x = random_tensor(30, 164, 3);
  for (auto _ : state) {
    Tape tape;
    const Tensor loss = tape.reduce_sum(enc.encode(tape, x, g.incidence()).graph_embedding);
    tape.backward(loss);
  }
}
BENCHMARK(BM_EncoderForwardBackward);

void BM_ActorForward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  PolicyNet policy(164, env::kActionCount, 4);
  const Tensor x = random_tensor(batch, 164, 5);
  for (auto _ : state) {
    Tape tape(Tape::Mode::kInference);
    benchmark::DoNotOptimize(policy.forward(tape, x).data().data());
  }
}
BENCHMARK(BM_ActorForward)->Arg(1)->Arg(256);

void BM_SimulatorEpisode(benchmark::State& state) {
  const auto scenario = sim::scenario_template(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    sim::World w(scenario, 7);
    std::mt19937_64 rng(7);
    while (!w.finished()) {
      for (std::size_t i = 0; i < w.num_intersections(); ++i) {
        const auto& c = w.controller(i);
        if (!c.trigger) continue;
        const auto a = env::decode_action(baselines::random_policy(env::action_mask(c.current_phase), rng));
        w.apply_signal(i, a.phase, a.green_s);
      }
      w.step();
    }
    benchmark::DoNotOptimize(w.spawned_total());
  }
  state.SetItemsProcessed(state.iterations() * scenario.horizon_s);
}
BENCHMARK(BM_SimulatorEpisode)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Observe(benchmark::State& state) {
  sim::World w(sim::scenario_template(3), 8);
  for (int t = 0; t < 600; ++t) w.step();
  for (auto _ : state) {
    for (std::size_t i = 0; i < w.num_intersections(); ++i) benchmark::DoNotOptimize(env::observe(w, i).data());
  }
}
BENCHMARK(BM_Observe);

}  // namespace

BENCHMARK_MAIN();
