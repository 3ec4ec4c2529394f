// Acceptance run: one PASS/FAIL line per criterion. Exit code is non-zero if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stdsh/baselines.hpp"
#include "stdsh/encoder.hpp"
#include "stdsh/experiment.hpp"
#include "stdsh/gradcheck.hpp"
#include "stdsh/hypergraph.hpp"
#include "stdsh/trainer.hpp"

namespace fs = std::filesystem;
using namespace stdsh;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "C" << id << " " << name << ": " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(r * c);
  for (double& x : v) x = u(rng);
  return Tensor({r, c}, std::move(v));
}

// Realistic critic input: a node-feature window from a running corridor.
Tensor corridor_window(std::uint64_t seed, int seconds) {
  env::CorridorEnv e(sim::scenario_template(3), seed);
  std::mt19937_64 rng(seed);
  while (e.now() < seconds) {
    for (std::size_t i : e.triggered()) e.act(i, baselines::random_policy(env::action_mask(e.current_phase(i)), rng));
    e.step();
  }
  return e.node_features();
}

void random_control(sim::World& w, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < w.num_intersections(); ++i) {
    const auto& c = w.controller(i);
    if (!c.trigger) continue;
    const env::Action a = env::decode_action(baselines::random_policy(env::action_mask(c.current_phase), rng));
    w.apply_signal(i, a.phase, a.green_s);
  }
}

Outcome c1_normalization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  const std::size_t heads[] = {1, 2, 4};
  double worst = 0.0;
  bool masked_exact = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 6, t = 1 + rng() % 5, k = heads[rng() % 3];
    const auto g = hg::build_st_hypergraph(n, t);
    const auto& h = g.incidence();
    dsha::Encoder enc({.feature_width = 16, .heads = k, .model_width = 16}, rng());
    Tape tape(Tape::Mode::kInference);
    const auto out = enc.encode(tape, random_tensor(n * t, 16, rng), h);
    for (std::size_t head = 0; head < k; ++head) {
      for (std::size_t e = 0; e < h.cols(); ++e) {
        double s = 0;
        for (std::size_t i = 0; i < h.rows(); ++i) {
          s += out.alpha[head].at(i, e);
          if (!h(i, e) && out.alpha[head].at(i, e) != 0.0) masked_exact = false;
        }
        worst = std::max(worst, std::abs(s - 1.0));
      }
      for (std::size_t i = 0; i < h.rows(); ++i) {
        double s = 0;
        for (std::size_t e = 0; e < h.cols(); ++e) {
          s += out.beta[head].at(i, e);
          if (!h(i, e) && out.beta[head].at(i, e) != 0.0) masked_exact = false;
        }
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-12 && masked_exact && dt < 10.0,
          "max |sum-1| = " + fmt(worst) + ", masked entries exactly 0: " + (masked_exact ? "yes" : "no") +
              ", " + fmt(dt, 3) + " s (limit 10 s)"};
}

Outcome c2_gradient() {
  const auto t0 = Clock::now();
  marl::TrainConfig cfg;  // production widths
  const Tensor window = corridor_window(7, 120);
  const marl::CriticModel critic(window.cols(), 6, cfg, marl::AblationConfig{}, 11);
  const std::vector<Tensor> inputs = {window};
  const std::vector<double> returns = {-3.0};
  std::vector<Tensor> params = critic.parameters();
  std::size_t count = 0;
  for (const Tensor& p : params) count += p.numel();
  const double err = finite_diff_check([&](Tape& t) { return critic.loss(t, inputs, returns); }, params, 1e-5);
  const double dt = seconds_since(t0);
  return {err <= 1e-4 && dt < 60.0, "max relative error " + fmt(err) + " over " + std::to_string(count) +
                                        " parameters, " + fmt(dt, 3) + " s (limit 60 s)"};
}

Outcome c3_readout() {
  std::mt19937_64 rng(303);
  const auto g = hg::build_st_hypergraph(6, 5);
  const Tensor x = corridor_window(3, 200);
  dsha::Encoder enc({.feature_width = x.cols(), .heads = 4, .model_width = 64}, 5);
  Tape tape(Tape::Mode::kInference);
  const Tensor g0 = enc.encode(tape, x, g.incidence()).graph_embedding;
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const Tensor g1 = enc.encode(tape, tape.take_rows(x, perm), g.permuted_rows(perm).incidence()).graph_embedding;
    for (std::size_t c = 0; c < g0.cols(); ++c) worst = std::max(worst, std::abs(g0.at(0, c) - g1.at(0, c)));
  }
  return {worst <= 1e-12, "max |g - g_perm| = " + fmt(worst) + " over 50 permutations"};
}

Outcome c4_codec() {
  bool ok = true;
  for (std::size_t a = 0; a < env::kActionCount; ++a) ok = ok && env::encode_action(env::decode_action(a)) == a;
  for (sim::Phase p = 0; p < sim::kPhaseCount; ++p) {
    const auto m = env::action_mask(p);
    std::size_t removed = 0;
    for (std::size_t a = 0; a < env::kActionCount; ++a) {
      if (!m[a]) {
        ++removed;
        ok = ok && env::decode_action(a).phase == p;
      }
    }
    ok = ok && removed == env::kGreenChoices;
  }
  return {ok && env::kActionCount == 152, "152 indices round-trip, 38 removed per phase: " + std::string(ok ? "yes" : "no")};
}

Outcome c5_conservation() {
  sim::World w(sim::scenario_template(3), 5);
  std::mt19937_64 rng(5);
  std::int64_t violations = 0, bad_discharges = 0, discharges = 0;
  while (!w.finished()) {
    random_control(w, rng);
    const auto rec = w.step();
    if (w.spawned_total() != w.in_network() + w.exited_total()) ++violations;
    for (const auto& d : rec.discharges) {
      ++discharges;
      if (d.stage != sim::Stage::kGreen || w.lanes()[d.lane].phase != d.controller_phase) ++bad_discharges;
    }
  }
  return {violations == 0 && bad_discharges == 0 && w.seconds().size() == 1800,
          std::to_string(w.spawned_total()) + " spawned, " + std::to_string(violations) +
              " conservation violations, " + std::to_string(bad_discharges) + " of " + std::to_string(discharges) +
              " discharges outside green"};
}

Outcome c6_reward() {
  sim::World w(sim::scenario_template(3), 9);
  std::mt19937_64 rng(9);
  const std::size_t n = w.num_intersections();
  // Independent recount straight from vehicle states, once per second.
  std::vector<std::vector<std::int64_t>> local;
  std::vector<std::int64_t> network;
  while (!w.finished()) {
    random_control(w, rng);
    w.step();
    std::vector<std::int64_t> per(n, 0);
    std::int64_t total = 0;
    for (const sim::Vehicle& v : w.vehicles()) {
      if (v.state == sim::VehicleState::kExited || v.state == sim::VehicleState::kDwelling) continue;
      const double speed = v.state == sim::VehicleState::kMoving ? w.free_flow_kmh(v.mode) : 0.0;
      if (speed < w.config().signal.speed_threshold_kmh) {
        per[w.lanes()[v.lane].intersection] += v.occupancy;
        total += v.occupancy;
      }
    }
    local.push_back(per);
    network.push_back(total);
  }
  const auto& secs = w.seconds();
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 1 + rng() % 60;
    const std::size_t start = rng() % (secs.size() - len);
    const std::size_t i = rng() % n;
    env::RewardConfig cfg;
    cfg.w1 = std::uniform_real_distribution<double>(0, 1)(rng);
    cfg.w2 = 1.0 - cfg.w1;
    std::int64_t sum_local = 0, sum_net = 0;
    for (std::size_t t = start; t < start + len; ++t) {
      sum_local += local[t][i];
      sum_net += network[t];
    }
    const double m = static_cast<double>(len);
    const double oracle = -(cfg.w1 / m * static_cast<double>(sum_local) + cfg.w2 / m * static_cast<double>(sum_net));
    const double got = env::compute_reward(std::span(secs).subspan(start, len), i, cfg);
    if (got != oracle) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 100 random windows differ from the recount"};
}

Outcome c7_bandit() {
  int solved = 0;
  bool ratios_one = true;
  std::vector<int> needed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PolicyNet p(1, 2, 1000 + seed, 16);
    Adam opt(p.parameters());
    marl::TrainConfig cfg;
    cfg.entropy_coef = 0.0;
    std::mt19937_64 rng(seed);
    const Mask one_mask(1, 2, true);
    int updates = 0;
    bool done = false;
    for (; updates < 500; ++updates) {
      Tape tape(Tape::Mode::kInference);
      const Tensor lp = tape.masked_log_softmax(p.forward(tape, Tensor({1, 1}, {1.0})), one_mask);
      const double p_best = std::exp(lp.data()[0]);
      if (p_best > 0.95) {
        done = true;
        break;
      }
      const std::size_t n = 64;  // <= minibatch: one minibatch per epoch
      marl::PolicyBatch b;
      b.obs = Tensor({n, 1}, std::vector<double>(n, 1.0));
      b.mask = Mask(n, 2, true);
      std::vector<double> rewards;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t a = std::uniform_real_distribution<double>(0, 1)(rng) < p_best ? 0 : 1;
        b.actions.push_back(a);
        b.old_log_probs.push_back(lp.data()[a]);
        rewards.push_back(a == 0 ? 1.0 : 0.0);
      }
      const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(n);
      b.advantages = marl::advantages(rewards, std::vector<double>(n, mean), true);
      const auto stats = marl::ppo_update(p, opt, b, cfg, rng);
      for (double r : stats.first_epoch_ratios) ratios_one = ratios_one && r == 1.0;
    }
    if (done) ++solved;
    needed.push_back(done ? updates : -1);
  }
  std::string list;
  for (int u : needed) list += (list.empty() ? "" : ",") + std::to_string(u);
  return {solved == 5 && ratios_one, std::to_string(solved) + "/5 seeds above 0.95 (updates needed: " + list +
                                         "), first-epoch ratios exactly 1: " + (ratios_one ? "yes" : "no")};
}

struct TrainRun {
  std::vector<marl::UpdateStats> stats;
  double seconds = 0.0;
  fs::path checkpoint;
};

TrainRun train(const fs::path& dir, const std::string& ablation, int episodes) {
  fs::create_directories(dir);
  marl::Trainer trainer(sim::scenario_template(1), marl::TrainConfig{}, marl::AblationConfig::parse(ablation), 0);
  std::ofstream log(dir / "train_log.csv");
  TrainRun run;
  const auto t0 = Clock::now();
  for (int e = 0; e < episodes; ++e) {
    const auto s = trainer.train(1, &log);
    run.stats.push_back(s.back());
    if ((e + 1) % 25 == 0) {
      std::cout << "  [" << (ablation.empty() ? "full" : ablation + "-off") << "] update " << e + 1
                << " mean reward " << fmt(s.back().mean_reward) << " entropy " << fmt(s.back().entropy)
                << std::endl;
    }
  }
  run.seconds = seconds_since(t0);
  run.checkpoint = dir / "checkpoint.bin";
  trainer.save(run.checkpoint);
  return run;
}

struct EvalSet {
  std::vector<double> anp;
  double mean() const { return std::accumulate(anp.begin(), anp.end(), 0.0) / static_cast<double>(anp.size()); }
  double sd() const {
    const double m = mean();
    double v = 0;
    for (double x : anp) v += (x - m) * (x - m);
    return std::sqrt(v / static_cast<double>(anp.size() - 1));
  }
};

EvalSet evaluate(eval::ControllerKind kind, const fs::path& checkpoint, const std::string& ablation,
                 const fs::path& out_csv, double* cell_seconds = nullptr) {
  EvalSet set;
  std::ofstream out(out_csv);
  out << eval::kSummaryHeader << '\n';
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    eval::ExperimentSpec spec;
    spec.scenario = sim::scenario_template(1);
    spec.controller = kind;
    spec.ablation = marl::AblationConfig::parse(ablation);
    spec.seed = seed;
    spec.checkpoint = checkpoint;
    const auto t0 = Clock::now();
    const auto r = eval::run_experiment(spec);
    if (cell_seconds != nullptr) *cell_seconds = std::max(*cell_seconds, seconds_since(t0));
    out << eval::format_summary_row(r.summary) << '\n';
    set.anp.push_back(r.summary.anp);
  }
  return set;
}

double cohens_d(const EvalSet& a, const EvalSet& b) {
  const double pooled = std::sqrt((a.sd() * a.sd() + b.sd() * b.sd()) / 2.0);
  return pooled > 0 ? (a.mean() - b.mean()) / pooled : 0.0;
}

bool trainable(const std::vector<marl::UpdateStats>& stats, int first, double* min_entropy) {
  bool ok = true;
  *min_entropy = 1e9;
  for (std::size_t k = 0; k < stats.size(); ++k) {
    const auto& s = stats[k];
    const bool finite = std::isfinite(s.actor_loss) && std::isfinite(s.critic_loss) && std::isfinite(s.entropy) &&
                        std::isfinite(s.grad_norm) && std::isfinite(s.mean_reward);
    ok = ok && finite;
    if (static_cast<int>(k) < first) {
      *min_entropy = std::min(*min_entropy, s.entropy);
      ok = ok && s.entropy > 0.1 * std::log(114.0);
    }
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work_dir = "acceptance_runs";
  int episodes = 200;
  app.add_option("--work-dir", work_dir, "Directory for checkpoints and CSVs");
  app.add_option("--episodes", episodes, "Training episodes for the directional comparison")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  const fs::path root(work_dir);
  fs::create_directories(root);

  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "encoder normalization", guarded(c1_normalization));
  report(2, "gradient integrity", guarded(c2_gradient));
  report(3, "readout invariance", guarded(c3_readout));
  report(4, "action codec", guarded(c4_codec));
  report(5, "simulator conservation", guarded(c5_conservation));
  report(6, "reward oracle", guarded(c6_reward));
  report(7, "PPO sanity", guarded(c7_bandit));

  TrainRun full, hg_off;
  double cell_seconds = 0.0;
  report(8, "directional reproduction (scenario 1)", guarded([&] {
           full = train(root / "train_full", "", episodes);
           hg_off = train(root / "train_hg_off", "hg", episodes);
           const EvalSet s = evaluate(eval::ControllerKind::kStdsh, full.checkpoint, "", root / "summary_stdsh.csv",
                                      &cell_seconds);
           const EvalSet h = evaluate(eval::ControllerKind::kMappo, hg_off.checkpoint, "hg",
                                      root / "summary_hg_off.csv", &cell_seconds);
           const EvalSet f = evaluate(eval::ControllerKind::kFixedTime, {}, "", root / "summary_fswf.csv",
                                      &cell_seconds);
           eval::report(root);
           const bool ok = s.mean() < f.mean() && s.mean() <= h.mean();
           return Outcome{ok, "mean ANP stdsh " + fmt(s.mean()) + " (sd " + fmt(s.sd(), 3) + "), fswf " +
                                  fmt(f.mean()) + " (sd " + fmt(f.sd(), 3) + "), hg-off " + fmt(h.mean()) + " (sd " +
                                  fmt(h.sd(), 3) + "); stdsh-fswf " + fmt(s.mean() - f.mean()) + " (d=" +
                                  fmt(cohens_d(s, f), 3) + "), stdsh-hgoff " + fmt(s.mean() - h.mean()) + " (d=" +
                                  fmt(cohens_d(s, h), 3) + ")"};
         }));

  report(9, "ablation trainability", guarded([&] {
           std::string detail;
           bool ok = true;
           double min_entropy = 0;
           if (hg_off.stats.empty()) hg_off.stats = train(root / "train_hg_off", "hg", 50).stats;
           ok = trainable(hg_off.stats, 50, &min_entropy) && ok;
           detail += "hg-off min entropy " + fmt(min_entropy, 3);
           for (const std::string ab : {"dsha", "she", "the"}) {
             const TrainRun r = train(root / ("train_" + ab + "_off"), ab, 50);
             const bool t = trainable(r.stats, 50, &min_entropy) && r.stats.size() == 50;
             ok = ok && t;
             detail += ", " + ab + "-off " + fmt(min_entropy, 3);
           }
           detail += " (floor " + fmt(0.1 * std::log(114.0), 3) + ", no NaN: " + (ok ? "yes" : "no") + ")";
           return Outcome{ok, detail};
         }));

  report(10, "budget", guarded([&] {
           if (full.stats.empty()) return Outcome{false, "training did not run"};
           const double per_episode = full.seconds / static_cast<double>(full.stats.size());
           const double projected = per_episode * 200.0;
           return Outcome{projected < 7200.0 && cell_seconds < 60.0,
                          "200-episode training " + fmt(projected, 4) + " s (limit 7200 s), slowest evaluation cell " +
                              fmt(cell_seconds, 3) + " s (limit 60 s)"};
         }));

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
