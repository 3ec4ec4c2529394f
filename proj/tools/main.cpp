#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stdsh/experiment.hpp"
#include "stdsh/scenario.hpp"
#include "stdsh/trainer.hpp"

namespace fs = std::filesystem;
using namespace stdsh;

namespace {

sim::ScenarioConfig scenario_from(int id, const std::string& config_file) {
  if (!config_file.empty()) return sim::load_scenario_file(config_file);
  return sim::scenario_template(id);
}

std::string tag(const eval::SummaryRow& r) {
  return "s" + std::to_string(r.scenario) + "_" + r.controller + "_" + r.ablation + "_seed" + std::to_string(r.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal corridor signal control: simulator, hypergraph MARL trainer and evaluation"};
  app.require_subcommand(1);

  int scenario = 1;
  std::string config_file;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "Train the shared actor and hypergraph critic");
  std::string ablation;
  std::string out_dir = "runs/train";
  int episodes = 200;
  marl::TrainConfig tc;
  train->add_option("--scenario", scenario, "Scenario template 1..5")->check(CLI::Range(1, 5));
  train->add_option("--config", config_file, "Scenario config file (overrides --scenario)");
  train->add_option("--ablation", ablation, "Components to remove: any of hg,dsha,she,the");
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--episodes", episodes, "Training episodes (one update each)")->check(CLI::PositiveNumber);
  train->add_option("--horizon", tc.horizon_s, "Episode length in seconds");
  train->add_option("--reward-scale", tc.reward_scale, "Reward multiplier before computing returns");

  auto* ev = app.add_subcommand("eval", "Run one evaluation cell and write summary/heatmap CSVs");
  std::string checkpoint;
  std::string controller = "fswf";
  std::string eval_out = "runs/eval";
  int horizon = 1800;
  int seeds = 1;
  ev->add_option("--checkpoint", checkpoint, "Trained checkpoint (stdsh, mappo)");
  ev->add_option("--scenario", scenario, "Scenario template 1..5")->check(CLI::Range(1, 5));
  ev->add_option("--config", config_file, "Scenario config file (overrides --scenario)");
  ev->add_option("--controller", controller, "stdsh | mappo | fswf | random");
  ev->add_option("--ablation", ablation, "Ablation the checkpoint was trained with (label only)");
  ev->add_option("--seed", seed, "First evaluation seed");
  ev->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  ev->add_option("--horizon", horizon, "Horizon in seconds")->check(CLI::PositiveNumber);
  ev->add_option("--out", eval_out, "Output directory");
  bool greedy = false;
  ev->add_flag("--greedy", greedy, "Argmax actions for learned controllers instead of sampling");

  auto* rep = app.add_subcommand("report", "Aggregate summary CSVs into report.csv");
  std::string in_dir;
  rep->add_option("--in", in_dir, "Directory holding summary*.csv files")->required();

  auto* sc = app.add_subcommand("scenario", "Print a scenario template as a config file");
  sc->add_option("--scenario", scenario, "Scenario template 1..5")->check(CLI::Range(1, 5));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = scenario_from(scenario, config_file);
      const auto abl = marl::AblationConfig::parse(ablation);
      fs::create_directories(out_dir);
      std::ofstream(fs::path(out_dir) / "scenario.cfg") << sim::format_scenario(cfg);
      std::ofstream log(fs::path(out_dir) / "train_log.csv");
      marl::Trainer trainer(cfg, tc, abl, seed);
      const auto start = std::chrono::steady_clock::now();
      log << marl::kTrainLogHeader << '\n';
      for (int e = 0; e < episodes; ++e) {
        const auto st = trainer.train_episode();
        log << marl::format_train_log_row(st) << '\n' << std::flush;
        std::cerr << "update " << st.update << "  reward " << st.mean_reward << "  entropy " << st.entropy
                  << "  critic " << st.critic_loss << '\n';
      }
      trainer.save(fs::path(out_dir) / "checkpoint.bin");
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << "trained " << abl.label() << " on scenario " << cfg.id << " for " << episodes << " episodes in "
                << secs << " s -> " << (fs::path(out_dir) / "checkpoint.bin").string() << '\n';
    } else if (*ev) {
      eval::ExperimentSpec spec;
      spec.scenario = scenario_from(scenario, config_file);
      spec.controller = eval::parse_controller(controller);
      spec.ablation = marl::AblationConfig::parse(ablation);
      spec.horizon_s = horizon;
      spec.checkpoint = checkpoint;
      spec.greedy = greedy;
      fs::create_directories(eval_out);
      std::cout << eval::kSummaryHeader << '\n';
      for (int k = 0; k < seeds; ++k) {
        spec.seed = seed + static_cast<std::uint64_t>(k);
        const auto res = eval::run_experiment(spec);
        const std::string name = tag(res.summary);
        std::ofstream summary(fs::path(eval_out) / ("summary_" + name + ".csv"));
        summary << eval::kSummaryHeader << '\n' << eval::format_summary_row(res.summary) << '\n';
        std::ofstream heat(fs::path(eval_out) / ("heatmap_" + name + ".csv"));
        eval::write_heatmap_csv(heat, res.log);
        std::ofstream metric(fs::path(eval_out) / ("metrics_" + name + ".csv"));
        eval::write_metric_log_csv(metric, res.log);
        std::cout << eval::format_summary_row(res.summary) << '\n';
      }
    } else if (*rep) {
      const auto rows = eval::report(in_dir);
      std::cout << eval::kReportHeader << '\n';
      for (const auto& r : rows) std::cout << eval::format_report_row(r) << '\n';
    } else if (*sc) {
      std::cout << sim::format_scenario(sim::scenario_template(scenario));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
