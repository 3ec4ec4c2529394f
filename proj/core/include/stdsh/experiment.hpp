#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stdsh/scenario.hpp"
#include "stdsh/trainer.hpp"
#include "stdsh/world.hpp"

namespace stdsh::eval {

enum class ControllerKind { kStdsh, kMappo, kFixedTime, kRandom };

// "stdsh", "mappo", "fswf", "random"
ControllerKind parse_controller(std::string_view name);
std::string controller_name(ControllerKind kind);

struct ExperimentSpec {
  sim::ScenarioConfig scenario;
  ControllerKind controller = ControllerKind::kFixedTime;
  // Recorded in the summary for learned controllers. mappo always reports hg-off.
  marl::AblationConfig ablation;
  std::uint64_t seed = 0;
  int horizon_s = 1800;
  std::filesystem::path checkpoint;  // required by stdsh and mappo
  // Learned controllers sample from the policy (seeded by `seed`) unless greedy is set.
  bool greedy = false;
};

struct SummaryRow {
  int scenario = 0;
  std::string controller;
  std::string ablation;
  std::uint64_t seed = 0;
  double anp = 0.0;
  double aql = 0.0;
  std::optional<double> awt_bus;
  std::optional<double> awt_tram;
};

struct ExperimentResult {
  sim::MetricsLog log;
  SummaryRow summary;
};

// Deterministic in (spec.scenario, spec.seed, checkpoint contents).
ExperimentResult run_experiment(const ExperimentSpec& spec);

inline constexpr std::string_view kSummaryHeader = "scenario,controller,ablation,seed,anp,aql,awt_bus,awt_tram";
std::string format_summary_row(const SummaryRow& row);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

// Rows "t,metric,i1..iN,network" for metric in {delayed_passengers, queue_veh}.
void write_heatmap_csv(std::ostream& out, const sim::MetricsLog& log);
// "t,delayed_passengers,queue_veh,delayed_i1..,queue_i1.."
void write_metric_log_csv(std::ostream& out, const sim::MetricsLog& log);

struct ReportRow {
  int scenario = 0;
  std::string controller;
  std::string ablation;
  std::size_t runs = 0;
  double anp = 0.0;
  double aql = 0.0;
  std::optional<double> awt_bus;  // mean over runs that report it
  std::optional<double> awt_tram;
};

inline constexpr std::string_view kReportHeader = "scenario,controller,ablation,runs,anp,aql,awt_bus,awt_tram";
std::vector<ReportRow> aggregate(const std::vector<SummaryRow>& rows);
std::string format_report_row(const ReportRow& row);

// Reads every summary*.csv under `dir`, writes dir/report.csv and returns
// the aggregated rows.
std::vector<ReportRow> report(const std::filesystem::path& dir);

}  // namespace stdsh::eval
