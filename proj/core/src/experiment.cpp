#include "stdsh/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "stdsh/baselines.hpp"
#include "stdsh/env.hpp"
#include "stdsh/metrics.hpp"

namespace stdsh::eval {
namespace {

std::string fmt_real(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt_real(*x) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ControllerKind parse_controller(std::string_view name) {
  if (name == "stdsh") return ControllerKind::kStdsh;
  if (name == "mappo") return ControllerKind::kMappo;
  if (name == "fswf") return ControllerKind::kFixedTime;
  if (name == "random") return ControllerKind::kRandom;
  throw std::invalid_argument("unknown controller '" + std::string(name) + "' (expected stdsh, mappo, fswf, random)");
}

std::string controller_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kStdsh:
      return "stdsh";
    case ControllerKind::kMappo:
      return "mappo";
    case ControllerKind::kFixedTime:
      return "fswf";
    case ControllerKind::kRandom:
      return "random";
  }
  return "?";
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  sim::ScenarioConfig scenario = spec.scenario;
  scenario.horizon_s = spec.horizon_s;

  const bool learned = spec.controller == ControllerKind::kStdsh || spec.controller == ControllerKind::kMappo;
  std::optional<PolicyNet> policy;
  if (learned) {
    if (spec.checkpoint.empty() || !std::filesystem::exists(spec.checkpoint)) {
      throw std::invalid_argument("controller " + controller_name(spec.controller) + " needs a checkpoint; '" +
                                  spec.checkpoint.string() + "' not found");
    }
    policy.emplace(marl::load_policy(spec.checkpoint, marl::scenario_obs_width(scenario)));
  }
  std::optional<baselines::FixedTimeController> fixed;
  if (spec.controller == ControllerKind::kFixedTime) {
    fixed.emplace(baselines::plan_fixed_time(scenario, spec.seed));
  }
  std::mt19937_64 action_rng(spec.seed ^ 0x5eed'0000'0000ULL);

  sim::World world(scenario, spec.seed);
  while (!world.finished()) {
    if (fixed) {
      fixed->control(world);
    } else {
      for (std::size_t i = 0; i < world.num_intersections(); ++i) {
        const auto& c = world.controller(i);
        if (!c.trigger) continue;
        const auto mask = env::action_mask(c.current_phase);
        std::size_t a = 0;
        if (policy) {
          auto obs = env::observe(world, i);
          env::normalize_observation(obs);
          a = spec.greedy ? marl::act_greedy(*policy, obs, mask) : marl::act(*policy, obs, mask, action_rng).action;
        } else {
          a = baselines::random_policy(mask, action_rng);
        }
        const env::Action act = env::decode_action(a);
        world.apply_signal(i, act.phase, act.green_s);
      }
    }
    world.step();
  }

  ExperimentResult out;
  out.log = world.metrics_log();
  SummaryRow& row = out.summary;
  row.scenario = scenario.id;
  row.controller = controller_name(spec.controller);
  row.ablation = spec.controller == ControllerKind::kMappo ? "hg-off"
                 : spec.controller == ControllerKind::kStdsh ? spec.ablation.label()
                                                             : "-";
  row.seed = spec.seed;
  row.anp = metrics::anp(out.log, spec.horizon_s);
  row.aql = metrics::aql(out.log);
  row.awt_bus = metrics::awt_bus(out.log);
  row.awt_tram = metrics::awt_tram(out.log);
  return out;
}

std::string format_summary_row(const SummaryRow& r) {
  return std::to_string(r.scenario) + ',' + r.controller + ',' + r.ablation + ',' + std::to_string(r.seed) + ',' +
         fmt_real(r.anp) + ',' + fmt_real(r.aql) + ',' + fmt_opt(r.awt_bus) + ',' + fmt_opt(r.awt_tram);
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::vector<SummaryRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == kSummaryHeader) continue;
    const auto c = split_csv(line);
    if (c.size() != 8) {
      throw std::runtime_error("summary line " + std::to_string(lineno) + ": expected 8 columns, got " +
                               std::to_string(c.size()));
    }
    SummaryRow r;
    r.scenario = std::stoi(c[0]);
    r.controller = c[1];
    r.ablation = c[2];
    r.seed = std::stoull(c[3]);
    r.anp = std::stod(c[4]);
    r.aql = std::stod(c[5]);
    r.awt_bus = parse_opt(c[6]);
    r.awt_tram = parse_opt(c[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_heatmap_csv(std::ostream& out, const sim::MetricsLog& log) {
  out << "t,metric";
  for (std::size_t i = 0; i < log.intersections; ++i) out << ",i" << i + 1;
  out << ",network\n";
  for (const auto& s : log.seconds) {
    out << s.t << ",delayed_passengers";
    for (auto v : s.delayed) out << ',' << v;
    out << ',' << s.network_delayed << '\n';
    out << s.t << ",queue_veh";
    for (auto v : s.queued) out << ',' << v;
    out << ',' << s.network_queued << '\n';
  }
}

void write_metric_log_csv(std::ostream& out, const sim::MetricsLog& log) {
  out << "t,delayed_passengers,queue_veh";
  for (std::size_t i = 0; i < log.intersections; ++i) out << ",delayed_i" << i + 1;
  for (std::size_t i = 0; i < log.intersections; ++i) out << ",queue_i" << i + 1;
  out << '\n';
  for (const auto& s : log.seconds) {
    out << s.t << ',' << s.network_delayed << ',' << s.network_queued;
    for (auto v : s.delayed) out << ',' << v;
    for (auto v : s.queued) out << ',' << v;
    out << '\n';
  }
}

std::vector<ReportRow> aggregate(const std::vector<SummaryRow>& rows) {
  struct Acc {
    ReportRow row;
    std::size_t bus = 0, tram = 0;
    double bus_sum = 0.0, tram_sum = 0.0;
  };
  std::map<std::tuple<int, std::string, std::string>, Acc> groups;
  for (const SummaryRow& r : rows) {
    Acc& a = groups[{r.scenario, r.controller, r.ablation}];
    a.row.scenario = r.scenario;
    a.row.controller = r.controller;
    a.row.ablation = r.ablation;
    ++a.row.runs;
    a.row.anp += r.anp;
    a.row.aql += r.aql;
    if (r.awt_bus) {
      ++a.bus;
      a.bus_sum += *r.awt_bus;
    }
    if (r.awt_tram) {
      ++a.tram;
      a.tram_sum += *r.awt_tram;
    }
  }
  std::vector<ReportRow> out;
  for (auto& [key, a] : groups) {
    const double n = static_cast<double>(a.row.runs);
    a.row.anp /= n;
    a.row.aql /= n;
    if (a.bus > 0) a.row.awt_bus = a.bus_sum / static_cast<double>(a.bus);
    if (a.tram > 0) a.row.awt_tram = a.tram_sum / static_cast<double>(a.tram);
    out.push_back(a.row);
  }
  return out;
}

std::string format_report_row(const ReportRow& r) {
  return std::to_string(r.scenario) + ',' + r.controller + ',' + r.ablation + ',' + std::to_string(r.runs) + ',' +
         fmt_real(r.anp) + ',' + fmt_real(r.aql) + ',' + fmt_opt(r.awt_bus) + ',' + fmt_opt(r.awt_tram);
}

std::vector<ReportRow> report(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("report: not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.starts_with("summary") && name.ends_with(".csv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SummaryRow> rows;
  for (const auto& f : files) {
    std::ifstream in(f);
    auto part = read_summary_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  auto table = aggregate(rows);
  std::ofstream out(dir / "report.csv");
  out << kReportHeader << '\n';
  for (const auto& r : table) out << format_report_row(r) << '\n';
  return table;
}

}  // namespace stdsh::eval
