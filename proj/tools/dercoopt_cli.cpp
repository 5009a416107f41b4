// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dercoopt/baselines.hpp"
#include "dercoopt/config.hpp"
#include "dercoopt/csvio.hpp"
#include "dercoopt/errors.hpp"
#include "dercoopt/log.hpp"
#include "dercoopt/mco.hpp"
#include "dercoopt/parallel.hpp"
#include "dercoopt/policy.hpp"
#include "dercoopt/scenario.hpp"
#include "dercoopt/storage.hpp"
#include "dercoopt/tariff.hpp"

namespace {

using namespace dercoopt;
using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  int jobs = 0;
  std::string out_dir;
  std::size_t window = 0;
  std::string policy;
  bool emit_trajectories = false;
  int interval_index = -1;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* paths_opt = nullptr;
  CLI::Option* window_opt = nullptr;
};

void add_common_options(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "Scenario config JSON file")
      ->required();
  args->seed_opt =
      cmd->add_option("--seed", args->seed, "Override the config seed");
  args->paths_opt = cmd->add_option("--paths", args->paths,
                                    "Override the number of sampled paths");
  cmd->add_option("--jobs", args->jobs,
                  "Worker count (default: available parallelism)");
  cmd->add_option("--out", args->out_dir, "Override the output directory");
}

ScenarioConfig load_scenario(const CommonArgs& args) {
  ScenarioConfig config = load_config(args.config_path);
  if (args.seed_opt != nullptr && args.seed_opt->count() > 0) {
    config.seed = args.seed;
  }
  if (args.paths_opt != nullptr && args.paths_opt->count() > 0) {
    if (args.paths == 0) throw ConfigError("--paths must be at least 1");
    config.n_paths = args.paths;
  }
  if (args.window_opt != nullptr && args.window_opt->count() > 0) {
    if (args.window == 0) throw ConfigError("--window must be at least 1");
    config.mpc_window = args.window;
  }
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  std::cerr << config_diagnostics(config);
  return config;
}

void write_file(const std::filesystem::path& path,
                const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write output file: " + path.string());
  }
  out << content;
}

std::string iso_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char text[32];
  std::strftime(text, sizeof(text), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return text;
}

json base_summary(const char* command, const ScenarioConfig& config) {
  json summary;
  summary["command"] = command;
  summary["seed"] = config.seed;
  summary["n_paths"] = config.n_paths;
  summary["timestamp"] = iso_timestamp();
  summary["config"] = json::parse(config.canonical_text);
  return summary;
}

// One-dimensional concave maximization with both endpoints checked.
template <typename F>
double maximize_on(double lo, double hi, const F& fn) {
  constexpr double kGoldenRatio = 0.6180339887498949;
  if (!(hi > lo)) return lo;
  double a = lo;
  double b = hi;
  double x1 = b - kGoldenRatio * (b - a);
  double x2 = a + kGoldenRatio * (b - a);
  double f1 = fn(x1);
  double f2 = fn(x2);
  while (b - a > 1e-9) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGoldenRatio * (b - a);
      f2 = fn(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGoldenRatio * (b - a);
      f1 = fn(x1);
    }
  }
  double arg = 0.5 * (a + b);
  double val = fn(arg);
  for (double c : {lo, hi}) {
    const double v = fn(c);
    if (v > val) {
      val = v;
      arg = c;
    }
  }
  return arg;
}

// Greedy rollout of a solved value table along one realized path.
Trajectory dp_rollout(const DpSolution& solution,
                      const MarkovRenewable& chain,
                      const TariffSchedule& tariff,
                      const FleetSchedule& fleets, const BatterySpec& spec,
                      double soc0, const std::vector<double>& g_path) {
  const std::size_t horizon = tariff.horizon();
  Trajectory out;
  out.records.reserve(horizon);
  double s = std::clamp(soc0, spec.soc_min, spec.capacity);
  for (std::size_t t = 0; t < horizon; ++t) {
    const TariffInterval& iv = tariff.at(t);
    const DeviceFleet& fleet = fleets.at(t);
    const double g = g_path[t];
    const ClippedLimits limits = clip_limits(spec, s);
    const std::size_t level = chain.nearest_level(g);
    const auto continuation = [&](double snext) {
      if (t + 1 == horizon) return solution.value_at(horizon, snext, 0);
      const auto& row = chain.matrix_at(t)[level];
      double value = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] == 0.0) continue;
        value += row[j] * solution.value_at(t + 1, snext, j);
      }
      return value;
    };
    const auto objective = [&](double e) {
      const double snext =
          std::clamp(s + spec.charge_eff * std::max(e, 0.0) -
                         std::max(-e, 0.0) / spec.discharge_eff,
                     spec.soc_min, spec.capacity);
      const Decision c = consumption_for_net_supply(fleet, iv, g - e);
      return fleet.utility_value(c.d) - payment(iv, c.z) +
             continuation(snext);
    };
    const double e = maximize_on(-limits.discharge, limits.charge, objective);
    Decision decision = consumption_for_net_supply(fleet, iv, g - e);
    decision.e = e;
    s = step_soc(spec, s, e);

    StageRecord record;
    record.t = t;
    record.g = g;
    record.d = decision.d;
    record.e = e;
    record.z = decision.z;
    record.soc_after = s;
    record.stage_reward = stage_reward(iv, fleet, decision, g);
    out.records.push_back(std::move(record));
  }
  out.terminal_salvage = spec.salvage_rate * (s - soc0);
  double total = out.terminal_salvage;
  for (const auto& record : out.records) total += record.stage_reward;
  out.cumulative_reward = total;
  return out;
}

std::unique_ptr<Forecaster> make_forecaster(const RenewableModel& model,
                                            std::size_t horizon) {
  if (model.kind == RenewableKind::profile) {
    return std::make_unique<ProfileForecaster>(model, horizon);
  }
  return std::make_unique<MarkovForecaster>(model.chain);
}

// Runs one policy on every sampled path; deterministic slot-per-path
// output regardless of worker count.
std::vector<Trajectory> run_policy_on_paths(
    const std::string& policy, const ScenarioConfig& config,
    const BatterySpec& spec, const std::vector<std::vector<double>>& paths,
    int jobs) {
  const std::size_t horizon = config.horizon;
  std::vector<Trajectory> out(paths.size());

  if (policy == "dp") {
    const MarkovRenewable chain =
        to_markov_chain(config.renewable, horizon, config.dp_levels);
    DpOptions options;
    options.soc_step = config.soc_step;
    options.action_step = config.action_step;
    options.jobs = static_cast<std::size_t>(jobs > 0 ? jobs : default_jobs());
    const DpSolution solution = solve_dp(config.tariff, config.fleets, spec,
                                         config.soc0, chain, options);
    parallel_for(paths.size(), jobs, [&](std::size_t p) {
      out[p] = dp_rollout(solution, chain, config.tariff, config.fleets,
                          spec, config.soc0, paths[p]);
    });
    return out;
  }

  if (policy == "mpc") {
    const std::unique_ptr<Forecaster> forecaster =
        make_forecaster(config.renewable, horizon);
    parallel_for(paths.size(), jobs, [&](std::size_t p) {
      out[p] = run_mpc(config.tariff, config.fleets, spec, config.soc0,
                       *forecaster, paths[p], config.mpc_window);
    });
    return out;
  }

  if (policy == "mco") {
    parallel_for(paths.size(), jobs, [&](std::size_t p) {
      out[p] = run_mco(config.tariff, config.fleets, spec, config.soc0,
                       paths[p], config.mco);
    });
    return out;
  }

  const CustomerType type = customer_type_from_string(policy);
  if (type == CustomerType::solar_exporter && config.peak_window.empty()) {
    throw ConfigError("policy solar_exporter needs config.peak_window");
  }
  parallel_for(paths.size(), jobs, [&](std::size_t p) {
    out[p] = run_customer_type(type, config.tariff, config.fleets, spec,
                               config.soc0, paths[p], config.peak_window);
  });
  return out;
}

int run_thresholds(const CommonArgs& args) {
  const ScenarioConfig config = load_scenario(args);
  const std::size_t horizon = config.horizon;
  if (args.interval_index >= 0 &&
      static_cast<std::size_t>(args.interval_index) >= horizon) {
    throw ConfigError("--t index is outside the horizon");
  }

  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"t", "kind", "import_edge", "full_discharge_edge",
           "discharge_idle_edge", "idle_charge_edge", "full_charge_edge",
           "export_edge", "note"});
  const ClippedLimits raw{config.battery.charge_limit,
                          config.battery.discharge_limit};
  const ClippedLimits clipped = clip_limits(config.battery, config.soc0);
  for (std::size_t t = 0; t < horizon; ++t) {
    if (args.interval_index >= 0 &&
        t != static_cast<std::size_t>(args.interval_index)) {
      continue;
    }
    const TariffInterval& iv = config.tariff.at(t);
    const DeviceFleet& fleet = config.fleets.at(t);
    for (const auto& [kind, limits] :
         {std::pair<const char*, const ClippedLimits&>{"raw", raw},
          {"clipped", clipped}}) {
      try {
        const ThresholdSet set = thresholds(fleet, iv, config.battery,
                                            limits);
        csv.row({std::to_string(t), kind, format_double(set.import_edge),
                 format_double(set.full_discharge_edge),
                 format_double(set.discharge_idle_edge),
                 format_double(set.idle_charge_edge),
                 format_double(set.full_charge_edge),
                 format_double(set.export_edge), ""});
      } catch (const std::domain_error& error) {
        csv.row({std::to_string(t), kind, "", "", "", "", "", "",
                 error.what()});
      }
    }
  }

  const std::string table = buffer.str();
  std::cout << table;
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  write_file(dir / "thresholds.csv", table);

  json summary = base_summary("thresholds", config);
  summary["outputs"] = {"thresholds.csv"};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_simulate(const CommonArgs& args) {
  const ScenarioConfig config = load_scenario(args);
  const std::vector<std::string> known = {
      "mco",          "mpc",          "dp",           "consumer",
      "solar_exporter", "self_powered", "packaged_sdg", "passive_sdg"};
  if (std::find(known.begin(), known.end(), args.policy) == known.end()) {
    throw ConfigError("unknown policy \"" + args.policy + "\"");
  }

  const std::vector<std::vector<double>> paths = sample_paths(
      config.renewable, config.horizon, config.n_paths, config.seed,
      args.jobs);
  const std::vector<Trajectory> trajectories = run_policy_on_paths(
      args.policy, config, config.battery, paths, args.jobs);

  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"path", "policy", "cumulative_reward"});
  double mean = 0.0;
  for (std::size_t p = 0; p < trajectories.size(); ++p) {
    csv.row({std::to_string(p), args.policy,
             format_double(trajectories[p].cumulative_reward)});
    mean += trajectories[p].cumulative_reward;
  }
  mean /= static_cast<double>(trajectories.size());
  double var = 0.0;
  for (const auto& trajectory : trajectories) {
    var += (trajectory.cumulative_reward - mean) *
           (trajectory.cumulative_reward - mean);
  }
  const double stddev =
      std::sqrt(var / static_cast<double>(trajectories.size()));
  csv.row({"mean", args.policy, format_double(mean)});
  csv.row({"std", args.policy, format_double(stddev)});

  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  write_file(dir / "rewards.csv", buffer.str());

  json summary = base_summary("simulate", config);
  summary["policy"] = args.policy;
  summary["mean_reward"] = mean;
  summary["std_reward"] = stddev;
  summary["outputs"] = {"rewards.csv"};
  if (args.emit_trajectories) {
    for (std::size_t p = 0; p < trajectories.size(); ++p) {
      const std::string name =
          "trajectory_" + args.policy + "_" + std::to_string(p) + ".csv";
      write_file(dir / name, trajectory_to_csv(trajectories[p]));
      summary["outputs"].push_back(name);
    }
  }
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << "simulate " << args.policy << ": mean reward "
            << format_double(mean) << " over " << trajectories.size()
            << " paths\n";
  return 0;
}

int run_gap(const CommonArgs& args) {
  const ScenarioConfig config = load_scenario(args);
  if (config.algorithms.size() < 2) {
    throw ConfigError("gap needs at least two entries in config.algorithms");
  }
  const std::vector<std::vector<double>> paths = sample_paths(
      config.renewable, config.horizon, config.n_paths, config.seed,
      args.jobs);

  std::vector<double> levels = config.gap_limit_sweep;
  const bool sweeping = !levels.empty();
  if (!sweeping) levels = {config.battery.charge_limit};

  std::vector<GapReport> reports;
  for (double level : levels) {
    BatterySpec spec = config.battery;
    spec.charge_limit = level;
    spec.discharge_limit = level;

    std::vector<double> bounds(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
      try {
        bounds[p] = perfect_foresight_bound(config.tariff, config.fleets,
                                            spec, config.soc0, paths[p])
                        .value;
      } catch (const NumericError& error) {
        throw NumericError("path " + std::to_string(p) + ": " +
                           error.what());
      }
    }

    for (const std::string& name : config.algorithms) {
      const std::vector<Trajectory> trajectories =
          run_policy_on_paths(name, config, spec, paths, args.jobs);
      std::vector<double> rewards(trajectories.size());
      for (std::size_t p = 0; p < trajectories.size(); ++p) {
        rewards[p] = trajectories[p].cumulative_reward;
      }
      const std::string tag =
          sweeping ? name + "@" + format_double(level) : name;
      reports.push_back(make_gap_report(tag, rewards, bounds));
    }
  }

  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  write_file(dir / "gap_report.csv", gap_reports_to_csv(reports));

  json summary = base_summary("gap", config);
  summary["outputs"] = {"gap_report.csv"};
  json means = json::object();
  for (const auto& report : reports) {
    means[report.algorithm] = report.mean;
    std::cout << "gap " << report.algorithm << ": mean "
              << format_double(report.mean) << "% over "
              << report.per_path.size() << " paths\n";
  }
  summary["mean_gap_percent"] = means;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

int run_compare(const CommonArgs& args) {
  const ScenarioConfig config = load_scenario(args);
  if (config.peak_window.empty()) {
    throw ConfigError("compare needs config.peak_window for solar_exporter");
  }
  const std::vector<std::vector<double>> paths = sample_paths(
      config.renewable, config.horizon, config.n_paths, config.seed,
      args.jobs);

  const std::vector<CustomerType> types = {
      CustomerType::consumer,     CustomerType::solar_exporter,
      CustomerType::self_powered, CustomerType::packaged_sdg,
      CustomerType::passive_sdg,  CustomerType::active_sdg};

  std::map<CustomerType, std::vector<Trajectory>> trajectories_by_type;
  std::map<CustomerType, std::vector<double>> rewards_by_type;
  for (CustomerType type : types) {
    std::vector<Trajectory> trajectories(paths.size());
    parallel_for(paths.size(), args.jobs, [&](std::size_t p) {
      trajectories[p] =
          run_customer_type(type, config.tariff, config.fleets,
                            config.battery, config.soc0, paths[p],
                            config.peak_window);
    });
    std::vector<double>& rewards = rewards_by_type[type];
    rewards.resize(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) {
      rewards[p] = trajectories[p].cumulative_reward;
    }
    trajectories_by_type[type] = std::move(trajectories);
  }

  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);

  const std::vector<SurplusGainRow> gains =
      surplus_gain_table(rewards_by_type);
  write_file(dir / "surplus_gains.csv", surplus_gains_to_csv(gains));

  std::ostringstream histogram_buffer;
  CsvWriter histogram_csv(histogram_buffer);
  histogram_csv.row({"customer_type", "kind", "bin_lo", "bin_hi", "count"});
  for (CustomerType type : types) {
    const Histogram histogram = net_consumption_histogram(
        trajectories_by_type[type], config.bin_width);
    histogram_csv.row({to_string(type), "net_zero",
                       format_double(-histogram.net_zero_tol),
                       format_double(histogram.net_zero_tol),
                       std::to_string(histogram.net_zero_count)});
    for (const auto& [index, count] : histogram.bins) {
      const double lo = static_cast<double>(index) * histogram.bin_width;
      histogram_csv.row({to_string(type), "bin", format_double(lo),
                         format_double(lo + histogram.bin_width),
                         std::to_string(count)});
    }
  }
  write_file(dir / "z_histogram.csv", histogram_buffer.str());

  std::ostringstream rpf_buffer;
  CsvWriter rpf_csv(rpf_buffer);
  rpf_csv.row({"customer_type", "path", "t", "export_kwh"});
  for (CustomerType type : types) {
    const RpfSummary summary = rpf_records(trajectories_by_type[type]);
    for (const auto& record : summary.records) {
      if (record.export_level == 0.0) continue;
      rpf_csv.row({to_string(type), std::to_string(record.path),
                   std::to_string(record.t),
                   format_double(record.export_level)});
    }
    for (std::size_t t = 0; t < summary.mean_by_interval.size(); ++t) {
      rpf_csv.row({to_string(type), "mean", std::to_string(t),
                   format_double(summary.mean_by_interval[t])});
    }
  }
  write_file(dir / "rpf.csv", rpf_buffer.str());

  std::ostringstream cost_buffer;
  CsvWriter cost_csv(cost_buffer);
  cost_csv.row(
      {"customer_type", "t", "bill_savings", "avoided_value", "net_cost"});
  const std::vector<Trajectory>& baseline =
      trajectories_by_type[CustomerType::consumer];
  for (CustomerType type : types) {
    if (type == CustomerType::consumer) continue;
    const std::vector<Trajectory>& with_der = trajectories_by_type[type];
    std::vector<double> savings(config.horizon, 0.0);
    std::vector<double> avoided(config.horizon, 0.0);
    std::vector<double> cost(config.horizon, 0.0);
    for (std::size_t p = 0; p < with_der.size(); ++p) {
      const NetCostSeries series =
          utility_net_cost(with_der[p], baseline[p], config.tariff);
      for (std::size_t t = 0; t < config.horizon; ++t) {
        savings[t] += series.bill_savings[t];
        avoided[t] += series.avoided_value[t];
        cost[t] += series.net_cost[t];
      }
    }
    const double n = static_cast<double>(with_der.size());
    for (std::size_t t = 0; t < config.horizon; ++t) {
      cost_csv.row({to_string(type), std::to_string(t),
                    format_double(savings[t] / n),
                    format_double(avoided[t] / n),
                    format_double(cost[t] / n)});
    }
  }
  write_file(dir / "net_cost.csv", cost_buffer.str());

  json summary = base_summary("compare", config);
  summary["outputs"] = {"surplus_gains.csv", "z_histogram.csv", "rpf.csv",
                        "net_cost.csv"};
  json gains_json = json::object();
  for (const auto& row : gains) {
    gains_json[to_string(row.type)] = row.mean_gain_percent;
    std::cout << "compare " << to_string(row.type) << ": gain "
              << format_double(row.mean_gain_percent) << "%\n";
  }
  summary["mean_gain_percent"] = gains_json;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Co-optimization of flexible demand and battery storage behind a "
      "net-metered revenue meter"};
  app.require_subcommand(1);

  CommonArgs thresholds_args;
  CLI::App* thresholds_cmd = app.add_subcommand(
      "thresholds", "Print the policy threshold table per interval");
  add_common_options(thresholds_cmd, &thresholds_args);
  thresholds_cmd->add_option("--t", thresholds_args.interval_index,
                             "Single interval index to print");

  CommonArgs simulate_args;
  CLI::App* simulate_cmd = app.add_subcommand(
      "simulate", "Run one policy over sampled renewable paths");
  add_common_options(simulate_cmd, &simulate_args);
  simulate_cmd
      ->add_option("--policy", simulate_args.policy,
                   "mco|mpc|dp|consumer|solar_exporter|self_powered|"
                   "packaged_sdg|passive_sdg")
      ->required();
  simulate_args.window_opt = simulate_cmd->add_option(
      "--window", simulate_args.window, "Lookahead window for mpc");
  simulate_cmd->add_flag("--emit-trajectories",
                         simulate_args.emit_trajectories,
                         "Write one trajectory CSV per path");

  CommonArgs gap_args;
  CLI::App* gap_cmd = app.add_subcommand(
      "gap", "Gap of each selected algorithm to the hindsight bound");
  add_common_options(gap_cmd, &gap_args);
  gap_args.window_opt =
      gap_cmd->add_option("--window", gap_args.window,
                          "Lookahead window for the mpc algorithm");

  CommonArgs compare_args;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare", "Run every customer type on shared paths and emit metrics");
  add_common_options(compare_cmd, &compare_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 2;
  }

  try {
    if (thresholds_cmd->parsed()) return run_thresholds(thresholds_args);
    if (simulate_cmd->parsed()) return run_simulate(simulate_args);
    if (gap_cmd->parsed()) return run_gap(gap_args);
    if (compare_cmd->parsed()) return run_compare(compare_args);
  } catch (const ConfigError& error) {
    std::cerr << "config error: " << error.what() << "\n";
    return 2;
  } catch (const ResourceError& error) {
    std::cerr << "resource guard: " << error.what() << "\n";
    return 3;
  } catch (const NumericError& error) {
    std::cerr << "numeric failure: " << error.what() << "\n";
    return 4;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
