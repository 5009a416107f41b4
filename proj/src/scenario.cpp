// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dercoopt/csvio.hpp"
#include "dercoopt/parallel.hpp"
#include "dercoopt/rng.hpp"

namespace dercoopt {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

// Draws an index from a discrete distribution by inverting the CDF at u.
std::size_t sample_index(const std::vector<double>& probabilities, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  return probabilities.size() - 1;
}

std::size_t common_horizon(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) return 0;
  const std::size_t horizon = trajectories.front().records.size();
  for (const auto& trajectory : trajectories) {
    if (trajectory.records.size() != horizon) {
      throw std::domain_error("trajectories have mismatched horizons");
    }
  }
  return horizon;
}

}  // namespace

std::string to_string(RenewableKind kind) {
  switch (kind) {
    case RenewableKind::profile:
      return "profile";
    case RenewableKind::markov:
      return "markov";
  }
  return "unknown";
}

RenewableKind renewable_kind_from_string(const std::string& name) {
  if (name == "profile") return RenewableKind::profile;
  if (name == "markov") return RenewableKind::markov;
  throw std::domain_error("unknown renewable model kind: " + name);
}

void RenewableModel::validate(std::size_t horizon) const {
  if (horizon == 0) {
    throw std::invalid_argument("horizon must be at least 1");
  }
  if (kind == RenewableKind::markov) {
    chain.validate(horizon);
    return;
  }
  if (mu.size() != horizon || sigma.size() != horizon) {
    throw std::invalid_argument(
        "profile model needs one mean and one std per interval");
  }
  for (double m : mu) {
    if (!std::isfinite(m)) {
      throw std::invalid_argument("profile means must be finite");
    }
  }
  for (double s : sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::domain_error("profile stds must be nonnegative");
    }
  }
  if (!std::isfinite(mean_scale) || !std::isfinite(std_scale) ||
      std_scale < 0.0) {
    throw std::domain_error("scale factors must be finite, std_scale >= 0");
  }
}

RenewableModel default_daily_profile(std::size_t horizon, double peak,
                                     double sigma_fraction) {
  if (horizon == 0) {
    throw std::invalid_argument("horizon must be at least 1");
  }
  if (!(peak >= 0.0) || !(sigma_fraction >= 0.0)) {
    throw std::invalid_argument(
        "peak and sigma_fraction must be nonnegative");
  }
  RenewableModel model;
  model.kind = RenewableKind::profile;
  model.mu.resize(horizon);
  model.sigma.resize(horizon);
  // Daylight covers the middle half of the horizon; output follows a raised
  // half-cosine over that span and is zero outside it.
  const double start = static_cast<double>(horizon) * 0.25;
  const double stop = static_cast<double>(horizon) * 0.75;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double mid = static_cast<double>(t) + 0.5;
    double mean = 0.0;
    if (mid > start && mid < stop && stop > start) {
      const double phase = (mid - start) / (stop - start);
      mean = peak * 0.5 * (1.0 - std::cos(2.0 * kPi * phase));
    }
    model.mu[t] = mean;
    model.sigma[t] = sigma_fraction * mean;
  }
  return model;
}

double truncated_normal_mean(double mu, double sigma) {
  if (sigma < 0.0) {
    throw std::domain_error("sigma must be nonnegative");
  }
  if (sigma == 0.0) return std::max(mu, 0.0);
  const double r = mu / sigma;
  return mu * normal_cdf(r) + sigma * normal_pdf(r);
}

std::vector<std::vector<double>> sample_paths(const RenewableModel& model,
                                              std::size_t horizon,
                                              std::size_t n_paths,
                                              std::uint64_t seed, int jobs) {
  if (n_paths == 0) {
    throw std::invalid_argument("n_paths must be at least 1");
  }
  model.validate(horizon);

  std::vector<std::vector<double>> paths(n_paths);
  parallel_for(n_paths, jobs, [&](std::size_t p) {
    Rng rng(seed, p);
    std::vector<double> g(horizon, 0.0);
    if (model.kind == RenewableKind::profile) {
      for (std::size_t t = 0; t < horizon; ++t) {
        const double mean = model.mu[t] * model.mean_scale;
        const double sd = model.sigma[t] * model.std_scale;
        const double draw = sd == 0.0 ? mean : mean + sd * rng.normal();
        g[t] = std::max(draw, 0.0);
      }
    } else {
      std::size_t level = sample_index(model.chain.initial, rng.uniform());
      g[0] = model.chain.support[level];
      for (std::size_t t = 1; t < horizon; ++t) {
        level = sample_index(model.chain.matrix_at(t - 1)[level],
                             rng.uniform());
        g[t] = model.chain.support[level];
      }
    }
    paths[p] = std::move(g);
  });
  return paths;
}

MarkovRenewable to_markov_chain(const RenewableModel& model,
                                std::size_t horizon, std::size_t n_levels) {
  model.validate(horizon);
  if (model.kind == RenewableKind::markov) return model.chain;
  if (n_levels == 0) {
    throw std::invalid_argument("n_levels must be at least 1");
  }

  double hi = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    hi = std::max(hi, model.mu[t] * model.mean_scale +
                          3.0 * model.sigma[t] * model.std_scale);
  }

  MarkovRenewable chain;
  if (hi <= 0.0 || n_levels == 1) {
    chain.support = {std::max(hi, 0.0) * 0.5};
    if (chain.support[0] < 0.0) chain.support[0] = 0.0;
    chain.initial = {1.0};
    if (horizon > 1) {
      chain.transitions.assign(1, {{1.0}});
    }
    return chain;
  }

  chain.support.resize(n_levels);
  const double step = hi / static_cast<double>(n_levels - 1);
  for (std::size_t j = 0; j < n_levels; ++j) {
    chain.support[j] = static_cast<double>(j) * step;
  }

  // Per-interval cell masses of the truncated normal. Cell edges sit halfway
  // between levels; the lowest cell absorbs all mass at or below zero, which
  // is exactly where truncation sends it.
  const auto marginal = [&](std::size_t t) {
    std::vector<double> p(n_levels, 0.0);
    const double mean = model.mu[t] * model.mean_scale;
    const double sd = model.sigma[t] * model.std_scale;
    if (sd == 0.0) {
      p[chain.nearest_level(std::max(mean, 0.0))] = 1.0;
      return p;
    }
    double lower_cdf = 0.0;
    for (std::size_t j = 0; j + 1 < n_levels; ++j) {
      const double edge = 0.5 * (chain.support[j] + chain.support[j + 1]);
      const double upper_cdf = normal_cdf((edge - mean) / sd);
      p[j] = std::max(upper_cdf - lower_cdf, 0.0);
      lower_cdf = upper_cdf;
    }
    p[n_levels - 1] = std::max(1.0 - lower_cdf, 0.0);
    double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
    return p;
  };

  chain.initial = marginal(0);
  for (std::size_t t = 0; t + 1 < horizon; ++t) {
    const std::vector<double> next = marginal(t + 1);
    chain.transitions.emplace_back(n_levels, next);
  }
  return chain;
}

ProfileForecaster::ProfileForecaster(const RenewableModel& model,
                                     std::size_t horizon) {
  model.validate(horizon);
  if (model.kind != RenewableKind::profile) {
    throw std::invalid_argument(
        "profile forecaster needs a profile-kind model");
  }
  means_.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    means_[t] = truncated_normal_mean(model.mu[t] * model.mean_scale,
                                      model.sigma[t] * model.std_scale);
  }
}

std::vector<double> ProfileForecaster::forecast(std::size_t t,
                                                double /*g_now*/,
                                                std::size_t steps) const {
  std::vector<double> out(steps, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    out[k] = means_.at(t + 1 + k);
  }
  return out;
}

double gap_percent(double policy_reward, double bound) {
  if (bound == 0.0) {
    throw std::domain_error("gap is undefined for a zero bound");
  }
  return 100.0 * (policy_reward - bound) / bound;
}

GapReport make_gap_report(std::string algorithm,
                          const std::vector<double>& rewards,
                          const std::vector<double>& bounds) {
  if (rewards.size() != bounds.size()) {
    throw std::invalid_argument(
        "reward and bound lists must have equal length");
  }
  if (rewards.empty()) {
    throw std::invalid_argument("gap report needs at least one path");
  }
  GapReport report;
  report.algorithm = std::move(algorithm);
  report.per_path.reserve(rewards.size());
  for (std::size_t p = 0; p < rewards.size(); ++p) {
    report.per_path.push_back(gap_percent(rewards[p], bounds[p]));
  }
  const double n = static_cast<double>(report.per_path.size());
  report.mean = std::accumulate(report.per_path.begin(),
                                report.per_path.end(), 0.0) /
                n;
  double var = 0.0;
  for (double gp : report.per_path) {
    var += (gp - report.mean) * (gp - report.mean);
  }
  report.stddev = std::sqrt(var / n);
  return report;
}

std::vector<SurplusGainRow> surplus_gain_table(
    const std::map<CustomerType, std::vector<double>>& rewards_by_type) {
  const auto reference = rewards_by_type.find(CustomerType::consumer);
  if (reference == rewards_by_type.end()) {
    throw std::invalid_argument("gain table needs the consumer reference");
  }
  const std::vector<double>& consumer = reference->second;
  if (consumer.empty()) {
    throw std::invalid_argument("gain table needs at least one path");
  }
  for (double r : consumer) {
    if (r == 0.0) {
      throw std::domain_error(
          "consumer reward is zero; gains are undefined");
    }
  }
  std::vector<SurplusGainRow> rows;
  rows.reserve(rewards_by_type.size());
  for (const auto& [type, rewards] : rewards_by_type) {
    if (rewards.size() != consumer.size()) {
      throw std::invalid_argument(
          "all customer types must cover the same paths");
    }
    double mean = 0.0;
    for (std::size_t p = 0; p < rewards.size(); ++p) {
      mean += 100.0 * (rewards[p] - consumer[p]) / std::abs(consumer[p]);
    }
    mean /= static_cast<double>(rewards.size());
    rows.push_back(SurplusGainRow{type, mean});
  }
  return rows;
}

Histogram net_consumption_histogram(
    const std::vector<Trajectory>& trajectories, double bin_width,
    double net_zero_tol) {
  if (!(bin_width > 0.0)) {
    throw std::invalid_argument("bin_width must be positive");
  }
  if (!(net_zero_tol >= 0.0)) {
    throw std::invalid_argument("net_zero_tol must be nonnegative");
  }
  Histogram histogram;
  histogram.bin_width = bin_width;
  histogram.net_zero_tol = net_zero_tol;
  for (const auto& trajectory : trajectories) {
    for (const auto& record : trajectory.records) {
      ++histogram.total;
      if (std::abs(record.z) <= net_zero_tol) {
        ++histogram.net_zero_count;
        continue;
      }
      const long long index =
          static_cast<long long>(std::floor(record.z / bin_width));
      ++histogram.bins[index];
    }
  }
  return histogram;
}

RpfSummary rpf_records(const std::vector<Trajectory>& trajectories) {
  RpfSummary summary;
  const std::size_t horizon = common_horizon(trajectories);
  if (horizon == 0) return summary;
  summary.records.reserve(trajectories.size() * horizon);
  summary.mean_by_interval.assign(horizon, 0.0);
  for (std::size_t p = 0; p < trajectories.size(); ++p) {
    for (std::size_t t = 0; t < horizon; ++t) {
      const double exported =
          std::max(-trajectories[p].records[t].z, 0.0);
      summary.records.push_back(RpfRecord{p, t, exported});
      summary.mean_by_interval[t] += exported;
    }
  }
  for (double& mean : summary.mean_by_interval) {
    mean /= static_cast<double>(trajectories.size());
  }
  return summary;
}

NetCostSeries utility_net_cost(const Trajectory& with_der,
                               const Trajectory& baseline,
                               const TariffSchedule& tariff) {
  const std::size_t horizon = tariff.horizon();
  if (with_der.records.size() != horizon ||
      baseline.records.size() != horizon) {
    throw std::domain_error(
        "trajectories and tariff schedule have mismatched horizons");
  }
  NetCostSeries series;
  series.bill_savings.resize(horizon);
  series.avoided_value.resize(horizon);
  series.net_cost.resize(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    const TariffInterval& iv = tariff.at(t);
    const double savings = payment(iv, baseline.records[t].z) -
                           payment(iv, with_der.records[t].z);
    const double avoided = iv.avoided_cost_rate * with_der.records[t].g;
    series.bill_savings[t] = savings;
    series.avoided_value[t] = avoided;
    series.net_cost[t] = savings - avoided;
  }
  return series;
}

std::string gap_reports_to_csv(const std::vector<GapReport>& reports) {
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"algorithm", "path", "gap_percent"});
  for (const auto& report : reports) {
    for (std::size_t p = 0; p < report.per_path.size(); ++p) {
      csv.row({report.algorithm, std::to_string(p),
               format_double(report.per_path[p])});
    }
    csv.row({report.algorithm, "mean", format_double(report.mean)});
    csv.row({report.algorithm, "std", format_double(report.stddev)});
  }
  return buffer.str();
}

std::string surplus_gains_to_csv(const std::vector<SurplusGainRow>& rows) {
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"customer_type", "gain_percent"});
  for (const auto& row : rows) {
    csv.row({to_string(row.type), format_double(row.mean_gain_percent)});
  }
  return buffer.str();
}

std::string histogram_to_csv(const Histogram& histogram) {
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"kind", "bin_lo", "bin_hi", "count"});
  csv.row({"net_zero", format_double(-histogram.net_zero_tol),
           format_double(histogram.net_zero_tol),
           std::to_string(histogram.net_zero_count)});
  for (const auto& [index, count] : histogram.bins) {
    const double lo = static_cast<double>(index) * histogram.bin_width;
    csv.row({"bin", format_double(lo),
             format_double(lo + histogram.bin_width),
             std::to_string(count)});
  }
  return buffer.str();
}

std::string rpf_to_csv(const RpfSummary& summary) {
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"path", "t", "export_kwh"});
  for (const auto& record : summary.records) {
    csv.row({std::to_string(record.path), std::to_string(record.t),
             format_double(record.export_level)});
  }
  for (std::size_t t = 0; t < summary.mean_by_interval.size(); ++t) {
    csv.row({"mean", std::to_string(t),
             format_double(summary.mean_by_interval[t])});
  }
  return buffer.str();
}

std::string net_cost_to_csv(const NetCostSeries& series) {
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"t", "bill_savings", "avoided_value", "net_cost"});
  for (std::size_t t = 0; t < series.net_cost.size(); ++t) {
    csv.row({std::to_string(t), format_double(series.bill_savings[t]),
             format_double(series.avoided_value[t]),
             format_double(series.net_cost[t])});
  }
  return buffer.str();
}

}  // namespace dercoopt
