// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dercoopt/baselines.hpp"
#include "dercoopt/mco.hpp"
#include "dercoopt/tariff.hpp"

namespace dercoopt {

enum class RenewableKind { profile, markov };

std::string to_string(RenewableKind kind);
RenewableKind renewable_kind_from_string(const std::string& name);

// Renewable generation model. The profile kind draws each interval
// independently as max(0, Normal(mu_t * mean_scale, (sigma_t * std_scale)^2));
// the markov kind walks a level chain.
struct RenewableModel {
  RenewableKind kind = RenewableKind::profile;
  std::vector<double> mu;
  std::vector<double> sigma;
  double mean_scale = 1.0;
  double std_scale = 1.0;
  MarkovRenewable chain;

  void validate(std::size_t horizon) const;
};

// Bell-shaped daily mean profile: zero overnight, peak at midday, with each
// interval's standard deviation set to sigma_fraction times its mean.
RenewableModel default_daily_profile(std::size_t horizon, double peak,
                                     double sigma_fraction);

// Mean of max(0, Normal(mu, sigma^2)).
double truncated_normal_mean(double mu, double sigma);

// Draws n_paths independent generation paths. Each path owns an RNG stream
// derived from (seed, path index), so results do not depend on the worker
// count.
std::vector<std::vector<double>> sample_paths(const RenewableModel& model,
                                              std::size_t horizon,
                                              std::size_t n_paths,
                                              std::uint64_t seed,
                                              int jobs = 1);

// Level-chain view of a model so the dynamic program can consume it. The
// markov kind passes through; the profile kind is quantized onto n_levels
// evenly spaced levels with per-interval cell masses from the normal CDF
// (independence shows up as identical rows).
MarkovRenewable to_markov_chain(const RenewableModel& model,
                                std::size_t horizon, std::size_t n_levels);

// Forecaster for the profile kind: the conditional mean of an independent
// truncated normal ignores the current reading.
class ProfileForecaster : public Forecaster {
 public:
  ProfileForecaster(const RenewableModel& model, std::size_t horizon);
  std::vector<double> forecast(std::size_t t, double g_now,
                               std::size_t steps) const override;

 private:
  std::vector<double> means_;
};

// Percent shortfall of a policy reward against its upper bound,
// 100 * (reward - bound) / bound. Zero bound leaves the ratio undefined.
double gap_percent(double policy_reward, double bound);

struct GapReport {
  std::string algorithm;
  std::vector<double> per_path;
  double mean = 0.0;
  double stddev = 0.0;
};

// Per-path gaps plus mean and population standard deviation.
GapReport make_gap_report(std::string algorithm,
                          const std::vector<double>& rewards,
                          const std::vector<double>& bounds);

struct SurplusGainRow {
  CustomerType type = CustomerType::consumer;
  double mean_gain_percent = 0.0;
};

// Mean percent gain of each customer type's cumulative reward over the
// consumer reference, 100 * (R_type - R_consumer) / |R_consumer| averaged
// over paths. The input maps each type to its per-path rewards and must
// include the consumer.
std::vector<SurplusGainRow> surplus_gain_table(
    const std::map<CustomerType, std::vector<double>>& rewards_by_type);

struct Histogram {
  double bin_width = 0.0;
  double net_zero_tol = 0.0;
  std::size_t net_zero_count = 0;
  std::map<long long, std::size_t> bins;
  std::size_t total = 0;
};

// Histogram of net consumption z across all stages and paths. Values with
// |z| <= net_zero_tol count toward the separate net-zero mass; the rest land
// in the bin [index * bin_width, (index + 1) * bin_width).
Histogram net_consumption_histogram(const std::vector<Trajectory>& trajectories,
                                    double bin_width,
                                    double net_zero_tol = 1e-9);

struct RpfRecord {
  std::size_t path = 0;
  std::size_t t = 0;
  double export_level = 0.0;
};

struct RpfSummary {
  std::vector<RpfRecord> records;
  std::vector<double> mean_by_interval;
};

// Reverse power flow: the exported energy max(0, -z) for every (path,
// interval) pair, plus the mean export per interval across paths.
RpfSummary rpf_records(const std::vector<Trajectory>& trajectories);

struct NetCostSeries {
  std::vector<double> bill_savings;
  std::vector<double> avoided_value;
  std::vector<double> net_cost;
};

// Utility-side cost of the DER customer against a baseline consumer on the
// same tariff: per interval, bill savings (baseline payment minus DER
// payment) minus the avoided-cost value of the renewable output.
NetCostSeries utility_net_cost(const Trajectory& with_der,
                               const Trajectory& baseline,
                               const TariffSchedule& tariff);

// CSV emitters. Columns:
//   gap report:    algorithm,path,gap_percent  (aggregate rows use
//                  path=mean and path=std)
//   surplus gains: customer_type,gain_percent
//   histogram:     kind,bin_lo,bin_hi,count    (kind is net_zero or bin)
//   rpf:           path,t,export_kwh           (aggregate rows use path=mean)
//   net cost:      t,bill_savings,avoided_value,net_cost
std::string gap_reports_to_csv(const std::vector<GapReport>& reports);
std::string surplus_gains_to_csv(const std::vector<SurplusGainRow>& rows);
std::string histogram_to_csv(const Histogram& histogram);
std::string rpf_to_csv(const RpfSummary& summary);
std::string net_cost_to_csv(const NetCostSeries& series);

}  // namespace dercoopt
