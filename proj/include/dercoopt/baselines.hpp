// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "dercoopt/mco.hpp"
#include "dercoopt/storage.hpp"
#include "dercoopt/tariff.hpp"

namespace dercoopt {

// Finite-support Markov model of the renewable output. transitions holds
// either a single row-stochastic matrix (stationary chain) or one matrix
// per step, where matrix k maps the level at interval k to interval k+1.
struct MarkovRenewable {
  std::vector<double> support;
  std::vector<std::vector<std::vector<double>>> transitions;
  std::vector<double> initial;

  void validate(std::size_t horizon) const;
  bool stationary() const { return transitions.size() == 1; }
  const std::vector<std::vector<double>>& matrix_at(std::size_t step) const;
  std::size_t nearest_level(double g) const;

  // Expected output for intervals from_step+1 .. from_step+steps given the
  // chain sits at `level` during interval from_step.
  std::vector<double> conditional_means(std::size_t from_step,
                                        std::size_t level,
                                        std::size_t steps) const;
};

// Degenerate chain that replays one path exactly (every transition is a
// point mass). Useful for deterministic cross-checks.
MarkovRenewable point_mass_chain(const std::vector<double>& path);

struct DpOptions {
  double soc_step = 1e-2;
  // Width at which the golden-section refinement over the storage draw
  // stops.
  double action_tol = 1e-7;
  // Replace the golden-section search with a raw grid of draws spaced
  // action_step apart. Slow; kept as a verification mode.
  bool grid_action_search = false;
  double action_step = 1e-3;
  // Refuse instances whose (horizon+1) * soc-grid * support size exceeds
  // this, to keep desk-scale runs bounded.
  std::size_t max_states = 20000000;
  std::size_t jobs = 1;
};

// Value tables from backward induction: values[t][si][gi] is the optimal
// expected reward-to-go from interval t with state of charge soc_points[si]
// and current renewable level support[gi]. Terminal values use the salvage
// reference soc0_ref, so values[horizon][si][*] = salvage_rate *
// (soc_points[si] - soc0_ref).
struct DpSolution {
  std::vector<double> soc_points;
  std::vector<double> support;
  std::vector<double> initial;
  std::vector<std::vector<std::vector<double>>> values;
  double soc_step = 0.0;
  double action_resolution = 0.0;
  double soc0_ref = 0.0;

  // Linear interpolation across the state-of-charge grid.
  double value_at(std::size_t t, double soc, std::size_t g_index) const;

  // Initial value averaged over the chain's initial distribution.
  double expected_initial_value(double soc0) const;
};

// Exact discretized stochastic dynamic program over the joint
// (state of charge, renewable level) space. The inner consumption choice is
// closed-form for any fixed draw, so only the draw is searched.
DpSolution solve_dp(const TariffSchedule& tariff, const FleetSchedule& fleets,
                    const BatterySpec& spec, double soc0,
                    const MarkovRenewable& renewable,
                    const DpOptions& options = {});

// One row per (t, soc, g, value).
std::string dp_solution_to_csv(const DpSolution& solution);

struct BoundOptions {
  std::size_t max_iterations = 60000;
  // Relative epoch-improvement threshold below which the ascent is
  // considered converged.
  double tolerance = 1e-11;
};

struct BoundResult {
  double value = 0.0;
  std::vector<double> charge;
  std::vector<double> discharge;
  bool separable = false;
  bool converged = false;
  std::size_t iterations = 0;
};

// Reward of the one-shot deterministic optimum for a known renewable path,
// allowing simultaneous charging and discharging (a convex relaxation), so
// the result upper-bounds every causal policy's reward on that path. When
// per-interval greedy decisions already keep the state of charge feasible
// the bound is exact and closed-form; otherwise a projected-gradient ascent
// with exact coordinate refinements solves the coupled problem. Throws
// NumericError when the ascent fails to settle.
BoundResult perfect_foresight_bound(const TariffSchedule& tariff,
                                    const FleetSchedule& fleets,
                                    const BatterySpec& spec, double soc0,
                                    const std::vector<double>& g_path,
                                    const BoundOptions& options = {});

// Supplies conditional-mean renewable forecasts to the receding-horizon
// controller.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  // Expected output for intervals t+1 .. t+steps given the realized output
  // g_now at interval t.
  virtual std::vector<double> forecast(std::size_t t, double g_now,
                                       std::size_t steps) const = 0;
};

// Quantizes the realized output to the nearest chain level and propagates
// the conditional distribution forward.
class MarkovForecaster : public Forecaster {
 public:
  explicit MarkovForecaster(MarkovRenewable chain);

  std::vector<double> forecast(std::size_t t, double g_now,
                               std::size_t steps) const override;

 private:
  MarkovRenewable chain_;
};

struct MpcOptions {
  // When true the lookahead window covers the realized current interval
  // plus window-1 forecast intervals; when false it covers the current
  // interval plus window forecast intervals.
  bool window_includes_current = true;
  BoundOptions solver;
};

// Receding-horizon control: at each interval, solve the deterministic
// window problem (realized output now, conditional means after) with the
// perfect-foresight machinery and a salvage-valued window edge, implement
// the first interval's draw netted and clipped to the physical limits, and
// roll forward.
Trajectory run_mpc(const TariffSchedule& tariff, const FleetSchedule& fleets,
                   const BatterySpec& spec, double soc0,
                   const Forecaster& forecaster,
                   const std::vector<double>& g_path, std::size_t window,
                   const MpcOptions& options = {});

Trajectory run_mpc(const TariffSchedule& tariff, const FleetSchedule& fleets,
                   const BatterySpec& spec, double soc0,
                   const MarkovRenewable& renewable,
                   const std::vector<double>& g_path, std::size_t window,
                   const MpcOptions& options = {});

enum class CustomerType {
  consumer,
  solar_exporter,
  self_powered,
  packaged_sdg,
  active_sdg,
  passive_sdg,
};

std::string to_string(CustomerType type);
CustomerType customer_type_from_string(const std::string& name);

using IntervalSet = std::set<std::size_t>;

// Simulates one heuristic prosumer archetype over a renewable path under
// the same billing as run_mco. The consumer archetype has neither
// generation nor storage, so its records carry g = 0 and its bill covers
// its full consumption. peak_window is only read by solar_exporter.
Trajectory run_customer_type(CustomerType type, const TariffSchedule& tariff,
                             const FleetSchedule& fleets,
                             const BatterySpec& spec, double soc0,
                             const std::vector<double>& g_path,
                             const IntervalSet& peak_window = {});

}  // namespace dercoopt
