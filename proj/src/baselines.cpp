// This file is part of dercoopt, a co-optimization library for flexible
// demand and battery storage behind a net-metered revenue meter.
// MIT license; see LICENSE.

#include "dercoopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "dercoopt/csvio.hpp"
#include "dercoopt/errors.hpp"
#include "dercoopt/parallel.hpp"
#include "dercoopt/policy.hpp"

namespace dercoopt {

namespace {

constexpr double kGoldenRatio = 0.6180339887498949;

double interp_on_grid(const std::vector<double>& points,
                      const std::vector<double>& values, double x) {
  if (x <= points.front()) return values.front();
  if (x >= points.back()) return values.back();
  const auto it = std::upper_bound(points.begin(), points.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - points.begin());
  const std::size_t lo = hi - 1;
  const double span = points[hi] - points[lo];
  if (span <= 0.0) return values[lo];
  const double w = (x - points[lo]) / span;
  return (1.0 - w) * values[lo] + w * values[hi];
}

// Maximizes a unimodal function over [lo, hi]; returns the argmax, stores
// the value. The original endpoints are always evaluated, so boundary
// maxima are exact.
template <typename F>
double golden_max(double lo, double hi, double tol, const F& fn,
                  double* best_value) {
  if (!(hi > lo)) {
    *best_value = fn(lo);
    return lo;
  }
  double a = lo;
  double b = hi;
  double x1 = b - kGoldenRatio * (b - a);
  double x2 = a + kGoldenRatio * (b - a);
  double f1 = fn(x1);
  double f2 = fn(x2);
  while (b - a > tol) {
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
  *best_value = val;
  return arg;
}

// Best one-interval value U(d) - payment achievable at net supply y
// (renewable output minus the storage draw).
double consumption_value(const DeviceFleet& fleet, const TariffInterval& iv,
                         double y) {
  const Decision c = consumption_for_net_supply(fleet, iv, y);
  return fleet.utility_value(c.d) - payment(iv, c.z);
}

// Marginal value of one extra unit of net supply: a supergradient of
// consumption_value in y.
double shadow_price(const DeviceFleet& fleet, const TariffInterval& iv,
                    double y) {
  const double retail_demand = fleet.response(iv.retail_rate);
  if (y <= retail_demand) return iv.retail_rate;
  const double export_demand = fleet.response(iv.export_rate);
  if (y >= export_demand) return iv.export_rate;
  const double lambda = fleet.water_fill(y).lambda;
  return std::clamp(lambda, iv.export_rate, iv.retail_rate);
}

double soc_delta(const BatterySpec& spec, double e) {
  return spec.charge_eff * std::max(e, 0.0) -
         std::max(-e, 0.0) / spec.discharge_eff;
}

void check_common_inputs(const TariffSchedule& tariff,
                         const FleetSchedule& fleets, const BatterySpec& spec,
                         double soc0, const std::vector<double>& g_path) {
  spec.validate();
  const std::size_t horizon = tariff.horizon();
  if (horizon == 0) throw std::invalid_argument("tariff schedule is empty");
  if (g_path.size() != horizon) {
    throw std::invalid_argument(
        "renewable path length must match the tariff horizon");
  }
  for (double g : g_path) {
    if (!(g >= 0.0)) {
      throw std::invalid_argument("renewable path must be nonnegative");
    }
  }
  if (!fleets.uniform() && fleets.size() != horizon) {
    throw std::invalid_argument(
        "fleet schedule must hold one fleet or one per interval");
  }
  if (soc0 < spec.soc_min - kSocTol || soc0 > spec.capacity + kSocTol) {
    throw std::invalid_argument("initial state of charge out of bounds");
  }
}

}  // namespace

void MarkovRenewable::validate(std::size_t horizon) const {
  if (support.empty()) {
    throw std::invalid_argument("chain support is empty");
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!std::isfinite(support[i]) || support[i] < 0.0) {
      throw std::invalid_argument("chain levels must be nonnegative");
    }
    if (i > 0 && !(support[i] > support[i - 1])) {
      throw std::invalid_argument("chain levels must be strictly ascending");
    }
  }
  if (initial.size() != support.size()) {
    throw std::invalid_argument(
        "initial distribution size must match the support");
  }
  double total = 0.0;
  for (double p : initial) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("initial distribution has a negative entry");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("initial distribution must sum to one");
  }
  const std::size_t steps = horizon == 0 ? 0 : horizon - 1;
  if (transitions.size() != 1 && transitions.size() != steps) {
    throw std::invalid_argument(
        "transition count must be one (stationary) or horizon-1");
  }
  for (const auto& matrix : transitions) {
    if (matrix.size() != support.size()) {
      throw std::invalid_argument("transition matrix has wrong row count");
    }
    for (const auto& row : matrix) {
      if (row.size() != support.size()) {
        throw std::invalid_argument(
            "transition matrix has wrong column count");
      }
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) {
          throw std::invalid_argument("transition row has a negative entry");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("transition rows must sum to one");
      }
    }
  }
}

const std::vector<std::vector<double>>& MarkovRenewable::matrix_at(
    std::size_t step) const {
  if (transitions.empty()) {
    throw std::out_of_range("chain has no transition matrices");
  }
  return transitions.size() == 1 ? transitions.front() : transitions.at(step);
}

std::size_t MarkovRenewable::nearest_level(double g) const {
  if (support.empty()) {
    throw std::invalid_argument("chain support is empty");
  }
  const auto it = std::lower_bound(support.begin(), support.end(), g);
  if (it == support.begin()) return 0;
  if (it == support.end()) return support.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - support.begin());
  const std::size_t lo = hi - 1;
  return (g - support[lo] <= support[hi] - g) ? lo : hi;
}

std::vector<double> MarkovRenewable::conditional_means(
    std::size_t from_step, std::size_t level, std::size_t steps) const {
  if (level >= support.size()) {
    throw std::out_of_range("chain level index out of range");
  }
  std::vector<double> p(support.size(), 0.0);
  p[level] = 1.0;
  std::vector<double> next(support.size(), 0.0);
  std::vector<double> means;
  means.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto& matrix = matrix_at(from_step + k);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == 0.0) continue;
      for (std::size_t j = 0; j < next.size(); ++j) {
        next[j] += p[i] * matrix[i][j];
      }
    }
    p.swap(next);
    double mean = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) mean += p[j] * support[j];
    means.push_back(mean);
  }
  return means;
}

MarkovRenewable point_mass_chain(const std::vector<double>& path) {
  if (path.empty()) {
    throw std::invalid_argument("path is empty");
  }
  MarkovRenewable chain;
  chain.support = path;
  std::sort(chain.support.begin(), chain.support.end());
  chain.support.erase(
      std::unique(chain.support.begin(), chain.support.end()),
      chain.support.end());
  const auto index_of = [&chain](double g) {
    return static_cast<std::size_t>(
        std::lower_bound(chain.support.begin(), chain.support.end(), g) -
        chain.support.begin());
  };
  chain.initial.assign(chain.support.size(), 0.0);
  chain.initial[index_of(path.front())] = 1.0;
  for (std::size_t t = 0; t + 1 < path.size(); ++t) {
    std::vector<std::vector<double>> matrix(
        chain.support.size(), std::vector<double>(chain.support.size(), 0.0));
    const std::size_t j = index_of(path[t + 1]);
    for (auto& row : matrix) row[j] = 1.0;
    chain.transitions.push_back(std::move(matrix));
  }
  return chain;
}

double DpSolution::value_at(std::size_t t, double soc,
                            std::size_t g_index) const {
  const auto& table = values.at(t);
  if (g_index >= support.size()) {
    throw std::out_of_range("chain level index out of range");
  }
  const double x = std::clamp(soc, soc_points.front(), soc_points.back());
  if (x <= soc_points.front()) return table.front()[g_index];
  if (x >= soc_points.back()) return table.back()[g_index];
  const auto it = std::upper_bound(soc_points.begin(), soc_points.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - soc_points.begin());
  const std::size_t lo = hi - 1;
  const double span = soc_points[hi] - soc_points[lo];
  if (span <= 0.0) return table[lo][g_index];
  const double w = (x - soc_points[lo]) / span;
  return (1.0 - w) * table[lo][g_index] + w * table[hi][g_index];
}

double DpSolution::expected_initial_value(double soc0) const {
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (initial[i] == 0.0) continue;
    total += initial[i] * value_at(0, soc0, i);
  }
  return total;
}

DpSolution solve_dp(const TariffSchedule& tariff, const FleetSchedule& fleets,
                    const BatterySpec& spec, double soc0,
                    const MarkovRenewable& renewable,
                    const DpOptions& options) {
  const std::size_t horizon = tariff.horizon();
  if (horizon == 0) throw std::invalid_argument("tariff schedule is empty");
  spec.validate();
  renewable.validate(horizon);
  if (!fleets.uniform() && fleets.size() != horizon) {
    throw std::invalid_argument(
        "fleet schedule must hold one fleet or one per interval");
  }
  if (soc0 < spec.soc_min - kSocTol || soc0 > spec.capacity + kSocTol) {
    throw std::invalid_argument("initial state of charge out of bounds");
  }
  if (!(options.soc_step > 0.0)) {
    throw std::invalid_argument("soc_step must be positive");
  }
  if (options.grid_action_search && !(options.action_step > 0.0)) {
    throw std::invalid_argument("action_step must be positive");
  }

  std::vector<double> soc_points;
  const double range = spec.capacity - spec.soc_min;
  const std::size_t inner =
      static_cast<std::size_t>(std::floor(range / options.soc_step));
  soc_points.reserve(inner + 2);
  for (std::size_t i = 0; i <= inner; ++i) {
    const double p = spec.soc_min + static_cast<double>(i) * options.soc_step;
    if (p < spec.capacity - 1e-12) soc_points.push_back(p);
  }
  soc_points.push_back(spec.capacity);

  const std::size_t n_soc = soc_points.size();
  const std::size_t n_g = renewable.support.size();
  const std::size_t states = (horizon + 1) * n_soc * n_g;
  if (states > options.max_states) {
    std::ostringstream msg;
    msg << "dynamic program needs " << states << " states, above the cap of "
        << options.max_states
        << "; coarsen soc_step, shorten the horizon, or shrink the chain "
           "support";
    throw ResourceError(msg.str());
  }

  DpSolution out;
  out.soc_points = soc_points;
  out.support = renewable.support;
  out.initial = renewable.initial;
  out.soc_step = options.soc_step;
  out.action_resolution =
      options.grid_action_search ? options.action_step : options.action_tol;
  out.soc0_ref = soc0;
  out.values.assign(horizon + 1,
                    std::vector<std::vector<double>>(
                        n_soc, std::vector<double>(n_g, 0.0)));

  for (std::size_t si = 0; si < n_soc; ++si) {
    const double terminal = spec.salvage_rate * (soc_points[si] - soc0);
    for (std::size_t gi = 0; gi < n_g; ++gi) {
      out.values[horizon][si][gi] = terminal;
    }
  }

  for (std::size_t back = 0; back < horizon; ++back) {
    const std::size_t t = horizon - 1 - back;
    const TariffInterval& iv = tariff.at(t);
    const DeviceFleet& fleet = fleets.at(t);

    // Expected reward-to-go at t+1 given the level at t, laid out
    // [level][soc index] for interpolation over soc.
    std::vector<std::vector<double>> cont(n_g, std::vector<double>(n_soc));
    if (t + 1 == horizon) {
      for (std::size_t gi = 0; gi < n_g; ++gi) {
        for (std::size_t si = 0; si < n_soc; ++si) {
          cont[gi][si] = out.values[horizon][si][0];
        }
      }
    } else {
      const auto& matrix = renewable.matrix_at(t);
      for (std::size_t gi = 0; gi < n_g; ++gi) {
        for (std::size_t si = 0; si < n_soc; ++si) {
          double v = 0.0;
          for (std::size_t j = 0; j < n_g; ++j) {
            v += matrix[gi][j] * out.values[t + 1][si][j];
          }
          cont[gi][si] = v;
        }
      }
    }

    auto& level = out.values[t];
    parallel_for(n_soc, static_cast<int>(options.jobs), [&](std::size_t si) {
      const double soc = soc_points[si];
      const ClippedLimits limits = clip_limits(spec, soc);
      for (std::size_t gi = 0; gi < n_g; ++gi) {
        const double g = renewable.support[gi];
        const auto& cont_gi = cont[gi];
        const auto objective = [&](double e) {
          const double snext = std::clamp(soc + soc_delta(spec, e),
                                          spec.soc_min, spec.capacity);
          return consumption_value(fleet, iv, g - e) +
                 interp_on_grid(soc_points, cont_gi, snext);
        };
        double best = 0.0;
        if (options.grid_action_search) {
          const double lo = -limits.discharge;
          const double hi = limits.charge;
          best = objective(lo);
          for (double e = lo + options.action_step; e < hi;
               e += options.action_step) {
            best = std::max(best, objective(e));
          }
          best = std::max(best, objective(hi));
          best = std::max(best, objective(std::clamp(0.0, lo, hi)));
        } else {
          golden_max(-limits.discharge, limits.charge, options.action_tol,
                     objective, &best);
        }
        level[si][gi] = best;
      }
    });
  }
  return out;
}

std::string dp_solution_to_csv(const DpSolution& solution) {
  std::ostringstream buffer;
  CsvWriter csv(buffer);
  csv.row({"t", "soc", "g", "value"});
  for (std::size_t t = 0; t < solution.values.size(); ++t) {
    for (std::size_t si = 0; si < solution.soc_points.size(); ++si) {
      for (std::size_t gi = 0; gi < solution.support.size(); ++gi) {
        csv.row({std::to_string(t), format_double(solution.soc_points[si]),
                 format_double(solution.support[gi]),
                 format_double(solution.values[t][si][gi])});
      }
    }
  }
  return buffer.str();
}

namespace {

// Geometry of the relaxed path problem: split draws x = (charge[0..T),
// discharge[0..T)) with box limits and running cell-energy sums confined to
// [lo, hi].
struct ChainBox {
  double charge_max = 0.0;
  double discharge_max = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double tau = 0.0;
  double inv_rho = 0.0;
};

bool chain_feasible(const ChainBox& box, const std::vector<double>& x,
                    std::size_t horizon, double tol) {
  double s = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (x[t] < -tol || x[t] > box.charge_max + tol) return false;
    if (x[horizon + t] < -tol || x[horizon + t] > box.discharge_max + tol) {
      return false;
    }
    s += box.tau * x[t] - box.inv_rho * x[horizon + t];
    if (s < box.lo - tol || s > box.hi + tol) return false;
  }
  return true;
}

// Walks the path once, clamping each interval's draws so the running sum
// stays inside [lo, hi]. Always lands on a feasible point because a zero
// draw never leaves the band.
void repair_forward(const ChainBox& box, std::vector<double>* xp,
                    std::size_t horizon) {
  auto& x = *xp;
  double s = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    double ep = std::clamp(x[t], 0.0, box.charge_max);
    double em = std::clamp(x[horizon + t], 0.0, box.discharge_max);
    double next = s + box.tau * ep - box.inv_rho * em;
    if (next > box.hi) {
      ep = std::clamp((box.hi - s + box.inv_rho * em) / box.tau, 0.0,
                      box.charge_max);
      next = s + box.tau * ep - box.inv_rho * em;
    }
    if (next < box.lo) {
      em = std::clamp((s + box.tau * ep - box.lo) / box.inv_rho, 0.0,
                      box.discharge_max);
      next = s + box.tau * ep - box.inv_rho * em;
    }
    if (next > box.hi) {
      ep = std::clamp((box.hi - s + box.inv_rho * em) / box.tau, 0.0,
                      box.charge_max);
      next = s + box.tau * ep - box.inv_rho * em;
    }
    x[t] = ep;
    x[horizon + t] = em;
    s = next;
  }
}

// Euclidean projection onto box and running-sum constraints via cyclic
// Dykstra iterations, finished by the forward repair for exactness.
void project_chain(const ChainBox& box, std::vector<double>* xp,
                   std::size_t horizon) {
  auto& x = *xp;
  const std::size_t dims = 2 * horizon;
  const std::size_t n_sets = 1 + 2 * horizon;
  std::vector<std::vector<double>> corrections(n_sets,
                                               std::vector<double>(dims, 0.0));
  std::vector<double> y(dims);
  std::vector<double> prev(dims);
  const double norm_base = box.tau * box.tau + box.inv_rho * box.inv_rho;
  for (int cycle = 0; cycle < 600; ++cycle) {
    prev = x;
    for (std::size_t set = 0; set < n_sets; ++set) {
      auto& correction = corrections[set];
      for (std::size_t i = 0; i < dims; ++i) y[i] = x[i] + correction[i];
      if (set == 0) {
        for (std::size_t t = 0; t < horizon; ++t) {
          x[t] = std::clamp(y[t], 0.0, box.charge_max);
          x[horizon + t] = std::clamp(y[horizon + t], 0.0, box.discharge_max);
        }
      } else {
        const bool upper = set <= horizon;
        const std::size_t t_idx = upper ? set - 1 : set - horizon - 1;
        double dot = 0.0;
        for (std::size_t j = 0; j <= t_idx; ++j) {
          dot += box.tau * y[j] - box.inv_rho * y[horizon + j];
        }
        double shift = 0.0;
        if (upper && dot > box.hi) {
          shift = (dot - box.hi) /
                  (static_cast<double>(t_idx + 1) * norm_base);
        } else if (!upper && dot < box.lo) {
          shift = (dot - box.lo) /
                  (static_cast<double>(t_idx + 1) * norm_base);
        }
        for (std::size_t i = 0; i < dims; ++i) x[i] = y[i];
        if (shift != 0.0) {
          for (std::size_t j = 0; j <= t_idx; ++j) {
            x[j] -= shift * box.tau;
            x[horizon + j] += shift * box.inv_rho;
          }
        }
      }
      for (std::size_t i = 0; i < dims; ++i) correction[i] = y[i] - x[i];
    }
    double moved = 0.0;
    for (std::size_t i = 0; i < dims; ++i) {
      moved = std::max(moved, std::abs(x[i] - prev[i]));
    }
    if (moved < 1e-14 && chain_feasible(box, x, horizon, 1e-11)) break;
  }
  repair_forward(box, xp, horizon);
}

struct BoundWork {
  const TariffSchedule& tariff;
  const FleetSchedule& fleets;
  const std::vector<double>& g;
  ChainBox box;
  double salvage = 0.0;
  std::size_t horizon = 0;

  double eval(const std::vector<double>& x) const {
    double v = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      const double y = g[t] - x[t] + x[horizon + t];
      v += consumption_value(fleets.at(t), tariff.at(t), y) +
           salvage * (box.tau * x[t] - box.inv_rho * x[horizon + t]);
    }
    return v;
  }

  void grad(const std::vector<double>& x, std::vector<double>* out) const {
    for (std::size_t t = 0; t < horizon; ++t) {
      const double y = g[t] - x[t] + x[horizon + t];
      const double sp = shadow_price(fleets.at(t), tariff.at(t), y);
      (*out)[t] = salvage * box.tau - sp;
      (*out)[horizon + t] = sp - salvage * box.inv_rho;
    }
  }
};

// Exact one-coordinate maximization passes. Feasible coordinate ranges come
// from the running-sum constraints downstream of the coordinate's interval.
void coordinate_sweeps(const BoundWork& w, std::vector<double>* xp,
                       std::size_t* iterations, std::size_t max_sweeps) {
  auto& x = *xp;
  const std::size_t horizon = w.horizon;
  std::vector<double> prefix(horizon);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double gain_total = 0.0;
    for (std::size_t i = 0; i < 2 * horizon; ++i) {
      const bool is_charge = i < horizon;
      const std::size_t t = is_charge ? i : i - horizon;
      const double coeff = is_charge ? w.box.tau : -w.box.inv_rho;
      const double cur = x[i];
      double s = 0.0;
      for (std::size_t k = 0; k < horizon; ++k) {
        s += w.box.tau * x[k] - w.box.inv_rho * x[horizon + k];
        prefix[k] = s;
      }
      double lo = 0.0;
      double hi = is_charge ? w.box.charge_max : w.box.discharge_max;
      for (std::size_t k = t; k < horizon; ++k) {
        const double others = prefix[k] - coeff * cur;
        if (coeff > 0.0) {
          lo = std::max(lo, (w.box.lo - others) / coeff);
          hi = std::min(hi, (w.box.hi - others) / coeff);
        } else {
          lo = std::max(lo, (w.box.hi - others) / coeff);
          hi = std::min(hi, (w.box.lo - others) / coeff);
        }
      }
      if (!(hi >= lo)) continue;
      const TariffInterval& iv = w.tariff.at(t);
      const DeviceFleet& fleet = w.fleets.at(t);
      const auto objective = [&](double v) {
        const double y = is_charge ? w.g[t] - v + x[horizon + t]
                                   : w.g[t] - x[t] + v;
        const double lin = is_charge ? w.salvage * w.box.tau * v
                                     : -w.salvage * w.box.inv_rho * v;
        return consumption_value(fleet, iv, y) + lin;
      };
      double best_v = 0.0;
      const double arg =
          golden_max(lo, hi, 1e-12 * (1.0 + hi - lo), objective, &best_v);
      const double cur_clamped = std::clamp(cur, lo, hi);
      const double cur_v = objective(cur_clamped);
      ++(*iterations);
      if (best_v > cur_v + 1e-15) {
        x[i] = arg;
        gain_total += best_v - cur_v;
      } else {
        x[i] = cur_clamped;
      }
    }
    if (gain_total < 1e-13) break;
  }
}

BoundResult solve_bound_iteratively(const BoundWork& w, std::vector<double> x,
                                    const BoundOptions& options) {
  const std::size_t horizon = w.horizon;
  const std::size_t dims = 2 * horizon;
  repair_forward(w.box, &x, horizon);
  double fx = w.eval(x);
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> grad(dims);
  std::vector<double> trial(dims);
  double step = 1.0;

  while (iterations < options.max_iterations) {
    const double epoch_start = fx;

    for (int k = 0; k < 40 && iterations < options.max_iterations; ++k) {
      w.grad(x, &grad);
      bool accepted = false;
      double trial_step = step;
      for (int bt = 0; bt < 30; ++bt) {
        trial = x;
        for (std::size_t i = 0; i < dims; ++i) trial[i] += trial_step * grad[i];
        project_chain(w.box, &trial, horizon);
        ++iterations;
        const double ft = w.eval(trial);
        if (ft > fx + 1e-15) {
          x.swap(trial);
          fx = ft;
          step = trial_step * 1.6;
          accepted = true;
          break;
        }
        trial_step *= 0.4;
        if (trial_step < 1e-14) break;
      }
      if (!accepted) {
        step = std::max(step * 0.4, 1e-12);
        break;
      }
    }

    coordinate_sweeps(w, &x, &iterations, 4);
    fx = w.eval(x);

    const double gain = fx - epoch_start;
    if (gain < options.tolerance * (1.0 + std::abs(fx))) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "perfect-foresight ascent did not settle after " << iterations
        << " iterations (value " << fx << ")";
    throw NumericError(msg.str());
  }

  // Simultaneous charge-discharge wastes salvage unless the capacity
  // ceiling forces it; net it out where that stays feasible.
  std::vector<double> netted = x;
  bool any = false;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double m = std::min(netted[t], netted[horizon + t]);
    if (m > 0.0) {
      netted[t] -= m;
      netted[horizon + t] -= m;
      any = true;
    }
  }
  if (any && chain_feasible(w.box, netted, horizon, 1e-12)) {
    const double fn = w.eval(netted);
    if (fn >= fx - 1e-12) {
      x = netted;
      fx = fn;
    }
  }

  BoundResult out;
  out.value = fx;
  out.charge.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(horizon));
  out.discharge.assign(x.begin() + static_cast<std::ptrdiff_t>(horizon),
                       x.end());
  out.separable = false;
  out.converged = converged;
  out.iterations = iterations;
  return out;
}

}  // namespace

BoundResult perfect_foresight_bound(const TariffSchedule& tariff,
                                    const FleetSchedule& fleets,
                                    const BatterySpec& spec, double soc0,
                                    const std::vector<double>& g_path,
                                    const BoundOptions& options) {
  check_common_inputs(tariff, fleets, spec, soc0, g_path);
  const std::size_t horizon = tariff.horizon();
  const A1Check a1 = check_a1(spec, tariff);
  const ClippedLimits raw{spec.charge_limit, spec.discharge_limit};

  // With raw limits the per-interval decisions maximize each term of the
  // path objective separately; if the resulting state of charge never
  // leaves its band, no coupling binds and the greedy value is the exact
  // optimum.
  std::vector<Decision> greedy(horizon);
  double s = soc0;
  bool feasible = true;
  for (std::size_t t = 0; t < horizon; ++t) {
    const TariffInterval& iv = tariff.at(t);
    const DeviceFleet& fleet = fleets.at(t);
    greedy[t] = a1.ok()
                    ? decide(fleet, iv, spec, raw, g_path[t])
                    : decide_relaxed_a1(fleet, iv, spec, raw, g_path[t],
                                        a1.regime);
    s += soc_delta(spec, greedy[t].e);
    if (s < spec.soc_min - kSocTol || s > spec.capacity + kSocTol) {
      feasible = false;
      break;
    }
  }
  if (feasible) {
    BoundResult out;
    out.charge.assign(horizon, 0.0);
    out.discharge.assign(horizon, 0.0);
    double value = spec.salvage_rate * (s - soc0);
    for (std::size_t t = 0; t < horizon; ++t) {
      value += surplus(tariff.at(t), fleets.at(t), greedy[t].d, greedy[t].e,
                       g_path[t]);
      out.charge[t] = std::max(greedy[t].e, 0.0);
      out.discharge[t] = std::max(-greedy[t].e, 0.0);
    }
    out.value = value;
    out.separable = true;
    out.converged = true;
    out.iterations = 0;
    return out;
  }

  ChainBox box;
  box.charge_max = spec.charge_limit;
  box.discharge_max = spec.discharge_limit;
  box.lo = spec.soc_min - soc0;
  box.hi = spec.capacity - soc0;
  box.tau = spec.charge_eff;
  box.inv_rho = 1.0 / spec.discharge_eff;
  const BoundWork work{tariff, fleets, g_path, box, spec.salvage_rate,
                       horizon};

  // Warm start from the physically feasible sequential policy.
  const Trajectory warm = run_mco(tariff, fleets, spec, soc0, g_path);
  std::vector<double> x(2 * horizon, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    x[t] = std::max(warm.records[t].e, 0.0);
    x[horizon + t] = std::max(-warm.records[t].e, 0.0);
  }
  return solve_bound_iteratively(work, std::move(x), options);
}

MarkovForecaster::MarkovForecaster(MarkovRenewable chain)
    : chain_(std::move(chain)) {
  if (chain_.support.empty()) {
    throw std::invalid_argument("chain support is empty");
  }
}

std::vector<double> MarkovForecaster::forecast(std::size_t t, double g_now,
                                               std::size_t steps) const {
  if (steps == 0) return {};
  return chain_.conditional_means(t, chain_.nearest_level(g_now), steps);
}

Trajectory run_mpc(const TariffSchedule& tariff, const FleetSchedule& fleets,
                   const BatterySpec& spec, double soc0,
                   const Forecaster& forecaster,
                   const std::vector<double>& g_path, std::size_t window,
                   const MpcOptions& options) {
  check_common_inputs(tariff, fleets, spec, soc0, g_path);
  if (window == 0) {
    throw std::invalid_argument("lookahead window must be at least 1");
  }
  const std::size_t horizon = tariff.horizon();

  Trajectory out;
  out.records.reserve(horizon);
  double s = std::clamp(soc0, spec.soc_min, spec.capacity);
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::size_t span =
        options.window_includes_current ? window : window + 1;
    const std::size_t end = std::min(t + span, horizon);
    const std::size_t steps = end - t - 1;
    std::vector<double> g_window(end - t);
    g_window[0] = g_path[t];
    if (steps > 0) {
      const std::vector<double> means = forecaster.forecast(t, g_path[t],
                                                            steps);
      if (means.size() != steps) {
        throw std::logic_error("forecaster returned the wrong step count");
      }
      for (std::size_t k = 0; k < steps; ++k) {
        g_window[1 + k] = std::max(means[k], 0.0);
      }
    }

    const TariffSchedule window_tariff(std::vector<TariffInterval>(
        tariff.intervals().begin() + static_cast<std::ptrdiff_t>(t),
        tariff.intervals().begin() + static_cast<std::ptrdiff_t>(end)));
    FleetSchedule window_fleets = [&] {
      if (fleets.uniform()) return FleetSchedule(fleets.at(0));
      std::vector<DeviceFleet> slice;
      slice.reserve(end - t);
      for (std::size_t k = t; k < end; ++k) slice.push_back(fleets.at(k));
      return FleetSchedule(std::move(slice));
    }();

    const BoundResult plan = perfect_foresight_bound(
        window_tariff, window_fleets, spec, s, g_window, options.solver);

    const ClippedLimits limits = clip_limits(spec, s);
    const double e = std::clamp(plan.charge.front() - plan.discharge.front(),
                                -limits.discharge, limits.charge);
    const TariffInterval& iv = tariff.at(t);
    const DeviceFleet& fleet = fleets.at(t);
    Decision decision = consumption_for_net_supply(fleet, iv, g_path[t] - e);
    decision.e = e;
    s = step_soc(spec, s, e);

    StageRecord record;
    record.t = t;
    record.g = g_path[t];
    record.d = decision.d;
    record.e = e;
    record.z = decision.z;
    record.soc_after = s;
    record.stage_reward = stage_reward(iv, fleet, decision, g_path[t]);
    out.records.push_back(std::move(record));
  }

  out.terminal_salvage = spec.salvage_rate * (s - soc0);
  double total = out.terminal_salvage;
  for (const auto& record : out.records) total += record.stage_reward;
  out.cumulative_reward = total;
  return out;
}

Trajectory run_mpc(const TariffSchedule& tariff, const FleetSchedule& fleets,
                   const BatterySpec& spec, double soc0,
                   const MarkovRenewable& renewable,
                   const std::vector<double>& g_path, std::size_t window,
                   const MpcOptions& options) {
  renewable.validate(tariff.horizon());
  const MarkovForecaster forecaster(renewable);
  return run_mpc(tariff, fleets, spec, soc0, forecaster, g_path, window,
                 options);
}

std::string to_string(CustomerType type) {
  switch (type) {
    case CustomerType::consumer:
      return "consumer";
    case CustomerType::solar_exporter:
      return "solar_exporter";
    case CustomerType::self_powered:
      return "self_powered";
    case CustomerType::packaged_sdg:
      return "packaged_sdg";
    case CustomerType::active_sdg:
      return "active_sdg";
    case CustomerType::passive_sdg:
      return "passive_sdg";
  }
  return "unknown";
}

CustomerType customer_type_from_string(const std::string& name) {
  if (name == "consumer") return CustomerType::consumer;
  if (name == "solar_exporter") return CustomerType::solar_exporter;
  if (name == "self_powered") return CustomerType::self_powered;
  if (name == "packaged_sdg") return CustomerType::packaged_sdg;
  if (name == "active_sdg") return CustomerType::active_sdg;
  if (name == "passive_sdg") return CustomerType::passive_sdg;
  throw std::domain_error("unknown customer type: " + name);
}

Trajectory run_customer_type(CustomerType type, const TariffSchedule& tariff,
                             const FleetSchedule& fleets,
                             const BatterySpec& spec, double soc0,
                             const std::vector<double>& g_path,
                             const IntervalSet& peak_window) {
  if (type == CustomerType::active_sdg) {
    return run_mco(tariff, fleets, spec, soc0, g_path);
  }
  check_common_inputs(tariff, fleets, spec, soc0, g_path);
  if (type == CustomerType::solar_exporter && peak_window.empty()) {
    throw std::invalid_argument("solar_exporter needs a peak window");
  }
  const std::size_t horizon = tariff.horizon();
  const A1Check a1 = check_a1(spec, tariff);

  Trajectory out;
  out.records.reserve(horizon);
  double s = std::clamp(soc0, spec.soc_min, spec.capacity);
  for (std::size_t t = 0; t < horizon; ++t) {
    const TariffInterval& iv = tariff.at(t);
    const DeviceFleet& fleet = fleets.at(t);
    const double g = g_path[t];
    const ClippedLimits limits = clip_limits(spec, s);

    Decision decision;
    switch (type) {
      case CustomerType::consumer: {
        decision.d = fleet.responses(iv.retail_rate);
        decision.e = 0.0;
        decision.z = std::accumulate(decision.d.begin(), decision.d.end(),
                                     0.0);
        break;
      }
      case CustomerType::solar_exporter: {
        decision.d = fleet.responses(iv.retail_rate);
        const double total = std::accumulate(decision.d.begin(),
                                             decision.d.end(), 0.0);
        if (peak_window.count(t) > 0) {
          decision.e = -std::min(limits.discharge, total);
        } else if (g > 0.0) {
          decision.e = std::min(limits.charge, g);
        } else {
          decision.e = 0.0;
        }
        decision.z = total + decision.e - g;
        break;
      }
      case CustomerType::self_powered:
      case CustomerType::passive_sdg:
        decision = decide_passive(fleet, iv, spec, limits, g);
        break;
      case CustomerType::packaged_sdg: {
        if (g > 0.0) {
          const double e = std::min(limits.charge, g);
          decision = consumption_for_net_supply(fleet, iv, g - e);
          decision.e = e;
        } else {
          decision = a1.ok()
                         ? decide(fleet, iv, spec, limits, g)
                         : decide_relaxed_a1(fleet, iv, spec, limits, g,
                                             a1.regime);
        }
        break;
      }
      case CustomerType::active_sdg:
        break;
      default:
        throw std::domain_error("unknown customer type tag");
    }

    s = step_soc(spec, s, decision.e);

    StageRecord record;
    record.t = t;
    record.g = type == CustomerType::consumer ? 0.0 : g;
    record.d = decision.d;
    record.e = decision.e;
    record.z = decision.z;
    record.soc_after = s;
    record.stage_reward = stage_reward(iv, fleet, decision, record.g);
    out.records.push_back(std::move(record));
  }

  out.terminal_salvage = spec.salvage_rate * (s - soc0);
  double total = out.terminal_salvage;
  for (const auto& record : out.records) total += record.stage_reward;
  out.cumulative_reward = total;
  return out;
}

}  // namespace dercoopt
