#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ev.hpp"
#include "network.hpp"
#include "pv.hpp"

namespace hcap {

struct PenetrationScenario {
  double pv_level = 0.0;  // fraction of customers hosting PV
  double ev_level = 0.0;  // fraction of customers owning an EV
  std::uint64_t placement_seed = 1;

  std::string id() const {
    auto pct = [](double f) { return std::to_string(static_cast<int>(std::lround(f * 100.0))); };
    return "pv" + pct(pv_level) + "_ev" + pct(ev_level);
  }
};

/// Rows and columns of the penetration matrix.
inline std::vector<PenetrationScenario> penetration_matrix(const std::vector<double>& pv_levels = {0.0, 0.2, 0.4},
                                                           const std::vector<double>& ev_levels = {0.0, 0.2, 0.4},
                                                           std::uint64_t seed = 1) {
  std::vector<PenetrationScenario> out;
  for (double ev : ev_levels)
    for (double pv : pv_levels) out.push_back({pv, ev, seed});
  return out;
}

/// Everything a scenario needs beyond the network.
struct ScenarioLibraries {
  ProfileLibrary load_shapes;
  PvModel pv;
  EvTemplates ev_templates = builtin_ev_templates();
  EvFleetSpec fleet;  // ev_count is overridden per scenario
};

/// Demand for one interval: per-node constant-power load (kW + j kvar) and
/// existing PV output (kW).
struct Snapshot {
  std::string label;
  std::vector<Complex> load_kva;
  std::vector<double> pv_kw;
};

/// Per-node interval data over the 576-cell grid for one scenario.
class ScenarioLoads {
 public:
  ScenarioLoads() = default;
  ScenarioLoads(std::string id, std::size_t nodes)
      : id_(std::move(id)), load_kw_(nodes * kIntervalCount), load_kvar_(nodes * kIntervalCount),
        pv_kw_(nodes * kIntervalCount), nodes_(nodes) {}

  const std::string& id() const { return id_; }
  std::size_t node_count() const { return nodes_; }

  double& load_kw(std::size_t n, int i) { return load_kw_[n * kIntervalCount + i]; }
  double& load_kvar(std::size_t n, int i) { return load_kvar_[n * kIntervalCount + i]; }
  double& pv_kw(std::size_t n, int i) { return pv_kw_[n * kIntervalCount + i]; }
  double load_kw(std::size_t n, int i) const { return load_kw_[n * kIntervalCount + i]; }
  double load_kvar(std::size_t n, int i) const { return load_kvar_[n * kIntervalCount + i]; }
  double pv_kw(std::size_t n, int i) const { return pv_kw_[n * kIntervalCount + i]; }
  double net_kw(std::size_t n, int i) const { return load_kw(n, i) - pv_kw(n, i); }

  Snapshot snapshot(const IntervalIndex& iv) const {
    Snapshot s{iv.str(), std::vector<Complex>(nodes_), std::vector<double>(nodes_)};
    int i = iv.flat();
    for (std::size_t n = 0; n < nodes_; ++n) {
      s.load_kva[n] = {load_kw(n, i), load_kvar(n, i)};
      s.pv_kw[n] = pv_kw(n, i);
    }
    return s;
  }

  /// Node's reactive-to-real ratio of its base load at this interval.
  double q_ratio(std::size_t n, int i) const {
    double p = load_kw(n, i);
    return p > 0.0 ? load_kvar(n, i) / p : 0.0;
  }

  std::vector<double> ev_kw;  // feeder-total EV demand per interval (for reporting)
  std::vector<double> pv_systems_by_node;

 private:
  std::string id_;
  std::vector<double> load_kw_, load_kvar_, pv_kw_;
  std::size_t nodes_ = 0;
};

namespace detail {

// Fisher-Yates on raw mt19937_64 draws.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

/// Expands base loads, EV adoption and PV adoption onto every node over the
/// interval grid. EV demand is spread by customer count; PV systems go to
/// randomly chosen customers (residential rating, commercial on 3-phase nodes).
inline ScenarioLoads apply_penetration(const Network& net, const PenetrationScenario& sc, const ScenarioLibraries& lib) {
  if (sc.pv_level < 0.0 || sc.pv_level > 1.0 || sc.ev_level < 0.0 || sc.ev_level > 1.0)
    throw ConfigError("scenario " + sc.id() + ": penetration levels must lie in [0, 1]");
  const std::size_t n_nodes = net.node_count();
  ScenarioLoads out(sc.id(), n_nodes);

  for (std::size_t l = 0; l < net.loads().size(); ++l) {
    const auto& lp = net.loads()[l];
    int n = net.load_node_index(static_cast<int>(l));
    const auto& shape = lib.load_shapes.get(lp.profile_id);
    double q_per_p = lp.peak_kw > 0.0 ? lp.peak_kvar() / lp.peak_kw : 0.0;
    for (int i = 0; i < kIntervalCount; ++i) {
      double p = lp.peak_kw * shape.values[i];
      out.load_kw(n, i) += p;
      out.load_kvar(n, i) += p * q_per_p;
    }
  }

  std::vector<int> customers(n_nodes, 0);
  long total_customers = 0;
  for (std::size_t l = 0; l < net.loads().size(); ++l) {
    customers[net.load_node_index(static_cast<int>(l))] += net.loads()[l].customer_count;
    total_customers += net.loads()[l].customer_count;
  }

  out.ev_kw.assign(kIntervalCount, 0.0);
  if (sc.ev_level > 0.0 && total_customers > 0) {
    EvFleetSpec fleet = lib.fleet;
    fleet.ev_count = static_cast<int>(std::lround(sc.ev_level * total_customers));
    for (int m = 1; m <= 12; ++m)
      for (auto d : {DayType::weekday, DayType::weekend}) {
        auto day = ev_profile(fleet, m, d, lib.ev_templates);
        for (int h = 0; h < 24; ++h) {
          int i = IntervalIndex{m, d, h}.flat();
          out.ev_kw[i] = day[h];
          for (std::size_t n = 0; n < n_nodes; ++n)
            if (customers[n] > 0) out.load_kw(n, i) += day[h] * customers[n] / static_cast<double>(total_customers);
        }
      }
  }

  out.pv_systems_by_node.assign(n_nodes, 0.0);
  if (sc.pv_level > 0.0 && total_customers > 0) {
    std::vector<int> slots;
    slots.reserve(total_customers);
    for (std::size_t n = 0; n < n_nodes; ++n)
      for (int c = 0; c < customers[n]; ++c) slots.push_back(static_cast<int>(n));
    detail::seeded_shuffle(slots, sc.placement_seed);
    auto n_pv = static_cast<std::size_t>(std::lround(sc.pv_level * total_customers));
    const auto& shape = lib.pv.shapes.get(lib.pv.shape_id);
    for (std::size_t k = 0; k < n_pv && k < slots.size(); ++k) {
      int n = slots[k];
      auto site = net.nodes()[n].phases.count() == 3 ? SiteClass::commercial : SiteClass::residential;
      double rating = lib.pv.rating(site);
      out.pv_systems_by_node[n] += 1.0;
      for (int i = 0; i < kIntervalCount; ++i) out.pv_kw(n, i) += rating * shape.values[i];
    }
  }
  return out;
}

/// Daily 24-hour history with the day type of each day.
struct DailyHistory {
  std::vector<DayValues> days;
  std::vector<DayType> day_types;
};

struct DemandEnvelope {
  DayValues p10{}, p90{}, mean{}, mean_weekday{}, mean_weekend{};
};

inline constexpr std::size_t kMinHistoryDays = 365;

/// Nearest-rank percentile (p in whole percent) of an unsorted sample.
inline double nearest_rank_percentile(std::vector<double> values, int p) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  std::size_t rank = (static_cast<std::size_t>(p) * values.size() + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

/// Per-hour-of-day percentiles across days, plus mean day profiles.
inline DemandEnvelope demand_percentiles(const DailyHistory& history) {
  const std::size_t n = history.days.size();
  if (n < kMinHistoryDays)
    throw ConfigError("insufficient demand history: " + std::to_string(n) + " days, need " +
                      std::to_string(kMinHistoryDays));
  if (history.day_types.size() != n) throw ConfigError("demand history: day type count mismatch");
  DemandEnvelope env;
  std::vector<double> column(n);
  for (int h = 0; h < 24; ++h) {
    double sum = 0.0, sum_wd = 0.0, sum_we = 0.0;
    std::size_t n_wd = 0, n_we = 0;
    for (std::size_t d = 0; d < n; ++d) {
      double v = history.days[d][h];
      column[d] = v;
      sum += v;
      if (history.day_types[d] == DayType::weekday) sum_wd += v, ++n_wd;
      else sum_we += v, ++n_we;
    }
    env.p10[h] = nearest_rank_percentile(column, 10);
    env.p90[h] = nearest_rank_percentile(column, 90);
    env.mean[h] = sum / n;
    env.mean_weekday[h] = n_wd ? sum_wd / n_wd : env.mean[h];
    env.mean_weekend[h] = n_we ? sum_we / n_we : env.mean[h];
  }
  return env;
}

/// Expands a 576-cell grid series into a reference-year daily history.
inline DailyHistory expand_to_history(const GridValues& grid) {
  DailyHistory h;
  for (const auto& day : reference_calendar()) {
    DayValues row{};
    for (int hour = 0; hour < 24; ++hour) row[hour] = grid[IntervalIndex{day.month, day.day_type, hour}.flat()];
    h.days.push_back(row);
    h.day_types.push_back(day.day_type);
  }
  return h;
}

/// Net demand (load - PV) envelope of one node from the scenario library.
inline DemandEnvelope node_demand_percentiles(const ScenarioLoads& loads, std::size_t node) {
  GridValues grid{};
  for (int i = 0; i < kIntervalCount; ++i) grid[i] = loads.net_kw(node, i);
  return demand_percentiles(expand_to_history(grid));
}

/// Study snapshots built from per-node demand envelopes.
struct EnvelopeSnapshots {
  Snapshot minimum;  // p10 day at the hour of lowest total p10 net demand
  Snapshot peak;     // p90 day at the hour of highest total p90 net demand
  int minimum_hour = 0;
  int peak_hour = 0;
  std::vector<Snapshot> mean_days;  // 24 weekday then 24 weekend hours of mean net demand
};

inline EnvelopeSnapshots envelope_snapshots(const Network& net, const ScenarioLoads& loads) {
  const std::size_t nn = net.node_count();
  std::vector<DemandEnvelope> env(nn);
  std::vector<double> q_ratio(nn, 0.0);
  for (std::size_t n = 0; n < nn; ++n) {
    env[n] = node_demand_percentiles(loads, n);
    double p = 0.0, q = 0.0;
    for (int l : net.loads_at(static_cast<int>(n))) {
      p += net.loads()[l].peak_kw;
      q += net.loads()[l].peak_kvar();
    }
    q_ratio[n] = p > 0.0 ? q / p : 0.0;
  }
  auto make = [&](const std::string& label, auto pick) {
    Snapshot s{label, std::vector<Complex>(nn), std::vector<double>(nn)};
    for (std::size_t n = 0; n < nn; ++n) {
      double net_kw = pick(env[n]);
      if (net_kw >= 0.0) s.load_kva[n] = {net_kw, net_kw * q_ratio[n]};
      else s.pv_kw[n] = -net_kw;
    }
    return s;
  };

  EnvelopeSnapshots out;
  double best_min = std::numeric_limits<double>::infinity(), best_peak = -best_min;
  for (int h = 0; h < 24; ++h) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t n = 0; n < nn; ++n) lo += env[n].p10[h], hi += env[n].p90[h];
    if (lo < best_min) best_min = lo, out.minimum_hour = h;
    if (hi > best_peak) best_peak = hi, out.peak_hour = h;
  }
  out.minimum = make("p10/" + std::to_string(out.minimum_hour), [&](const DemandEnvelope& e) { return e.p10[out.minimum_hour]; });
  out.peak = make("p90/" + std::to_string(out.peak_hour), [&](const DemandEnvelope& e) { return e.p90[out.peak_hour]; });
  for (int h = 0; h < 24; ++h)
    out.mean_days.push_back(make("meanWD/" + std::to_string(h), [h](const DemandEnvelope& e) { return e.mean_weekday[h]; }));
  for (int h = 0; h < 24; ++h)
    out.mean_days.push_back(make("meanWE/" + std::to_string(h), [h](const DemandEnvelope& e) { return e.mean_weekend[h]; }));
  return out;
}

}  // namespace hcap
