#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "network.hpp"
#include "profiles.hpp"

namespace hcap {

/// Aggregate targets for a generated radial feeder.
struct FeederSpec {
  std::string name = "F1";
  int sections = 1;
  double peak_mw = 0.0;
  double min_mw = 0.0;
  double conductor_miles = 1.0;
  int customers = 0;
  double three_phase_fraction = 0.3;
  double nominal_kv_ll = 12.47;
  double source_setpoint_pu = 1.02;
  int switching_blocks = 3;  // mainline blocks bounded by SCADA switches
  std::uint64_t seed = 1;

  void validate() const {
    if (sections < 1) throw ConfigError("feeder '" + name + "': at least one section is required");
    if (peak_mw < 0.0 || min_mw < 0.0 || min_mw > peak_mw)
      throw ConfigError("feeder '" + name + "': need 0 <= min_mw <= peak_mw");
    if (customers < 0) throw ConfigError("feeder '" + name + "': customers must be >= 0");
    if (!(conductor_miles > 0.0)) throw ConfigError("feeder '" + name + "': conductor_miles must be > 0");
    if (three_phase_fraction < 0.0 || three_phase_fraction > 1.0)
      throw ConfigError("feeder '" + name + "': three_phase_fraction must lie in [0, 1]");
    if (switching_blocks < 1) throw ConfigError("feeder '" + name + "': switching_blocks must be >= 1");
    if (!(nominal_kv_ll > 0.0)) throw ConfigError("feeder '" + name + "': nominal_kv_ll must be > 0");
  }
};

struct SyntheticNetwork {
  Network network;
  ProfileLibrary load_shapes;
};

// Conductor data per phase: ohms per mile and ampere rating.
struct ConductorType {
  Complex z_per_mile;
  double rating_a;
};

inline constexpr ConductorType kTrunkConductor{{0.12, 0.40}, 700.0};
inline constexpr ConductorType kThreePhaseLateral{{0.30, 0.60}, 400.0};
inline constexpr ConductorType kSinglePhaseLateral{{0.55, 0.75}, 230.0};
inline constexpr int kMaxLateralSections = 40;

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

 private:
  std::mt19937_64 gen_;
};

struct NetworkParts {
  std::vector<Node> nodes;
  std::vector<Section> sections;
  std::vector<Switch> switches;
  std::vector<SourceBus> sources;
  std::vector<LoadPoint> loads;
  std::vector<std::string> feeders;
  std::vector<int> trunk_sections;  // per feeder, filled by build_feeder
  std::string trunk_end_node;
};

/// Adds one radial feeder to `parts`. Nodes are created parent-first, so a
/// single pass accumulates distances.
inline void build_feeder(const FeederSpec& spec, NetworkParts& parts) {
  spec.validate();
  Rng rng(spec.seed);
  const std::string& p = spec.name;
  const int n = spec.sections;
  const double v_ln = spec.nominal_kv_ll * 1000.0 / std::sqrt(3.0);
  const std::size_t node0 = parts.nodes.size();
  const std::size_t sec0 = parts.sections.size();

  const int trunk = std::clamp(std::max(static_cast<int>(std::lround(n * 0.08)), spec.switching_blocks), 1, n);
  const int three_phase_total = std::clamp(static_cast<int>(std::lround(n * spec.three_phase_fraction)), trunk, n);
  const int extra_3ph = three_phase_total - trunk;

  struct Local {
    int parent;  // local node index
    Phases phases;
    int kind;    // 0 trunk, 1 three-phase lateral, 2 one/two-phase lateral
  };
  std::vector<Local> nodes{{-1, Phases(Phases::kAll), 0}};  // source
  for (int k = 1; k <= trunk; ++k) nodes.push_back({k - 1, Phases(Phases::kAll), 0});

  std::vector<int> three_ph_nodes;  // non-source three-phase nodes
  for (int k = 1; k <= trunk; ++k) three_ph_nodes.push_back(k);
  std::vector<int> lateral_nodes;
  std::vector<int> root_of(n + 1, -1);  // one/two-phase lateral root per node
  std::vector<int> lateral_size(n + 1, 0);

  auto pick_recent = [&](const std::vector<int>& pool) {
    std::size_t window = std::min<std::size_t>(pool.size(), 12);
    if (rng.uniform() < 0.6) return pool[pool.size() - 1 - rng.index(window)];
    return pool[rng.index(pool.size())];
  };

  for (int k = 0; k < extra_3ph; ++k) {
    int parent = (k == 0 || rng.uniform() < 0.3) ? 1 + static_cast<int>(rng.index(trunk)) : pick_recent(three_ph_nodes);
    nodes.push_back({parent, Phases(Phases::kAll), 1});
    three_ph_nodes.push_back(static_cast<int>(nodes.size()) - 1);
  }
  static constexpr std::uint8_t kDouble[3] = {Phases::kA | Phases::kB, Phases::kB | Phases::kC, Phases::kA | Phases::kC};
  for (int k = trunk + extra_3ph; k < n; ++k) {
    int parent;
    if (lateral_nodes.empty() || rng.uniform() < 0.15) parent = three_ph_nodes[rng.index(three_ph_nodes.size())];
    else parent = pick_recent(lateral_nodes);
    if (nodes[parent].kind == 2 && lateral_size[root_of[parent]] >= kMaxLateralSections)
      parent = three_ph_nodes[rng.index(three_ph_nodes.size())];
    Phases ph;
    Phases pp = nodes[parent].phases;
    if (pp.count() == 3) {
      ph = rng.uniform() < 0.85 ? Phases(Phases::kA) : Phases(kDouble[rng.index(3)]);
    } else if (pp.count() == 2 && rng.uniform() < 0.3) {
      ph = pp.has(0) ? Phases(Phases::kA) : Phases(Phases::kB);
    } else {
      ph = pp;
    }
    nodes.push_back({parent, ph, 2});
    const int id = static_cast<int>(nodes.size()) - 1;
    root_of[id] = nodes[parent].kind == 2 ? root_of[parent] : id;
    lateral_size[root_of[id]]++;
    lateral_nodes.push_back(id);
  }

  // Customers: one commercial customer on ~40% of three-phase nodes, the rest
  // residential on one/two-phase nodes.
  std::vector<int> customers(n + 1, 0), commercial(n + 1, 0);
  int remaining = spec.customers;
  int n_comm = std::min(static_cast<int>(std::lround(three_ph_nodes.size() * 0.4)), spec.customers / 4);
  for (int k = 0; k < n_comm; ++k) {
    int node = three_ph_nodes[rng.index(three_ph_nodes.size())];
    if (commercial[node]) continue;
    commercial[node] = 1;
    customers[node] = 1;
    --remaining;
  }
  const std::vector<int>& res_pool = lateral_nodes.empty() ? three_ph_nodes : lateral_nodes;
  for (int c = 0; c < remaining; ++c) customers[res_pool[rng.index(res_pool.size())]]++;

  std::vector<double> weight(n + 1, 0.0);
  double wsum = 0.0;
  for (int k = 1; k <= n; ++k) {
    weight[k] = commercial[k] ? 15.0 * (0.5 + rng.uniform()) : customers[k] * (0.7 + 0.6 * rng.uniform());
    wsum += weight[k];
  }
  if (wsum == 0.0 && spec.peak_mw > 0.0) {
    for (int k = 1; k <= n; ++k) weight[k] = 1.0;
    wsum = n;
  }

  // Phase balancing: each lateral is rotated A->B->C as a whole, heaviest
  // first, onto the rotation that keeps the largest phase total smallest.
  auto rotate = [](std::uint8_t m, int r) {
    for (int i = 0; i < r; ++i) m = static_cast<std::uint8_t>(((m << 1) | (m >> 2)) & Phases::kAll);
    return m;
  };
  std::vector<std::array<double, 3>> lateral_load(n + 1, {0.0, 0.0, 0.0});
  for (int k = 1; k <= n; ++k) {
    if (root_of[k] < 0) continue;
    for (int ph = 0; ph < 3; ++ph)
      if (nodes[k].phases.has(ph)) lateral_load[root_of[k]][ph] += weight[k] / nodes[k].phases.count();
  }
  std::vector<int> roots;
  for (int k = 1; k <= n; ++k)
    if (root_of[k] == k) roots.push_back(k);
  auto total = [](const std::array<double, 3>& a) { return a[0] + a[1] + a[2]; };
  std::stable_sort(roots.begin(), roots.end(),
                   [&](int a, int b) { return total(lateral_load[a]) > total(lateral_load[b]); });
  std::array<double, 3> phase_total{0.0, 0.0, 0.0};
  std::vector<int> rotation(n + 1, 0);
  for (int r : roots) {
    int best = 0;
    double best_peak = 1e300;
    for (int rot = 0; rot < 3; ++rot) {
      double peak = 0.0;
      for (int ph = 0; ph < 3; ++ph) peak = std::max(peak, phase_total[(ph + rot) % 3] + lateral_load[r][ph]);
      if (peak < best_peak - 1e-12) {
        best_peak = peak;
        best = rot;
      }
    }
    rotation[r] = best;
    for (int ph = 0; ph < 3; ++ph) phase_total[(ph + best) % 3] += lateral_load[r][ph];
  }
  for (int k = 1; k <= n; ++k)
    if (root_of[k] >= 0) nodes[k].phases = Phases(rotate(nodes[k].phases.mask(), rotation[root_of[k]]));

  // Lengths: trunk carries ~7% of conductor miles, laterals the rest.
  std::vector<double> raw(n + 1, 0.0);
  double trunk_raw = 0.0, lat_raw = 0.0;
  for (int k = 1; k <= n; ++k) {
    raw[k] = nodes[k].kind == 0 ? 0.5 + rng.uniform() : -std::log(1.0 - 0.95 * rng.uniform()) + 0.05;
    (nodes[k].kind == 0 ? trunk_raw : lat_raw) += raw[k];
  }
  const double trunk_miles = lat_raw > 0.0 ? spec.conductor_miles * 0.07 : spec.conductor_miles;
  const double lat_miles = spec.conductor_miles - trunk_miles;

  std::vector<double> dist(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double len = 0.0;
    if (k > 0) {
      len = nodes[k].kind == 0 ? raw[k] / trunk_raw * trunk_miles : raw[k] / lat_raw * lat_miles;
      dist[k] = dist[nodes[k].parent] + len;
    }
    parts.nodes.push_back(Node{p + ".n" + std::to_string(k), nodes[k].phases, dist[k], v_ln});
    if (k == 0) continue;
    const auto& cond = nodes[k].kind == 0 ? kTrunkConductor : nodes[k].kind == 1 ? kThreePhaseLateral : kSinglePhaseLateral;
    parts.sections.push_back(Section{p + ".s" + std::to_string(k), parts.nodes[node0 + nodes[k].parent].id,
                                     parts.nodes.back().id, nodes[k].phases, cond.z_per_mile * len, len, cond.rating_a});
  }

  parts.sources.push_back(SourceBus{parts.nodes[node0].id, spec.source_setpoint_pu, p, parts.sections[sec0].id});
  parts.feeders.push_back(p);
  parts.trunk_sections.clear();
  for (int k = 1; k <= trunk; ++k) parts.trunk_sections.push_back(static_cast<int>(sec0) + k - 1);
  parts.trunk_end_node = parts.nodes[node0 + trunk].id;

  for (int k = 1; k <= n; ++k) {
    if (weight[k] == 0.0 && customers[k] == 0) continue;
    double kw = wsum > 0.0 ? spec.peak_mw * 1000.0 * weight[k] / wsum : 0.0;
    parts.loads.push_back(LoadPoint{parts.nodes[node0 + k].id, kw, commercial[k] ? 0.92 : 0.95, p + ".load", customers[k]});
  }
}

}  // namespace detail

/// Shape over the interval grid with maximum 1 and minimum min/peak: summer
/// and winter peaking months, evening weekday peak.
inline Profile synthetic_load_shape(double min_to_peak) {
  constexpr std::array<double, 12> month_f{0.92, 0.88, 0.78, 0.72, 0.80, 0.93, 1.00, 0.98, 0.88, 0.75, 0.80, 0.90};
  constexpr DayValues weekday{0.55, 0.50, 0.48, 0.47, 0.48, 0.55, 0.68, 0.78, 0.80, 0.80, 0.82, 0.84,
                              0.86, 0.88, 0.90, 0.93, 0.97, 1.00, 1.00, 0.97, 0.92, 0.84, 0.74, 0.63};
  constexpr DayValues weekend{0.58, 0.53, 0.50, 0.48, 0.48, 0.50, 0.56, 0.64, 0.72, 0.78, 0.82, 0.85,
                              0.87, 0.88, 0.89, 0.90, 0.92, 0.95, 0.96, 0.94, 0.90, 0.83, 0.74, 0.65};
  Profile p{ProfileKind::load, {}};
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < kIntervalCount; ++i) {
    auto iv = IntervalIndex::from_flat(i);
    double v = month_f[iv.month - 1] * (iv.day_type == DayType::weekday ? weekday : weekend)[iv.hour];
    p.values[i] = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double& v : p.values) v = min_to_peak + (1.0 - min_to_peak) * (v - lo) / (hi - lo);
  return p;
}

/// Seeded radial feeder with exactly the requested section count; peak load
/// and conductor length match to floating-point accuracy. Main trunk is
/// three-phase; laterals are three-phase first, then one/two-phase.
inline SyntheticNetwork generate_synthetic_feeder(const FeederSpec& spec) {
  detail::NetworkParts parts;
  detail::build_feeder(spec, parts);
  SyntheticNetwork out{Network(std::move(parts.nodes), std::move(parts.sections), {}, std::move(parts.sources),
                               std::move(parts.loads), std::move(parts.feeders)),
                       {}};
  out.load_shapes.add(spec.name + ".load", synthetic_load_shape(spec.peak_mw > 0.0 ? spec.min_mw / spec.peak_mw : 1.0));
  return out;
}

/// Two feeders joined end to end by a normally-open SCADA tie, each trunk
/// split into switching blocks by SCADA boundary switches. Configurations
/// are left empty; enumerate them with enumerate_configurations().
inline SyntheticNetwork generate_feeder_pair(const FeederSpec& a, const FeederSpec& b, double tie_miles = 0.5) {
  detail::NetworkParts parts;
  std::vector<std::string> ends;
  for (const auto* spec : {&a, &b}) {
    detail::build_feeder(*spec, parts);
    const auto& trunk = parts.trunk_sections;
    const int blocks = spec->switching_blocks;
    if (static_cast<int>(trunk.size()) < blocks)
      throw ConfigError("feeder '" + spec->name + "': too few sections for " + std::to_string(blocks) + " switching blocks");
    for (int k = 1; k < blocks; ++k) {
      int pos = static_cast<int>(std::lround(static_cast<double>(trunk.size()) * k / blocks));
      pos = std::clamp(pos, 1, static_cast<int>(trunk.size()) - 1);
      parts.switches.push_back(
          Switch{spec->name + ".sw" + std::to_string(k), parts.sections[trunk[pos]].id, true, false, true});
    }
    ends.push_back(parts.trunk_end_node);
  }
  const std::string tie_section = a.name + "-" + b.name + ".tie";
  parts.sections.push_back(Section{tie_section, ends[0], ends[1], Phases(Phases::kAll),
                                   kTrunkConductor.z_per_mile * tie_miles, tie_miles, kTrunkConductor.rating_a});
  parts.switches.push_back(Switch{a.name + "-" + b.name + ".tie_sw", tie_section, true, true, false});

  SyntheticNetwork out{Network(std::move(parts.nodes), std::move(parts.sections), std::move(parts.switches),
                               std::move(parts.sources), std::move(parts.loads), std::move(parts.feeders)),
                       {}};
  for (const auto* spec : {&a, &b})
    out.load_shapes.add(spec->name + ".load",
                        synthetic_load_shape(spec->peak_mw > 0.0 ? spec->min_mw / spec->peak_mw : 1.0));
  return out;
}

/// Aggregate targets of the two study feeders.
inline FeederSpec feeder_f1_spec(std::uint64_t seed = 1) {
  FeederSpec s;
  s.name = "F1";
  s.sections = 1376;
  s.peak_mw = 11.3;
  s.min_mw = 5.6;
  s.conductor_miles = 62.2;
  s.customers = 1306;
  s.seed = seed;
  return s;
}

inline FeederSpec feeder_f2_spec(std::uint64_t seed = 2) {
  FeederSpec s;
  s.name = "F2";
  s.sections = 825;
  s.peak_mw = 9.4;
  s.min_mw = 1.2;
  s.conductor_miles = 48.7;
  s.customers = 1382;
  s.seed = seed;
  return s;
}

}  // namespace hcap
