#pragma once

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "power_flow.hpp"

namespace hcap {

// `none` marks an HC search that reached its cap without any failure.
enum class Criterion {
  thermal,
  over_voltage,
  under_voltage,
  voltage_deviation,
  reverse_flow_head,
  opflex_device,
  non_convergence,
  protection,
  none
};

inline constexpr std::array<Criterion, 9> kAllCriteria{
    Criterion::thermal,         Criterion::over_voltage,   Criterion::under_voltage,
    Criterion::voltage_deviation, Criterion::reverse_flow_head, Criterion::opflex_device,
    Criterion::non_convergence, Criterion::protection,     Criterion::none};

inline const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::thermal: return "thermal";
    case Criterion::over_voltage: return "over_voltage";
    case Criterion::under_voltage: return "under_voltage";
    case Criterion::voltage_deviation: return "voltage_deviation";
    case Criterion::reverse_flow_head: return "reverse_flow_head";
    case Criterion::opflex_device: return "opflex_device";
    case Criterion::non_convergence: return "non_convergence";
    case Criterion::protection: return "protection";
    case Criterion::none: return "none";
  }
  return "none";
}

inline Criterion parse_criterion(const std::string& s) {
  for (auto c : kAllCriteria)
    if (s == to_string(c)) return c;
  throw ConfigError("unknown criterion '" + s + "'");
}

struct CriterionReport {
  Criterion criterion = Criterion::none;
  bool passed = true;
  double worst_margin = 0.0;  // kW, A or pu depending on the criterion
  std::string location;
};

using ProtectionPlugin =
    std::function<CriterionReport(const PowerFlowSolution&, const PowerFlowSolution&, const EnergizedView&)>;

struct CriteriaRegime {
  std::string name = "classical";
  bool thermal_enabled = true;
  double loading_limit_fraction = 1.0;
  bool voltage_enabled = true;
  double v_min = 0.95;
  double v_max = 1.05;
  bool deviation_enabled = true;
  double voltage_deviation_limit = 0.03;
  bool reverse_flow_at_head = true;
  bool opflex_scada_zero_flow = false;
  ProtectionPlugin protection_plugin;

  void validate() const {
    if (!(v_min > 0.0 && v_min < v_max)) throw ConfigError("regime '" + name + "': need 0 < v_min < v_max");
    if (!(voltage_deviation_limit > 0.0 && voltage_deviation_limit <= 0.1))
      throw ConfigError("regime '" + name + "': voltage_deviation_limit must be in (0, 0.1]");
    if (!(loading_limit_fraction > 0.0)) throw ConfigError("regime '" + name + "': loading_limit_fraction must be > 0");
  }
};

/// classical: thermal + voltage band + deviation + head reverse flow.
/// opflex: classical plus zero reverse flow through SCADA transfer devices.
/// transfer_study: classical, intended to be evaluated per configuration.
inline std::map<std::string, CriteriaRegime> regime_presets() {
  CriteriaRegime classical;
  classical.name = "classical";
  CriteriaRegime opflex = classical;
  opflex.name = "opflex";
  opflex.opflex_scada_zero_flow = true;
  CriteriaRegime transfer = classical;
  transfer.name = "transfer_study";
  return {{"classical", classical}, {"opflex", opflex}, {"transfer_study", transfer}};
}

inline CriteriaRegime regime_by_name(const std::string& name) {
  auto presets = regime_presets();
  auto key = name == "transfer" ? std::string("transfer_study") : name;
  auto it = presets.find(key);
  if (it == presets.end()) throw ConfigError("unknown regime '" + name + "' (expected classical|opflex|transfer)");
  return it->second;
}

namespace detail {

inline constexpr double kKwTol = 1e-6;
inline constexpr double kPuTol = 1e-9;
inline constexpr double kAmpTol = 1e-6;

// Margins within tolerance of zero count as exactly zero, so that
// passed <=> margin >= 0 stays exact.
inline double snap(double m, double tol) { return (m < 0.0 && m >= -tol) ? 0.0 : m; }

}  // namespace detail

/// Worst margin per criterion, located by element index. Element kind depends
/// on the criterion (node, section, source or switch index).
struct MarginSet {
  struct Entry {
    bool checked = false;
    double margin = std::numeric_limits<double>::infinity();
    int element = -1;
  };
  std::array<Entry, 9> entries{};

  Entry& operator[](Criterion c) { return entries[static_cast<int>(c)]; }
  const Entry& operator[](Criterion c) const { return entries[static_cast<int>(c)]; }

  bool passed() const {
    for (const auto& e : entries)
      if (e.checked && e.margin < 0.0) return false;
    return true;
  }

  /// First failing criterion in declaration order, or none.
  Criterion first_failure() const {
    for (auto c : kAllCriteria)
      if ((*this)[c].checked && (*this)[c].margin < 0.0) return c;
    return Criterion::none;
  }
};

/// Margin computation shared by evaluate() and the HC search. When `tree` is
/// set only that source tree is checked.
inline MarginSet evaluate_margins(const PowerFlowSolution& sol, const PowerFlowSolution& sol_without_der,
                                  const EnergizedView& view, const CriteriaRegime& regime,
                                  std::optional<int> tree = std::nullopt) {
  MarginSet m;
  const auto& net = view.network();
  const int t_begin = tree ? *tree : 0;
  const int t_end = tree ? *tree + 1 : static_cast<int>(view.tree_count());

  for (int t = t_begin; t < t_end; ++t) {
    if (!sol.tree_converged[t] || !sol_without_der.tree_converged[t]) {
      auto& e = m[Criterion::non_convergence];
      e.checked = true;
      e.margin = -1.0;
      e.element = net.source_node_index(t);
      return m;
    }
  }

  auto update = [](MarginSet::Entry& e, double margin, int element) {
    e.checked = true;
    if (margin < e.margin) {
      e.margin = margin;
      e.element = element;
    }
  };

  for (int t = t_begin; t < t_end; ++t) {
    for (int node : view.tree(t)) {
      const auto phases = view.node_phases(node);
      for (int p = 0; p < 3; ++p) {
        if (!phases.has(p)) continue;
        double vm = magnitude(sol.node_voltages[node][p]);
        if (regime.voltage_enabled) {
          update(m[Criterion::over_voltage], regime.v_max - vm, node);
          update(m[Criterion::under_voltage], vm - regime.v_min, node);
        }
        if (regime.deviation_enabled) {
          double v0 = magnitude(sol_without_der.node_voltages[node][p]);
          update(m[Criterion::voltage_deviation], regime.voltage_deviation_limit - std::abs(vm - v0), node);
        }
      }
      int s = view.parent_section(node);
      if (s >= 0 && regime.thermal_enabled) {
        double limit = net.sections()[s].thermal_rating * regime.loading_limit_fraction;
        const auto& amps = sol.branch_currents[s];
        double worst = std::max({amps[0], amps[1], amps[2]});
        update(m[Criterion::thermal], limit - worst, s);
      }
    }
    if (regime.reverse_flow_at_head) update(m[Criterion::reverse_flow_head], head_flow(sol, view, t), t);
  }

  if (regime.opflex_scada_zero_flow) {
    for (std::size_t w = 0; w < net.switches().size(); ++w) {
      const auto& sw = net.switches()[w];
      int s = net.switch_section_index(static_cast<int>(w));
      if (!sw.is_transfer_device() || !view.section_closed(s) || !view.section_energized(s)) continue;
      int src = view.source_of(view.downstream_node(s));
      if (src < t_begin || src >= t_end) continue;
      update(m[Criterion::opflex_device], device_flow(sol, view, static_cast<int>(w)), static_cast<int>(w));
    }
  }

  m[Criterion::reverse_flow_head].margin = detail::snap(m[Criterion::reverse_flow_head].margin, detail::kKwTol);
  m[Criterion::opflex_device].margin = detail::snap(m[Criterion::opflex_device].margin, detail::kKwTol);
  m[Criterion::thermal].margin = detail::snap(m[Criterion::thermal].margin, detail::kAmpTol);
  for (auto c : {Criterion::over_voltage, Criterion::under_voltage, Criterion::voltage_deviation})
    m[c].margin = detail::snap(m[c].margin, detail::kPuTol);
  return m;
}

inline std::string margin_location(Criterion c, int element, const EnergizedView& view) {
  if (element < 0) return {};
  const auto& net = view.network();
  switch (c) {
    case Criterion::thermal: return net.sections()[element].id;
    case Criterion::reverse_flow_head: return net.sections()[net.source_head_section(element)].id;
    case Criterion::opflex_device: return net.switches()[element].id;
    default: return net.nodes()[element].id;
  }
}

/// Checks a solution against a regime. Failures are reported as data; a
/// criterion with nothing to check (e.g. no SCADA devices) yields no report.
inline std::vector<CriterionReport> evaluate(const PowerFlowSolution& sol, const PowerFlowSolution& sol_without_der,
                                             const EnergizedView& view, const CriteriaRegime& regime,
                                             std::optional<int> tree = std::nullopt) {
  auto m = evaluate_margins(sol, sol_without_der, view, regime, tree);
  std::vector<CriterionReport> out;
  for (auto c : kAllCriteria) {
    const auto& e = m[c];
    if (!e.checked) continue;
    out.push_back({c, e.margin >= 0.0, e.margin, margin_location(c, e.element, view)});
  }
  if (regime.protection_plugin && !m[Criterion::non_convergence].checked)
    out.push_back(regime.protection_plugin(sol, sol_without_der, view));
  return out;
}

inline bool all_passed(const std::vector<CriterionReport>& reports) {
  for (const auto& r : reports)
    if (!r.passed) return false;
  return true;
}

}  // namespace hcap
