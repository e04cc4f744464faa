#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "parallel.hpp"
#include "scenarios.hpp"

namespace hcap {

enum class HcKind { generation, load };

inline const char* to_string(HcKind k) { return k == HcKind::generation ? "generation" : "load"; }

inline HcKind parse_hc_kind(const std::string& s) {
  if (s == "generation") return HcKind::generation;
  if (s == "load") return HcKind::load;
  throw ConfigError("unknown HC kind '" + s + "' (expected generation|load)");
}

struct HcOptions {
  double cap_multiple = 2.0;  // search cap = multiple x peak kVA served by the tree
  int min_cap_kw = 1000;      // floor for lightly loaded or unloaded trees
  bool monotonicity_guard = true;
  bool volt_var = false;
  PowerFlowOptions power_flow{};
};

struct HcPoint {
  int kw = 0;
  Criterion binding = Criterion::none;
};

/// Incremental HC search for one energized view and one demand snapshot.
/// The no-DER solution is computed once and shared by every section query;
/// queries are const and safe to run concurrently.
class HcEngine {
 public:
  HcEngine(const RadialModel& model, const Snapshot& snapshot, const CriteriaRegime& regime, HcOptions opt = {})
      : model_(&model), regime_(regime), opt_(opt), loads_(snapshot.load_kva) {
    regime_.validate();
    const auto& view = model.view();
    const auto& net = view.network();
    base_inj_.kva.assign(net.node_count(), Complex{});
    for (std::size_t n = 0; n < net.node_count(); ++n) {
      if (!view.energized(static_cast<int>(n))) {
        loads_[n] = Complex{};
        continue;
      }
      base_inj_.kva[n] = Complex{snapshot.pv_kw.empty() ? 0.0 : snapshot.pv_kw[n], 0.0};
    }
    base_inj_.volt_var_enabled = opt_.volt_var;
    base_ = solve(model, loads_, base_inj_, opt_.power_flow);

    cap_kw_.assign(view.tree_count(), opt_.min_cap_kw);
    base_failure_.assign(view.tree_count(), Criterion::none);
    for (std::size_t t = 0; t < view.tree_count(); ++t) {
      double kva = 0.0;
      for (int v : view.tree(static_cast<int>(t)))
        for (int l : net.loads_at(v)) kva += net.loads()[l].peak_kva();
      cap_kw_[t] = std::max(opt_.min_cap_kw, static_cast<int>(std::ceil(opt_.cap_multiple * kva - 1e-9)));
      base_failure_[t] = check(base_, static_cast<int>(t));
    }
  }

  const PowerFlowSolution& base_solution() const { return base_; }
  const EnergizedView& view() const { return model_->view(); }
  /// Criterion failing with no candidate DER on a tree, or none.
  Criterion base_failure(int tree) const { return base_failure_[tree]; }
  int cap_kw(int tree) const { return cap_kw_[tree]; }

  /// Failing criterion (or none) with `x_kw` of candidate generation or load
  /// at the section's to_node.
  Criterion probe(int section, HcKind kind, double x_kw) const {
    Scratch s = make_scratch(section);
    return probe(s, kind, x_kw);
  }

  /// Largest whole-kW injection that passes the regime on [0, cap]. The
  /// pass/fail bracket is narrowed by interpolating criterion margins, then
  /// closed to 1 kW. Sections not energized in this view return
  /// nullopt.
  std::optional<HcPoint> hc(int section, HcKind kind) const {
    const auto& view = model_->view();
    if (!view.section_energized(section)) return std::nullopt;
    const int node = view.network().to_index(section);
    const int tree = view.source_of(node);
    if (base_failure_[tree] != Criterion::none) return HcPoint{0, base_failure_[tree]};

    Scratch s = make_scratch(section);
    const int cap = cap_kw_[tree];
    Criterion hi_fail = probe(s, kind, cap);
    if (hi_fail == Criterion::none) return HcPoint{cap, Criterion::none};

    int lo = 0, hi = cap;
    MarginSet m_lo = evaluate_margins(base_, base_, view, regime_, tree);
    MarginSet m_hi = s.margins;
    auto take = [&](int x) {
      Criterion c = probe(s, kind, x);
      if (c == Criterion::none) {
        lo = x;
        m_lo = s.margins;
      } else {
        hi = x;
        m_hi = s.margins;
        hi_fail = c;
      }
      return c == Criterion::none;
    };
    bool interpolate = true;
    while (hi - lo > 1) {
      const int width = hi - lo;
      int x = lo + width / 2;
      if (interpolate) {
        if (auto r = first_crossing(m_lo, m_hi)) x = lo + static_cast<int>(std::lround(*r * width));
        x = std::clamp(x, lo + 1, hi - 1);
        const int step = std::max(1, width / 64);
        if (take(x)) {
          if (x + step < hi) take(x + step);
        } else if (x - step > lo) {
          take(x - step);
        }
        interpolate = 2 * (hi - lo) <= width;
      } else {
        take(x);
        interpolate = true;
      }
    }

    if (opt_.monotonicity_guard) {
      int x = lo / 2;
      if (x > 0 && probe(s, kind, x) != Criterion::none) return linear_sweep(s, kind, cap);
    }
    return HcPoint{lo, hi_fail};
  }

 private:
  struct Scratch {
    int section = -1;
    int node = -1;
    int tree = -1;
    std::vector<Complex> loads;
    InjectionSet inj;
    PowerFlowSolution sol;
    MarginSet margins;  // from the latest probe
  };

  Scratch make_scratch(int section) const {
    const auto& view = model_->view();
    Scratch s;
    s.section = section;
    s.node = view.network().to_index(section);
    s.tree = view.source_of(s.node);
    if (s.tree < 0) throw Error("section '" + view.network().sections()[section].id + "' is not energized");
    s.loads = loads_;
    s.inj = base_inj_;
    s.sol = base_;
    return s;
  }

  // Fraction of the way from lo to hi where the earliest criterion crosses
  // zero, by linear interpolation of each criterion's own margin.
  static std::optional<double> first_crossing(const MarginSet& lo, const MarginSet& hi) {
    std::optional<double> best;
    for (auto c : kAllCriteria) {
      const auto& a = lo[c];
      const auto& b = hi[c];
      if (!a.checked || !b.checked || !(b.margin < 0.0) || !(a.margin >= 0.0)) continue;
      if (!std::isfinite(a.margin) || !std::isfinite(b.margin)) continue;
      double t = a.margin / (a.margin - b.margin);
      if (!best || t < *best) best = t;
    }
    return best;
  }

  Criterion probe(Scratch& s, HcKind kind, double x_kw) const {
    const Complex base_load = s.loads[s.node];
    const Complex base_gen = s.inj.kva[s.node];
    if (kind == HcKind::generation) s.inj.kva[s.node] += Complex{x_kw, 0.0};
    else s.loads[s.node] += Complex{x_kw, 0.0};
    solve_tree(*model_, s.tree, s.loads, s.inj, s.sol, opt_.power_flow, true);
    s.loads[s.node] = base_load;
    s.inj.kva[s.node] = base_gen;
    return check(s.sol, s.tree, &s.margins);
  }

  Criterion check(const PowerFlowSolution& sol, int tree, MarginSet* out = nullptr) const {
    auto m = evaluate_margins(sol, base_, model_->view(), regime_, tree);
    Criterion c = m.first_failure();
    if (c == Criterion::none && regime_.protection_plugin && !regime_.protection_plugin(sol, base_, model_->view()).passed)
      c = Criterion::protection;
    if (out) *out = m;
    return c;
  }

  std::optional<HcPoint> linear_sweep(Scratch& s, HcKind kind, int cap) const {
    Criterion c = probe(s, kind, 0);
    if (c != Criterion::none) return HcPoint{0, c};
    for (int x = 1; x <= cap; ++x) {
      c = probe(s, kind, x);
      if (c != Criterion::none) return HcPoint{x - 1, c};
    }
    return HcPoint{cap, Criterion::none};
  }

  const RadialModel* model_;
  CriteriaRegime regime_;
  HcOptions opt_;
  std::vector<Complex> loads_;
  InjectionSet base_inj_;
  PowerFlowSolution base_;
  std::vector<int> cap_kw_;
  std::vector<Criterion> base_failure_;
};

/// One profile entry: HC at one interval (or study snapshot).
struct HcEntry {
  std::string interval;
  double kw = 0.0;
  Criterion binding = Criterion::none;
  std::string configuration;  // configuration that set the value
  bool energized = true;
};

struct HcResult {
  std::string section_id;
  HcKind kind = HcKind::generation;
  double flat_kw = 0.0;
  Criterion flat_binding = Criterion::none;
  std::string flat_configuration;
  std::vector<HcEntry> profile;
  std::string regime_name;
  std::string configuration_id;
  std::string scenario_id;

  /// flat = min over the profile; ties keep the earliest interval.
  void finalize() {
    flat_kw = 0.0;
    flat_binding = Criterion::none;
    flat_configuration.clear();
    bool first = true;
    for (const auto& e : profile) {
      if (first || e.kw < flat_kw) {
        flat_kw = e.kw;
        flat_binding = e.binding;
        flat_configuration = e.configuration;
        first = false;
      }
    }
  }
};

/// HC at one section for one snapshot. Builds a single-use engine; batch
/// callers should share an HcEngine across sections instead.
inline HcPoint hc_at(const EnergizedView& view, int section, const Snapshot& snapshot, const CriteriaRegime& regime,
                     HcKind kind, const HcOptions& opt = {}) {
  RadialModel model(view);
  HcEngine engine(model, snapshot, regime, opt);
  auto r = engine.hc(section, kind);
  if (!r) throw Error("section '" + view.network().sections()[section].id + "' is not energized");
  return *r;
}

inline HcPoint hc_at(const EnergizedView& view, int section, const IntervalIndex& interval, const ScenarioLoads& loads,
                     const CriteriaRegime& regime, HcKind kind, const HcOptions& opt = {}) {
  return hc_at(view, section, loads.snapshot(interval), regime, kind, opt);
}

/// HC for many sections over a list of snapshots. Returns one HcResult per
/// section, each with one entry per snapshot (unenergized entries are 0 and
/// flagged). Snapshots are processed one at a time, sections in parallel.
inline std::vector<HcResult> hc_profiles(const EnergizedView& view, const std::vector<int>& sections,
                                         const std::vector<Snapshot>& snapshots, const CriteriaRegime& regime,
                                         HcKind kind, const std::string& scenario_id, const HcOptions& opt = {},
                                         unsigned threads = 1) {
  const auto& net = view.network();
  RadialModel model(view);
  std::vector<HcResult> out(sections.size());
  for (std::size_t k = 0; k < sections.size(); ++k) {
    auto& r = out[k];
    r.section_id = net.sections()[sections[k]].id;
    r.kind = kind;
    r.regime_name = regime.name;
    r.configuration_id = view.configuration_id();
    r.scenario_id = scenario_id;
    r.profile.resize(snapshots.size());
  }
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    HcEngine engine(model, snapshots[i], regime, opt);
    parallel_for(sections.size(), threads, [&](std::size_t k) {
      auto p = engine.hc(sections[k], kind);
      auto& e = out[k].profile[i];
      e.interval = snapshots[i].label;
      e.configuration = view.configuration_id();
      if (p) {
        e.kw = p->kw;
        e.binding = p->binding;
      } else {
        e.energized = false;
      }
    });
  }
  for (auto& r : out) r.finalize();
  return out;
}

/// All 576 grid snapshots of a scenario.
inline std::vector<Snapshot> grid_snapshots(const ScenarioLoads& loads) {
  std::vector<Snapshot> out;
  out.reserve(kIntervalCount);
  for (int i = 0; i < kIntervalCount; ++i) out.push_back(loads.snapshot(IntervalIndex::from_flat(i)));
  return out;
}

/// Interval profile over the full grid for one section.
inline HcResult hc_profile(const EnergizedView& view, int section, const ScenarioLoads& loads,
                           const CriteriaRegime& regime, HcKind kind, const HcOptions& opt = {}) {
  return hc_profiles(view, {section}, grid_snapshots(loads), regime, kind, loads.id(), opt).front();
}

/// DER energy forgone per representative year when output is held to the
/// flat (worst-interval) value instead of the interval profile.
inline double lost_der_opportunity(const HcResult& result) {
  if (result.kind != HcKind::generation) throw Error("lost_der_opportunity requires a generation result");
  if (result.profile.size() != static_cast<std::size_t>(kIntervalCount))
    throw Error("lost_der_opportunity requires a full 576-interval profile");
  double kwh = 0.0;
  for (int i = 0; i < kIntervalCount; ++i)
    kwh += (result.profile[i].kw - result.flat_kw) * interval_weight_hours(IntervalIndex::from_flat(i));
  return kwh;
}

/// Histogram of flat binding criteria.
inline std::map<Criterion, int> limiting_distribution(const std::vector<HcResult>& results) {
  std::map<Criterion, int> hist;
  for (const auto& r : results) hist[r.flat_binding]++;
  return hist;
}

/// Sections energized under a configuration, in network order.
inline std::vector<int> energized_sections(const EnergizedView& view) {
  std::vector<int> out;
  for (std::size_t s = 0; s < view.network().section_count(); ++s)
    if (view.section_energized(static_cast<int>(s))) out.push_back(static_cast<int>(s));
  return out;
}

}  // namespace hcap
