#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hosting_capacity.hpp"

namespace hcap {

struct EnumeratedConfigurations {
  std::vector<Configuration> configurations;  // base first
  int filtered_non_radial = 0;
};

struct TransferProbabilities {
  double per_transfer = 0.01;  // base receives the remainder
};

/// Base configuration plus one transfer per (normally-open tie, block
/// boundary switch) pair: close the tie, open the boundary. Candidates that
/// leave a loop are dropped and counted.
inline EnumeratedConfigurations enumerate_configurations(const Network& net, TransferProbabilities prob = {}) {
  EnumeratedConfigurations out;
  Configuration base = net.base_configuration();
  base.id = kBaseConfigurationId;
  out.configurations.push_back(base);

  std::vector<int> ties, boundaries;
  for (std::size_t w = 0; w < net.switches().size(); ++w) {
    const auto& sw = net.switches()[w];
    if (sw.normally_open) ties.push_back(static_cast<int>(w));
    else if (sw.switching_block_boundary) boundaries.push_back(static_cast<int>(w));
  }
  for (int t : ties)
    for (int b : boundaries) {
      Configuration c;
      c.id = net.switches()[t].id + "+" + net.switches()[b].id;
      c.closed_switches = {net.switches()[t].id};
      c.open_switches = {net.switches()[b].id};
      if (!validate_radiality(net, c).radial) {
        out.filtered_non_radial++;
        continue;
      }
      out.configurations.push_back(c);
    }

  const double transfers = static_cast<double>(out.configurations.size() - 1);
  const double base_p = 1.0 - transfers * prob.per_transfer;
  if (base_p < prob.per_transfer) throw ConfigError("transfer probabilities leave the base configuration least likely");
  out.configurations[0].probability = base_p;
  for (std::size_t i = 1; i < out.configurations.size(); ++i) out.configurations[i].probability = prob.per_transfer;
  return out;
}

/// Per-interval minimum over configurations of per-configuration results for
/// the same section; entries where the section is de-energized are skipped.
/// An interval with no energized configuration becomes 0 and is flagged.
inline HcResult combine_transfer(const std::vector<HcResult>& per_config, std::vector<std::string>* diagnostics = nullptr) {
  if (per_config.empty()) throw Error("combine_transfer: no configurations");
  HcResult out = per_config.front();
  out.regime_name = "transfer";
  out.configuration_id = "all";
  const std::size_t n = out.profile.size();
  for (const auto& r : per_config)
    if (r.profile.size() != n || r.section_id != out.section_id)
      throw Error("combine_transfer: results do not describe the same section and intervals");
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<HcEntry> best;
    for (const auto& r : per_config) {
      const auto& e = r.profile[i];
      if (!e.energized) continue;
      if (!best || e.kw < best->kw) best = e;
    }
    if (!best) {
      HcEntry e = per_config.front().profile[i];
      e.kw = 0.0;
      e.binding = Criterion::none;
      e.configuration.clear();
      e.energized = false;
      out.profile[i] = e;
      if (diagnostics)
        diagnostics->push_back("section '" + out.section_id + "' de-energized in every configuration at " + e.interval);
      continue;
    }
    out.profile[i] = *best;
  }
  out.finalize();
  return out;
}

/// Transfer-aware HC for a set of sections: classical HC under every
/// configuration, combined by per-interval minimum.
inline std::vector<HcResult> transfer_hc(const Network& net, const std::vector<int>& sections,
                                         const std::vector<Configuration>& configs,
                                         const std::vector<Snapshot>& snapshots, const CriteriaRegime& regime,
                                         HcKind kind, const std::string& scenario_id, const HcOptions& opt = {},
                                         unsigned threads = 1) {
  if (configs.empty()) throw ConfigError("transfer_hc: configuration list is empty");
  std::vector<std::vector<HcResult>> per_config;
  for (const auto& c : configs) {
    auto view = apply_configuration(net, c);
    per_config.push_back(hc_profiles(view, sections, snapshots, regime, kind, scenario_id, opt, threads));
  }
  std::vector<HcResult> out;
  for (std::size_t k = 0; k < sections.size(); ++k) {
    std::vector<HcResult> column;
    for (const auto& pc : per_config) column.push_back(pc[k]);
    out.push_back(combine_transfer(column));
  }
  return out;
}

struct DiffRow {
  std::string section_id;
  double hc_opflex_kw = 0.0;
  double hc_transfer_kw = 0.0;
  double diff_kw = 0.0;
};

struct DiffReport {
  std::vector<DiffRow> rows;
  std::map<std::string, double> by_feeder;       // sum of diff per feeder
  std::map<std::string, double> by_phase_class;  // "3ph" / "1-2ph"
  double total = 0.0;
  int positive = 0;
  int negative = 0;
};

/// Feeder that serves a section in the base configuration.
inline std::string section_feeder(const EnergizedView& base_view, int section) {
  int node = base_view.network().to_index(section);
  int src = base_view.source_of(node);
  return src < 0 ? std::string() : base_view.network().sources()[src].feeder_id;
}

/// Per-section OpFlex minus transfer flat HC, with feeder and phase-class sums.
inline DiffReport opflex_vs_transfer_diff(const Network& net, const std::vector<HcResult>& opflex,
                                          const std::vector<HcResult>& transfer) {
  std::map<std::string, double> t_by_id;
  for (const auto& r : transfer) t_by_id[r.section_id] = r.flat_kw;
  std::set<std::string> o_ids;
  for (const auto& r : opflex) o_ids.insert(r.section_id);

  std::vector<std::string> mismatched;
  for (const auto& r : opflex)
    if (!t_by_id.count(r.section_id)) mismatched.push_back(r.section_id);
  for (const auto& [id, v] : t_by_id)
    if (!o_ids.count(id)) mismatched.push_back(id);
  if (!mismatched.empty()) {
    std::string msg = "diff: section sets differ:";
    for (const auto& id : mismatched) msg += " " + id;
    throw ConfigError(msg);
  }

  auto base_view = apply_configuration(net, net.base_configuration());
  DiffReport rep;
  for (const auto& r : opflex) {
    DiffRow row{r.section_id, r.flat_kw, t_by_id[r.section_id], r.flat_kw - t_by_id[r.section_id]};
    int s = net.section_index(r.section_id);
    rep.by_feeder[section_feeder(base_view, s)] += row.diff_kw;
    rep.by_phase_class[to_string(phase_class_of(net.sections()[s]))] += row.diff_kw;
    rep.total += row.diff_kw;
    if (row.diff_kw > 0) rep.positive++;
    if (row.diff_kw < 0) rep.negative++;
    rep.rows.push_back(row);
  }
  return rep;
}

struct ExpectedOutcome {
  double expectation = 0.0;         // sum of p_c * HC_c
  double chance_constrained = 0.0;  // largest X met with probability >= 1 - epsilon
};

/// Probability-weighted statistics over (probability, HC) pairs.
inline ExpectedOutcome expected_outcome_stats(const std::vector<std::pair<double, double>>& outcomes, double epsilon) {
  if (outcomes.empty()) throw ConfigError("expected outcome: no configurations");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("expected outcome: epsilon must lie in [0, 1)");
  double psum = 0.0;
  for (const auto& [p, hc] : outcomes) {
    if (p < 0.0) throw ConfigError("expected outcome: negative probability");
    psum += p;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw ConfigError("expected outcome: probabilities sum to " + fmt_fixed(psum, 12) + ", not 1");

  ExpectedOutcome out;
  for (const auto& [p, hc] : outcomes) out.expectation += p * hc;

  auto sorted = outcomes;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  double covered = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    covered += sorted[i].first;
    // Tied HC values are admitted together.
    if (i + 1 < sorted.size() && sorted[i + 1].second == sorted[i].second) continue;
    if (covered >= 1.0 - epsilon - 1e-12) {
      out.chance_constrained = sorted[i].second;
      return out;
    }
  }
  out.chance_constrained = sorted.back().second;
  return out;
}

/// Expected-outcome HC of one section: per-configuration HC over the mean
/// weekday/weekend days, then both probability statistics. A configuration
/// that de-energizes the section contributes 0 kW.
inline ExpectedOutcome expected_outcome_hc(const Network& net, int section, const std::vector<Configuration>& configs,
                                           const std::vector<Snapshot>& mean_days, const CriteriaRegime& regime,
                                           double epsilon, const HcOptions& opt = {}) {
  double psum = 0.0;
  for (const auto& c : configs) psum += c.probability;
  if (std::abs(psum - 1.0) > 1e-9)
    throw ConfigError("expected outcome: configuration probabilities sum to " + fmt_fixed(psum, 12) + ", not 1");
  std::vector<std::pair<double, double>> outcomes;
  for (const auto& c : configs) {
    auto view = apply_configuration(net, c);
    double hc = 0.0;
    if (view.section_energized(section)) {
      auto r = hc_profiles(view, {section}, mean_days, regime, HcKind::generation, "", opt).front();
      hc = r.flat_kw;
    }
    outcomes.emplace_back(c.probability, hc);
  }
  return expected_outcome_stats(outcomes, epsilon);
}

struct LoadCensus {
  std::string configuration_id;
  std::vector<std::pair<std::string, double>> hc_kw;  // per study section
  int zero_count = 0;
  std::map<int, int> histogram;  // bin index (bin_kw wide) -> sections
};

/// Flat load HC of every study section at a peak-demand snapshot under each
/// configuration. Sections de-energized by a configuration count as zero.
inline std::vector<LoadCensus> load_hc_census(const Network& net, const std::vector<Configuration>& configs,
                                              const std::vector<int>& sections, const Snapshot& peak,
                                              const CriteriaRegime& regime, const HcOptions& opt = {},
                                              double bin_kw = 500.0, unsigned threads = 1) {
  std::vector<LoadCensus> out;
  for (const auto& c : configs) {
    auto view = apply_configuration(net, c);
    auto results = hc_profiles(view, sections, {peak}, regime, HcKind::load, "", opt, threads);
    LoadCensus census;
    census.configuration_id = c.id;
    for (const auto& r : results) {
      double v = r.profile.front().energized ? r.flat_kw : 0.0;
      census.hc_kw.emplace_back(r.section_id, v);
      if (v <= 0.0) census.zero_count++;
      census.histogram[static_cast<int>(std::floor(v / bin_kw))]++;
    }
    out.push_back(std::move(census));
  }
  return out;
}

}  // namespace hcap
