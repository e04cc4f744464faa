#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "common.hpp"

namespace hcap {

struct Node {
  std::string id;
  Phases phases{Phases::kAll};
  double distance_from_source = 0.0;  // miles
  double nominal_voltage = 7200.0;    // volts, line-to-ground
};

struct Section {
  std::string id;
  std::string from_node;
  std::string to_node;
  Phases phases{Phases::kAll};
  Complex impedance{0.0, 0.0};  // series ohms per phase
  double length = 0.0;          // miles
  double thermal_rating = 1.0;  // amperes per phase
};

struct Switch {
  std::string id;
  std::string section_id;
  bool scada_controlled = false;
  bool normally_open = false;
  bool switching_block_boundary = false;

  /// SCADA switches that bound a transfer block or tie two feeders.
  bool is_transfer_device() const { return scada_controlled && (switching_block_boundary || normally_open); }
};

struct SourceBus {
  std::string node_id;
  double voltage_setpoint = 1.0;  // per-unit
  std::string feeder_id;
  std::string head_section_id;
};

struct LoadPoint {
  std::string node_id;
  double peak_kw = 0.0;
  double power_factor = 1.0;
  std::string profile_id;
  int customer_count = 0;

  double peak_kvar() const {
    return peak_kw * std::sqrt(std::max(0.0, 1.0 - power_factor * power_factor)) / power_factor;
  }
  double peak_kva() const { return peak_kw / power_factor; }
};

struct Configuration {
  std::string id;
  std::vector<std::string> open_switches;
  std::vector<std::string> closed_switches;
  double probability = 1.0;
};

inline const std::string kBaseConfigurationId = "base";

class Network;

struct Diagnostic {
  enum class Kind { loop, island };
  Kind kind;
  std::string element;
  std::string message;
};

struct RadialityReport {
  bool radial = true;
  std::vector<Diagnostic> diagnostics;

  bool has(Diagnostic::Kind k) const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [k](const Diagnostic& d) { return d.kind == k; });
  }
};

/// Raised when a configuration does not leave the network radial.
class RadialityError : public ConfigError {
 public:
  RadialityError(const std::string& config_id, std::vector<Diagnostic> diags)
      : ConfigError(describe(config_id, diags)), diagnostics_(std::move(diags)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string describe(const std::string& id, const std::vector<Diagnostic>& diags) {
    std::string msg = "configuration '" + id + "' is not radial";
    for (const auto& d : diags)
      if (d.kind == Diagnostic::Kind::loop) msg += "; " + d.message;
    return msg;
  }
  std::vector<Diagnostic> diagnostics_;
};

RadialityReport validate_radiality(const Network& network, const Configuration& config);

/// Radial multi-feeder distribution network. Immutable once constructed; all
/// cross references are resolved to dense indices at construction.
class Network {
 public:
  Network() = default;

  Network(std::vector<Node> nodes, std::vector<Section> sections, std::vector<Switch> switches,
          std::vector<SourceBus> sources, std::vector<LoadPoint> loads, std::vector<std::string> feeder_ids,
          std::vector<Configuration> configurations = {})
      : nodes_(std::move(nodes)),
        sections_(std::move(sections)),
        switches_(std::move(switches)),
        sources_(std::move(sources)),
        loads_(std::move(loads)),
        feeder_ids_(std::move(feeder_ids)),
        configurations_(std::move(configurations)) {
    index_and_validate();
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Section>& sections() const { return sections_; }
  const std::vector<Switch>& switches() const { return switches_; }
  const std::vector<SourceBus>& sources() const { return sources_; }
  const std::vector<LoadPoint>& loads() const { return loads_; }
  const std::vector<std::string>& feeder_ids() const { return feeder_ids_; }
  const std::vector<Configuration>& configurations() const { return configurations_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t section_count() const { return sections_.size(); }

  int node_index(const std::string& id) const { return lookup(node_idx_, id, "node"); }
  int section_index(const std::string& id) const { return lookup(section_idx_, id, "section"); }
  int switch_index(const std::string& id) const { return lookup(switch_idx_, id, "switch"); }
  std::optional<int> find_switch(const std::string& id) const {
    auto it = switch_idx_.find(id);
    return it == switch_idx_.end() ? std::nullopt : std::optional<int>(it->second);
  }

  int from_index(int section) const { return section_from_[section]; }
  int to_index(int section) const { return section_to_[section]; }
  /// Switch on the section, or -1.
  int switch_on_section(int section) const { return section_switch_[section]; }
  int source_node_index(int source) const { return source_node_[source]; }
  int source_head_section(int source) const { return source_head_[source]; }
  /// Sections incident to a node.
  const std::vector<int>& incident(int node) const { return incident_[node]; }
  /// Indices into loads() attached to a node.
  const std::vector<int>& loads_at(int node) const { return node_loads_[node]; }
  int load_node_index(int load) const { return load_node_[load]; }

  Configuration base_configuration() const {
    for (const auto& c : configurations_)
      if (c.id == kBaseConfigurationId) return c;
    return Configuration{kBaseConfigurationId, {}, {}, 1.0};
  }

  const Configuration& configuration(const std::string& id) const {
    for (const auto& c : configurations_)
      if (c.id == id) return c;
    throw ConfigError("unknown configuration '" + id + "'");
  }

  Network with_configurations(std::vector<Configuration> configs) const {
    Network copy = *this;
    copy.configurations_ = std::move(configs);
    return copy;
  }

  double total_peak_kw() const {
    return std::accumulate(loads_.begin(), loads_.end(), 0.0, [](double a, const LoadPoint& l) { return a + l.peak_kw; });
  }

  /// Closed/open state of every section's switch under a configuration;
  /// sections without a switch are always closed.
  std::vector<char> closed_sections(const Configuration& config) const {
    std::vector<char> sw_open(switches_.size());
    for (std::size_t i = 0; i < switches_.size(); ++i) sw_open[i] = switches_[i].normally_open;
    for (const auto& id : config.open_switches) {
      auto idx = find_switch(id);
      if (!idx) throw ConfigError("configuration '" + config.id + "': unknown switch id '" + id + "'");
      sw_open[*idx] = 1;
    }
    for (const auto& id : config.closed_switches) {
      auto idx = find_switch(id);
      if (!idx) throw ConfigError("configuration '" + config.id + "': unknown switch id '" + id + "'");
      if (std::find(config.open_switches.begin(), config.open_switches.end(), id) != config.open_switches.end())
        throw ConfigError("configuration '" + config.id + "': switch '" + id + "' listed as both open and closed");
      sw_open[*idx] = 0;
    }
    std::vector<char> closed(sections_.size(), 1);
    for (std::size_t i = 0; i < switches_.size(); ++i)
      if (sw_open[i]) closed[switch_section_[i]] = 0;
    return closed;
  }

  int switch_section_index(int sw) const { return switch_section_[sw]; }

 private:
  static int lookup(const std::unordered_map<std::string, int>& m, const std::string& id, const char* what) {
    auto it = m.find(id);
    if (it == m.end()) throw ConfigError(std::string("unknown ") + what + " id '" + id + "'");
    return it->second;
  }

  template <typename T>
  static std::unordered_map<std::string, int> build_index(const std::vector<T>& items, const char* what) {
    std::unordered_map<std::string, int> m;
    m.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].id.empty()) throw ConfigError(std::string(what) + "[" + std::to_string(i) + "]: empty id");
      if (!m.emplace(items[i].id, static_cast<int>(i)).second)
        throw ConfigError(std::string("duplicate ") + what + " id '" + items[i].id + "'");
    }
    return m;
  }

  void index_and_validate() {
    node_idx_ = build_index(nodes_, "node");
    section_idx_ = build_index(sections_, "section");
    switch_idx_ = build_index(switches_, "switch");

    for (const auto& n : nodes_) {
      if (n.phases.empty()) throw ConfigError("node '" + n.id + "': phases must be nonempty");
      if (!(n.distance_from_source >= 0.0)) throw ConfigError("node '" + n.id + "': distance_from_source must be >= 0");
      if (!(n.nominal_voltage > 0.0)) throw ConfigError("node '" + n.id + "': nominal_voltage must be > 0");
    }

    incident_.assign(nodes_.size(), {});
    section_from_.resize(sections_.size());
    section_to_.resize(sections_.size());
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const auto& s = sections_[i];
      auto f = node_idx_.find(s.from_node), t = node_idx_.find(s.to_node);
      if (f == node_idx_.end()) throw ConfigError("section '" + s.id + "': unknown from_node '" + s.from_node + "'");
      if (t == node_idx_.end()) throw ConfigError("section '" + s.id + "': unknown to_node '" + s.to_node + "'");
      if (f->second == t->second) throw ConfigError("section '" + s.id + "': from_node equals to_node");
      if (!(s.thermal_rating > 0.0)) throw ConfigError("section '" + s.id + "': thermal_rating must be > 0");
      if (!(s.length >= 0.0)) throw ConfigError("section '" + s.id + "': length must be >= 0");
      if (s.phases.empty()) throw ConfigError("section '" + s.id + "': phases must be nonempty");
      if (!s.phases.subset_of(nodes_[f->second].phases) || !s.phases.subset_of(nodes_[t->second].phases))
        throw ConfigError("section '" + s.id + "': phases " + s.phases.str() + " not present at both endpoints");
      section_from_[i] = f->second;
      section_to_[i] = t->second;
      incident_[f->second].push_back(static_cast<int>(i));
      incident_[t->second].push_back(static_cast<int>(i));
    }

    section_switch_.assign(sections_.size(), -1);
    switch_section_.resize(switches_.size());
    for (std::size_t i = 0; i < switches_.size(); ++i) {
      const auto& sw = switches_[i];
      int s = lookup_or(section_idx_, sw.section_id, "switch '" + sw.id + "': unknown section '" + sw.section_id + "'");
      if (section_switch_[s] != -1) throw ConfigError("section '" + sw.section_id + "' carries more than one switch");
      section_switch_[s] = static_cast<int>(i);
      switch_section_[i] = s;
    }

    source_node_.resize(sources_.size());
    source_head_.resize(sources_.size());
    std::set<int> source_nodes;
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      const auto& src = sources_[i];
      int n = lookup_or(node_idx_, src.node_id, "source: unknown node '" + src.node_id + "'");
      if (!source_nodes.insert(n).second) throw ConfigError("node '" + src.node_id + "' hosts more than one source");
      if (src.voltage_setpoint < 0.9 || src.voltage_setpoint > 1.1)
        throw ConfigError("source at '" + src.node_id + "': voltage_setpoint must be within [0.9, 1.1] pu");
      int h = lookup_or(section_idx_, src.head_section_id,
                        "source at '" + src.node_id + "': unknown head_section '" + src.head_section_id + "'");
      if (section_from_[h] != n && section_to_[h] != n)
        throw ConfigError("source at '" + src.node_id + "': head section '" + src.head_section_id +
                          "' is not incident to the source node");
      if (std::find(feeder_ids_.begin(), feeder_ids_.end(), src.feeder_id) == feeder_ids_.end())
        feeder_ids_.push_back(src.feeder_id);
      source_node_[i] = n;
      source_head_[i] = h;
    }

    node_loads_.assign(nodes_.size(), {});
    load_node_.resize(loads_.size());
    for (std::size_t i = 0; i < loads_.size(); ++i) {
      const auto& l = loads_[i];
      int n = lookup_or(node_idx_, l.node_id, "load: unknown node '" + l.node_id + "'");
      if (!(l.peak_kw >= 0.0)) throw ConfigError("load at '" + l.node_id + "': peak_kw must be >= 0");
      if (!(l.power_factor > 0.0 && l.power_factor <= 1.0))
        throw ConfigError("load at '" + l.node_id + "': power_factor must be in (0, 1]");
      if (l.customer_count < 0) throw ConfigError("load at '" + l.node_id + "': customer_count must be >= 0");
      node_loads_[n].push_back(static_cast<int>(i));
      load_node_[i] = n;
    }

    std::set<std::string> config_ids;
    for (const auto& c : configurations_) {
      if (!config_ids.insert(c.id).second) throw ConfigError("duplicate configuration id '" + c.id + "'");
      if (c.probability < 0.0 || c.probability > 1.0)
        throw ConfigError("configuration '" + c.id + "': probability must be within [0, 1]");
    }

    auto base = validate_radiality(*this, base_configuration());
    if (!base.radial) throw RadialityError(kBaseConfigurationId, base.diagnostics);
  }

  static int lookup_or(const std::unordered_map<std::string, int>& m, const std::string& id, const std::string& err) {
    auto it = m.find(id);
    if (it == m.end()) throw ConfigError(err);
    return it->second;
  }

  std::vector<Node> nodes_;
  std::vector<Section> sections_;
  std::vector<Switch> switches_;
  std::vector<SourceBus> sources_;
  std::vector<LoadPoint> loads_;
  std::vector<std::string> feeder_ids_;
  std::vector<Configuration> configurations_;

  std::unordered_map<std::string, int> node_idx_, section_idx_, switch_idx_;
  std::vector<int> section_from_, section_to_, section_switch_, switch_section_;
  std::vector<int> source_node_, source_head_;
  std::vector<std::vector<int>> incident_, node_loads_;
  std::vector<int> load_node_;
};

/// Union-find check: every closed section either joins two distinct trees or
/// closes a loop; a component holding two sources is a multi-source path.
inline RadialityReport validate_radiality(const Network& network, const Configuration& config) {
  const auto closed = network.closed_sections(config);
  const std::size_t n = network.node_count();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> sources_in(n, 0);
  for (std::size_t s = 0; s < network.sources().size(); ++s) sources_in[network.source_node_index(static_cast<int>(s))]++;

  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  RadialityReport report;
  for (std::size_t s = 0; s < network.section_count(); ++s) {
    if (!closed[s]) continue;
    int a = find(network.from_index(static_cast<int>(s)));
    int b = find(network.to_index(static_cast<int>(s)));
    const auto& sid = network.sections()[s].id;
    if (a == b) {
      report.radial = false;
      report.diagnostics.push_back({Diagnostic::Kind::loop, sid, "loop closed by section '" + sid + "'"});
      continue;
    }
    if (sources_in[a] > 0 && sources_in[b] > 0) {
      report.radial = false;
      report.diagnostics.push_back(
          {Diagnostic::Kind::loop, sid, "loop: section '" + sid + "' joins two energized sources"});
    }
    parent[b] = a;
    sources_in[a] += sources_in[b];
  }

  std::map<int, std::pair<int, int>> islands;  // root -> (first node, size)
  for (std::size_t v = 0; v < n; ++v) {
    int r = find(static_cast<int>(v));
    if (sources_in[r] > 0) continue;
    auto [it, inserted] = islands.try_emplace(r, static_cast<int>(v), 0);
    it->second.second++;
  }
  for (const auto& [root, info] : islands) {
    const auto& id = network.nodes()[info.first].id;
    report.diagnostics.push_back({Diagnostic::Kind::island, id,
                                  "island of " + std::to_string(info.second) + " de-energized node(s) containing '" +
                                      id + "'"});
  }
  return report;
}

/// Read-only derivation of a network under one configuration: which source
/// serves each node, the upstream path, and a root-first ordering per tree.
/// Holds a pointer to the network, which must outlive the view.
class EnergizedView {
 public:
  const Network& network() const { return *network_; }
  const Configuration& configuration() const { return config_; }
  const std::string& configuration_id() const { return config_.id; }

  bool energized(int node) const { return node_source_[node] >= 0; }
  /// Index into network().sources(), or -1 when de-energized.
  int source_of(int node) const { return node_source_[node]; }
  int parent_section(int node) const { return parent_section_[node]; }
  int parent_node(int node) const { return parent_node_[node]; }
  Phases node_phases(int node) const { return node_phases_[node]; }

  bool section_closed(int section) const { return closed_[section] != 0; }
  bool section_energized(int section) const { return downstream_[section] >= 0; }
  /// Node on the load side of an energized section, -1 otherwise.
  int downstream_node(int section) const { return downstream_[section]; }
  int upstream_node(int section) const {
    int d = downstream_[section];
    return d < 0 ? -1 : parent_node_[d];
  }

  /// Nodes of one source tree, source first, parents before children.
  const std::vector<int>& tree(int source) const { return trees_[source]; }
  std::size_t tree_count() const { return trees_.size(); }

  /// Sections from a node up to its source, nearest first.
  std::vector<int> upstream_path(int node) const {
    std::vector<int> path;
    for (int v = node; v >= 0 && parent_section_[v] >= 0; v = parent_node_[v]) path.push_back(parent_section_[v]);
    return path;
  }

  /// Loads downstream of (and including) a node, in kW of peak demand.
  double downstream_peak_kw(int node) const {
    double total = 0.0;
    for (int v : subtree(node))
      for (int l : network_->loads_at(v)) total += network_->loads()[l].peak_kw;
    return total;
  }

  std::vector<int> subtree(int node) const {
    std::vector<int> out;
    if (!energized(node)) return out;
    const auto& order = trees_[node_source_[node]];
    std::vector<char> in(network_->node_count(), 0);
    in[node] = 1;
    out.push_back(node);
    for (int v : order) {
      if (v == node || parent_node_[v] < 0) continue;
      if (in[parent_node_[v]]) {
        in[v] = 1;
        out.push_back(v);
      }
    }
    return out;
  }

  friend EnergizedView apply_configuration(const Network& network, const Configuration& config);

 private:
  const Network* network_ = nullptr;
  Configuration config_;
  std::vector<char> closed_;
  std::vector<int> node_source_, parent_section_, parent_node_, downstream_;
  std::vector<Phases> node_phases_;
  std::vector<std::vector<int>> trees_;
};

inline EnergizedView apply_configuration(const Network& network, const Configuration& config) {
  auto report = validate_radiality(network, config);
  if (!report.radial) throw RadialityError(config.id, report.diagnostics);

  EnergizedView view;
  view.network_ = &network;
  view.config_ = config;
  view.closed_ = network.closed_sections(config);
  const std::size_t n = network.node_count();
  view.node_source_.assign(n, -1);
  view.parent_section_.assign(n, -1);
  view.parent_node_.assign(n, -1);
  view.node_phases_.assign(n, Phases{});
  view.downstream_.assign(network.section_count(), -1);
  view.trees_.assign(network.sources().size(), {});

  for (std::size_t src = 0; src < network.sources().size(); ++src) {
    int root = network.source_node_index(static_cast<int>(src));
    auto& order = view.trees_[src];
    view.node_source_[root] = static_cast<int>(src);
    view.node_phases_[root] = network.nodes()[root].phases;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (int s : network.incident(v)) {
        if (!view.closed_[s] || s == view.parent_section_[v]) continue;
        int w = network.from_index(s) == v ? network.to_index(s) : network.from_index(s);
        if (view.node_source_[w] >= 0) continue;
        view.node_source_[w] = static_cast<int>(src);
        view.parent_section_[w] = s;
        view.parent_node_[w] = v;
        view.node_phases_[w] = network.sections()[s].phases & view.node_phases_[v];
        view.downstream_[s] = w;
        queue.push_back(w);
      }
    }
  }
  return view;
}

enum class PhaseClass { three_phase, one_two_phase };

inline PhaseClass phase_class_of(const Section& s) {
  return s.phases.count() == 3 ? PhaseClass::three_phase : PhaseClass::one_two_phase;
}

inline const char* to_string(PhaseClass c) { return c == PhaseClass::three_phase ? "3ph" : "1-2ph"; }

/// Buckets energized (base configuration) sections of one phase class by the
/// distance of their to_node. Bucket k holds [k*width, (k+1)*width).
inline std::map<int, std::vector<std::string>> sections_by_distance(const Network& network, double bucket_miles,
                                                                    PhaseClass phase_class) {
  if (!(bucket_miles > 0.0)) throw ConfigError("bucket width must be > 0");
  auto view = apply_configuration(network, network.base_configuration());
  std::map<int, std::vector<std::string>> buckets;
  for (std::size_t s = 0; s < network.section_count(); ++s) {
    const auto& sec = network.sections()[s];
    if (!view.section_energized(static_cast<int>(s)) || phase_class_of(sec) != phase_class) continue;
    double d = network.nodes()[network.to_index(static_cast<int>(s))].distance_from_source;
    buckets[static_cast<int>(std::floor(d / bucket_miles))].push_back(sec.id);
  }
  return buckets;
}

}  // namespace hcap
