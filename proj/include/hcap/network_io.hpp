#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "network.hpp"

namespace hcap {

inline constexpr int kFeederSchemaVersion = 1;

namespace detail {

using json = nlohmann::json;

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

inline const json& array_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) throw ConfigError(std::string("feeder file: '") + key + "' must be an array");
  return *it;
}

/// Parse with a line-anchored error message.
inline json parse_json(std::istream& in, const std::string& what) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1 + std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n');
    throw ConfigError(what + ":" + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace detail

/// Feeder file: `schema_version` plus arrays `nodes`, `sections`, `switches`,
/// `sources`, `loads` and `configurations`.
inline Network network_from_json(const nlohmann::json& doc) {
  using detail::field;
  using detail::field_or;
  if (!doc.is_object()) throw ConfigError("feeder file: top level must be an object");
  int version = field<int>(doc, "schema_version", "feeder file");
  if (version != kFeederSchemaVersion)
    throw ConfigError("feeder file: unsupported schema_version " + std::to_string(version));

  std::vector<Node> nodes;
  const auto& jn = detail::array_field(doc, "nodes");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    std::string w = "nodes[" + std::to_string(i) + "]";
    nodes.push_back(Node{field<std::string>(jn[i], "id", w), Phases::parse(field<std::string>(jn[i], "phases", w)),
                         field_or<double>(jn[i], "distance_from_source", 0.0, w),
                         field_or<double>(jn[i], "nominal_voltage", 7200.0, w)});
  }
  std::vector<Section> sections;
  const auto& js = detail::array_field(doc, "sections");
  for (std::size_t i = 0; i < js.size(); ++i) {
    std::string w = "sections[" + std::to_string(i) + "]";
    const auto& s = js[i];
    Complex z{0.0, 0.0};
    if (s.contains("impedance")) {
      const auto& zj = s.at("impedance");
      z = {field<double>(zj, "r", w + ".impedance"), field<double>(zj, "x", w + ".impedance")};
    }
    sections.push_back(Section{field<std::string>(s, "id", w), field<std::string>(s, "from_node", w),
                               field<std::string>(s, "to_node", w), Phases::parse(field<std::string>(s, "phases", w)), z,
                               field_or<double>(s, "length", 0.0, w), field<double>(s, "thermal_rating", w)});
  }
  std::vector<Switch> switches;
  for (const auto& [i, s] : detail::array_field(doc, "switches").items()) {
    std::string w = "switches[" + i + "]";
    switches.push_back(Switch{field<std::string>(s, "id", w), field<std::string>(s, "section_id", w),
                              field_or<bool>(s, "scada_controlled", false, w), field_or<bool>(s, "normally_open", false, w),
                              field_or<bool>(s, "switching_block_boundary", false, w)});
  }
  std::vector<SourceBus> sources;
  for (const auto& [i, s] : detail::array_field(doc, "sources").items()) {
    std::string w = "sources[" + i + "]";
    sources.push_back(SourceBus{field<std::string>(s, "node_id", w), field_or<double>(s, "voltage_setpoint", 1.0, w),
                                field<std::string>(s, "feeder_id", w), field<std::string>(s, "head_section_id", w)});
  }
  std::vector<LoadPoint> loads;
  for (const auto& [i, s] : detail::array_field(doc, "loads").items()) {
    std::string w = "loads[" + i + "]";
    loads.push_back(LoadPoint{field<std::string>(s, "node_id", w), field<double>(s, "peak_kw", w),
                              field_or<double>(s, "power_factor", 1.0, w), field_or<std::string>(s, "profile_id", "", w),
                              field_or<int>(s, "customer_count", 0, w)});
  }
  std::vector<Configuration> configs;
  if (doc.contains("configurations"))
    for (const auto& [i, s] : detail::array_field(doc, "configurations").items()) {
      std::string w = "configurations[" + i + "]";
      configs.push_back(Configuration{field<std::string>(s, "id", w),
                                      field_or<std::vector<std::string>>(s, "open_switches", {}, w),
                                      field_or<std::vector<std::string>>(s, "closed_switches", {}, w),
                                      field_or<double>(s, "probability", 0.0, w)});
    }
  auto feeders = field_or<std::vector<std::string>>(doc, "feeder_ids", {}, "feeder file");
  return Network(std::move(nodes), std::move(sections), std::move(switches), std::move(sources), std::move(loads),
                 std::move(feeders), std::move(configs));
}

inline nlohmann::json network_to_json(const Network& net) {
  using json = nlohmann::json;
  json doc;
  doc["schema_version"] = kFeederSchemaVersion;
  doc["feeder_ids"] = net.feeder_ids();
  json nodes = json::array();
  for (const auto& n : net.nodes())
    nodes.push_back({{"id", n.id}, {"phases", n.phases.str()}, {"distance_from_source", n.distance_from_source},
                     {"nominal_voltage", n.nominal_voltage}});
  doc["nodes"] = std::move(nodes);
  json sections = json::array();
  for (const auto& s : net.sections())
    sections.push_back({{"id", s.id},
                        {"from_node", s.from_node},
                        {"to_node", s.to_node},
                        {"phases", s.phases.str()},
                        {"impedance", {{"r", s.impedance.real()}, {"x", s.impedance.imag()}}},
                        {"length", s.length},
                        {"thermal_rating", s.thermal_rating}});
  doc["sections"] = std::move(sections);
  json switches = json::array();
  for (const auto& s : net.switches())
    switches.push_back({{"id", s.id},
                        {"section_id", s.section_id},
                        {"scada_controlled", s.scada_controlled},
                        {"normally_open", s.normally_open},
                        {"switching_block_boundary", s.switching_block_boundary}});
  doc["switches"] = std::move(switches);
  json sources = json::array();
  for (const auto& s : net.sources())
    sources.push_back({{"node_id", s.node_id},
                       {"voltage_setpoint", s.voltage_setpoint},
                       {"feeder_id", s.feeder_id},
                       {"head_section_id", s.head_section_id}});
  doc["sources"] = std::move(sources);
  json loads = json::array();
  for (const auto& l : net.loads())
    loads.push_back({{"node_id", l.node_id},
                     {"peak_kw", l.peak_kw},
                     {"power_factor", l.power_factor},
                     {"profile_id", l.profile_id},
                     {"customer_count", l.customer_count}});
  doc["loads"] = std::move(loads);
  json configs = json::array();
  for (const auto& c : net.configurations())
    configs.push_back({{"id", c.id},
                       {"open_switches", c.open_switches},
                       {"closed_switches", c.closed_switches},
                       {"probability", c.probability}});
  doc["configurations"] = std::move(configs);
  return doc;
}

inline Network read_network(std::istream& in, const std::string& name = "feeder file") {
  return network_from_json(detail::parse_json(in, name));
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feeder file '" + path + "'");
  return read_network(in, path);
}

inline void write_network(std::ostream& os, const Network& net) { os << network_to_json(net).dump(1) << '\n'; }

}  // namespace hcap
