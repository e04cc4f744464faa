#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "network_io.hpp"
#include "reconfiguration.hpp"
#include "synthetic.hpp"

namespace hcap {

enum class StudyMode { flat, profile };

inline const char* to_string(StudyMode m) { return m == StudyMode::flat ? "flat" : "profile"; }

/// Declarative description of a study run.
struct StudyConfig {
  std::filesystem::path base_dir = ".";  // relative paths resolve here

  std::optional<std::filesystem::path> network_path;
  bool synthetic_pair = false;
  FeederSpec pair_a = feeder_f1_spec();
  FeederSpec pair_b = feeder_f2_spec();
  double tie_miles = 0.5;

  std::optional<std::filesystem::path> profiles_path;
  std::optional<std::filesystem::path> pv_shapes_path;
  std::optional<std::filesystem::path> ev_templates_path;

  std::vector<PenetrationScenario> scenarios;
  std::vector<std::string> regimes{"opflex", "transfer_study"};
  std::vector<std::string> configurations;  // empty = all
  StudyMode mode = StudyMode::flat;
  std::vector<HcKind> kinds{HcKind::generation, HcKind::load};
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned threads = 0;  // 0 = hardware concurrency
  EvFleetSpec fleet;
  double pv_residential_kw = 2.5;
  double pv_commercial_kw = 30.0;
  HcOptions hc;
  TransferProbabilities transfer_probabilities;
  std::optional<double> expected_outcome_epsilon;
  std::vector<std::string> expected_outcome_sections;  // empty = all study sections
  std::uint64_t config_hash = 0;
};

namespace detail {

// 1-based line of the first occurrence of "key" in the raw text, or 0.
inline int key_line(const std::string& text, const std::string& key) {
  auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

class ConfigReader {
 public:
  ConfigReader(std::string text, std::string name) : text_(std::move(text)), name_(std::move(name)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    int line = key_line(text_, key);
    throw ConfigError(name_ + ":" + (line > 0 ? std::to_string(line) + ":" : std::string()) + " " + key + ": " + msg);
  }

  template <typename T>
  T get(const nlohmann::json& obj, const std::string& key) const {
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(key, e.what());
    }
  }

  template <typename T>
  T get_or(const nlohmann::json& obj, const std::string& key, T fallback) const {
    return obj.contains(key) ? get<T>(obj, key) : fallback;
  }

  void only(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) const {
    if (!obj.is_object()) fail(where, "must be an object");
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) fail(k, "unknown key in " + where);
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::string name_;
};

inline void read_feeder_spec(const ConfigReader& r, const nlohmann::json& j, FeederSpec& s) {
  r.only(j, {"name", "sections", "peak_mw", "min_mw", "conductor_miles", "customers", "three_phase_fraction",
             "nominal_kv_ll", "source_setpoint_pu", "switching_blocks", "seed"},
         "feeder spec");
  s.name = r.get_or<std::string>(j, "name", s.name);
  s.sections = r.get_or<int>(j, "sections", s.sections);
  s.peak_mw = r.get_or<double>(j, "peak_mw", s.peak_mw);
  s.min_mw = r.get_or<double>(j, "min_mw", s.min_mw);
  s.conductor_miles = r.get_or<double>(j, "conductor_miles", s.conductor_miles);
  s.customers = r.get_or<int>(j, "customers", s.customers);
  s.three_phase_fraction = r.get_or<double>(j, "three_phase_fraction", s.three_phase_fraction);
  s.nominal_kv_ll = r.get_or<double>(j, "nominal_kv_ll", s.nominal_kv_ll);
  s.source_setpoint_pu = r.get_or<double>(j, "source_setpoint_pu", s.source_setpoint_pu);
  s.switching_blocks = r.get_or<int>(j, "switching_blocks", s.switching_blocks);
  s.seed = r.get_or<std::uint64_t>(j, "seed", s.seed);
}

inline void read_fleet(const ConfigReader& r, const nlohmann::json& j, EvFleetSpec& f) {
  r.only(j, {"daily_miles_by_month", "pct_bev", "pct_sedan", "l1_kw", "l2_kw", "dcfc_kw", "home_charging_access",
             "home_l1_share", "strategy", "kwh_per_mile"},
         "fleet");
  if (j.contains("daily_miles_by_month")) {
    auto miles = r.get<std::vector<double>>(j, "daily_miles_by_month");
    if (miles.size() != 12) r.fail("daily_miles_by_month", "expected 12 values");
    std::copy(miles.begin(), miles.end(), f.daily_miles_by_month.begin());
  }
  f.pct_bev = r.get_or<double>(j, "pct_bev", f.pct_bev);
  f.pct_sedan = r.get_or<double>(j, "pct_sedan", f.pct_sedan);
  f.l1_kw = r.get_or<double>(j, "l1_kw", f.l1_kw);
  f.l2_kw = r.get_or<double>(j, "l2_kw", f.l2_kw);
  f.dcfc_kw = r.get_or<double>(j, "dcfc_kw", f.dcfc_kw);
  f.home_charging_access = r.get_or<double>(j, "home_charging_access", f.home_charging_access);
  f.home_l1_share = r.get_or<double>(j, "home_l1_share", f.home_l1_share);
  f.kwh_per_mile = r.get_or<double>(j, "kwh_per_mile", f.kwh_per_mile);
  if (j.contains("strategy")) {
    auto s = r.get<std::string>(j, "strategy");
    if (s == "immediate") f.strategy = ChargingStrategy::immediate;
    else if (s == "delayed") f.strategy = ChargingStrategy::delayed;
    else r.fail("strategy", "expected immediate|delayed");
  }
  try {
    f.validate();
  } catch (const ConfigError& e) {
    r.fail("fleet", e.what());
  }
}

}  // namespace detail

/// Parses a run-config document. Errors carry the file name and the line of
/// the offending key.
inline StudyConfig parse_study_config(const std::string& text, const std::string& name = "study config",
                                      const std::filesystem::path& base_dir = ".") {
  std::istringstream in(text);
  auto doc = detail::parse_json(in, name);
  detail::ConfigReader r(text, name);
  r.only(doc,
         {"network", "synthetic_pair", "profiles", "pv_shapes", "ev_templates", "scenarios", "regimes",
          "configurations", "mode", "kinds", "seed", "output_dir", "threads", "fleet", "pv_ratings", "hc",
          "transfer_probability", "expected_outcome"},
         "run config");

  StudyConfig c;
  c.base_dir = base_dir;
  c.config_hash = fnv1a64(text);
  c.seed = r.get_or<std::uint64_t>(doc, "seed", c.seed);

  if (doc.contains("network") && doc.contains("synthetic_pair")) r.fail("network", "give either network or synthetic_pair");
  if (doc.contains("network")) {
    c.network_path = r.get<std::string>(doc, "network");
  } else if (doc.contains("synthetic_pair")) {
    c.synthetic_pair = true;
    const auto& sp = doc.at("synthetic_pair");
    if (!sp.is_boolean()) {
      r.only(sp, {"a", "b", "tie_miles"}, "synthetic_pair");
      if (sp.contains("a")) detail::read_feeder_spec(r, sp.at("a"), c.pair_a);
      if (sp.contains("b")) detail::read_feeder_spec(r, sp.at("b"), c.pair_b);
      c.tie_miles = r.get_or<double>(sp, "tie_miles", c.tie_miles);
    } else if (!sp.get<bool>()) {
      r.fail("synthetic_pair", "must be true or an object");
    }
  } else {
    r.fail("network", "missing; give network or synthetic_pair");
  }
  if (doc.contains("profiles")) c.profiles_path = r.get<std::string>(doc, "profiles");
  if (doc.contains("pv_shapes")) c.pv_shapes_path = r.get<std::string>(doc, "pv_shapes");
  if (doc.contains("ev_templates")) c.ev_templates_path = r.get<std::string>(doc, "ev_templates");

  if (doc.contains("scenarios")) {
    const auto& js = doc.at("scenarios");
    if (js.is_array()) {
      for (const auto& s : js) {
        r.only(s, {"pv", "ev", "seed"}, "scenarios");
        c.scenarios.push_back({r.get_or<double>(s, "pv", 0.0), r.get_or<double>(s, "ev", 0.0),
                               r.get_or<std::uint64_t>(s, "seed", c.seed)});
      }
    } else {
      r.only(js, {"pv_levels", "ev_levels"}, "scenarios");
      c.scenarios = penetration_matrix(r.get_or<std::vector<double>>(js, "pv_levels", {0.0, 0.2, 0.4}),
                                       r.get_or<std::vector<double>>(js, "ev_levels", {0.0, 0.2, 0.4}), c.seed);
    }
    std::set<std::string> ids;
    for (const auto& s : c.scenarios) {
      if (s.pv_level < 0.0 || s.pv_level > 1.0 || s.ev_level < 0.0 || s.ev_level > 1.0)
        r.fail("scenarios", "penetration levels must lie in [0, 1]");
      if (!ids.insert(s.id()).second) r.fail("scenarios", "duplicate scenario " + s.id());
    }
  } else {
    c.scenarios = penetration_matrix({0.0, 0.2, 0.4}, {0.0, 0.2, 0.4}, c.seed);
  }

  if (doc.contains("regimes")) {
    c.regimes = r.get<std::vector<std::string>>(doc, "regimes");
    for (auto& name : c.regimes) {
      try {
        name = regime_by_name(name).name;
      } catch (const ConfigError& e) {
        r.fail("regimes", e.what());
      }
    }
  }
  if (doc.contains("configurations")) {
    const auto& jc = doc.at("configurations");
    if (jc.is_string()) {
      if (jc.get<std::string>() != "all") r.fail("configurations", "expected \"all\" or a list of ids");
    } else {
      c.configurations = r.get<std::vector<std::string>>(doc, "configurations");
      if (c.configurations.empty()) r.fail("configurations", "list is empty");
    }
  }
  if (doc.contains("mode")) {
    auto m = r.get<std::string>(doc, "mode");
    if (m == "flat") c.mode = StudyMode::flat;
    else if (m == "profile") c.mode = StudyMode::profile;
    else r.fail("mode", "expected flat|profile");
  }
  if (doc.contains("kinds")) {
    c.kinds.clear();
    for (const auto& k : r.get<std::vector<std::string>>(doc, "kinds")) {
      try {
        c.kinds.push_back(parse_hc_kind(k));
      } catch (const ConfigError& e) {
        r.fail("kinds", e.what());
      }
    }
  }
  c.output_dir = r.get_or<std::string>(doc, "output_dir", "out");
  int threads = r.get_or<int>(doc, "threads", 0);
  if (threads < 0) r.fail("threads", "must be >= 0");
  c.threads = static_cast<unsigned>(threads);
  if (doc.contains("fleet")) detail::read_fleet(r, doc.at("fleet"), c.fleet);
  if (doc.contains("pv_ratings")) {
    const auto& pr = doc.at("pv_ratings");
    r.only(pr, {"residential_kw", "commercial_kw"}, "pv_ratings");
    c.pv_residential_kw = r.get_or<double>(pr, "residential_kw", c.pv_residential_kw);
    c.pv_commercial_kw = r.get_or<double>(pr, "commercial_kw", c.pv_commercial_kw);
    if (!(c.pv_residential_kw >= 0.0) || !(c.pv_commercial_kw >= 0.0)) r.fail("pv_ratings", "ratings must be >= 0");
  }
  if (doc.contains("hc")) {
    const auto& h = doc.at("hc");
    r.only(h, {"cap_multiple", "min_cap_kw", "monotonicity_guard", "volt_var"}, "hc");
    c.hc.cap_multiple = r.get_or<double>(h, "cap_multiple", c.hc.cap_multiple);
    c.hc.min_cap_kw = r.get_or<int>(h, "min_cap_kw", c.hc.min_cap_kw);
    c.hc.monotonicity_guard = r.get_or<bool>(h, "monotonicity_guard", c.hc.monotonicity_guard);
    c.hc.volt_var = r.get_or<bool>(h, "volt_var", c.hc.volt_var);
    if (!(c.hc.cap_multiple > 0.0) || c.hc.min_cap_kw < 1) r.fail("hc", "cap_multiple and min_cap_kw must be positive");
  }
  c.transfer_probabilities.per_transfer =
      r.get_or<double>(doc, "transfer_probability", c.transfer_probabilities.per_transfer);
  if (doc.contains("expected_outcome")) {
    const auto& eo = doc.at("expected_outcome");
    r.only(eo, {"epsilon", "sections"}, "expected_outcome");
    c.expected_outcome_epsilon = r.get_or<double>(eo, "epsilon", 0.05);
    if (!(*c.expected_outcome_epsilon >= 0.0 && *c.expected_outcome_epsilon < 1.0))
      r.fail("epsilon", "must lie in [0, 1)");
    c.expected_outcome_sections = r.get_or<std::vector<std::string>>(eo, "sections", {});
  }
  return c;
}

inline StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_study_config(text, path.string(), path.has_parent_path() ? path.parent_path() : ".");
}

/// Network, libraries and configuration list resolved from a run config.
struct StudyInputs {
  Network network;
  ScenarioLibraries libraries;
  std::vector<Configuration> configurations;  // base first
  std::vector<int> sections;                  // energized in the base configuration
};

namespace detail {

inline std::filesystem::path resolve(const StudyConfig& c, const std::filesystem::path& p) {
  return p.is_absolute() ? p : c.base_dir / p;
}

inline std::ifstream open_input(const std::filesystem::path& p, const std::string& what) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + what + " '" + p.string() + "'");
  return in;
}

}  // namespace detail

inline StudyInputs prepare_study(const StudyConfig& c) {
  std::optional<Network> net;
  ScenarioLibraries lib;
  if (c.synthetic_pair) {
    auto pair = generate_feeder_pair(c.pair_a, c.pair_b, c.tie_miles);
    net.emplace(std::move(pair.network));
    lib.load_shapes = std::move(pair.load_shapes);
  } else {
    net.emplace(load_network(detail::resolve(c, *c.network_path).string()));
  }
  if (c.profiles_path) {
    auto in = detail::open_input(detail::resolve(c, *c.profiles_path), "profiles file");
    lib.load_shapes.merge(read_profiles_csv(in, ProfileKind::load));
  }
  for (const auto& l : net->loads())
    if (!lib.load_shapes.contains(l.profile_id))
      throw ConfigError("load at node '" + l.node_id + "' references unknown profile '" + l.profile_id + "'");
  if (c.pv_shapes_path) {
    auto in = detail::open_input(detail::resolve(c, *c.pv_shapes_path), "PV shapes file");
    lib.pv.shapes = read_profiles_csv(in, ProfileKind::pv);
    if (!lib.pv.shapes.contains(lib.pv.shape_id)) throw ConfigError("PV shapes file has no profile 'pv'");
  }
  if (c.ev_templates_path) {
    auto in = detail::open_input(detail::resolve(c, *c.ev_templates_path), "EV templates file");
    lib.ev_templates = read_ev_templates_csv(in);
  }
  lib.fleet = c.fleet;
  lib.pv.residential_kw = c.pv_residential_kw;
  lib.pv.commercial_kw = c.pv_commercial_kw;

  // Stored configurations win; otherwise enumerate single-tie transfers.
  std::vector<Configuration> all;
  bool stored = false;
  for (const auto& cfg : net->configurations()) stored = stored || cfg.id != kBaseConfigurationId;
  if (stored) {
    all.push_back(net->base_configuration());
    all.front().id = kBaseConfigurationId;
    for (const auto& cfg : net->configurations())
      if (cfg.id != kBaseConfigurationId) all.push_back(cfg);
  } else {
    all = enumerate_configurations(*net, c.transfer_probabilities).configurations;
  }
  for (const auto& cfg : all) {
    auto rep = validate_radiality(*net, cfg);
    if (!rep.radial) throw RadialityError(cfg.id, rep.diagnostics);
  }
  std::vector<Configuration> chosen;
  if (c.configurations.empty()) {
    chosen = all;
  } else {
    for (const auto& id : c.configurations) {
      auto it = std::find_if(all.begin(), all.end(), [&](const Configuration& x) { return x.id == id; });
      if (it == all.end()) throw ConfigError("run config: unknown configuration '" + id + "'");
      chosen.push_back(*it);
    }
  }
  Network with = net->with_configurations(all);
  auto base_view = apply_configuration(with, with.base_configuration());
  auto sections = energized_sections(base_view);
  return StudyInputs{std::move(with), std::move(lib), std::move(chosen), std::move(sections)};
}

/// One (regime, configuration, scenario, kind) block of results.
struct StudyCell {
  std::string regime;
  std::string configuration;
  std::string scenario;
  HcKind kind = HcKind::generation;
};

struct StudySummary {
  std::vector<StudyCell> cells;
  std::vector<std::string> files;  // relative to the output directory
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read '" + p.string() + "'");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

inline std::string kw(double v) { return fmt_fixed(v, 0); }

inline std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : std::string()) + v[i];
  return out;
}

}  // namespace detail

inline constexpr const char* kResultsHeader = "section_id,kind,regime,config,scenario,interval,hc_kw,binding_criterion";
inline constexpr const char* kFlatHeader =
    "section_id,kind,regime,config,scenario,hc_kw,binding_criterion,interval,limiting_config";

/// Runs the full matrix and writes the bundle into `output_dir` (or the
/// config's own output directory). Output depends only on the config and its
/// inputs, never on thread count.
inline StudySummary run_study(const StudyConfig& c, std::optional<std::filesystem::path> output_dir = std::nullopt) {
  namespace fs = std::filesystem;
  const fs::path out_dir = output_dir ? *output_dir : detail::resolve(c, c.output_dir);
  fs::create_directories(out_dir);
  const unsigned threads = c.threads == 0 ? default_thread_count() : c.threads;
  StudySummary summary;

  auto write_manifest = [&](const std::vector<std::string>& config_ids) {
    nlohmann::ordered_json m;
    m["format"] = 1;
    m["config_fnv1a64"] = hex64(c.config_hash);
    m["mode"] = to_string(c.mode);
    m["seed"] = c.seed;
    m["scenarios"] = nlohmann::json::array();
    for (const auto& s : c.scenarios) m["scenarios"].push_back(s.id());
    m["regimes"] = c.regimes;
    m["configurations"] = config_ids;
    m["kinds"] = nlohmann::json::array();
    for (auto k : c.kinds) m["kinds"].push_back(to_string(k));
    m["cells"] = nlohmann::json::array();
    for (const auto& cell : summary.cells)
      m["cells"].push_back({{"regime", cell.regime},
                            {"config", cell.configuration},
                            {"scenario", cell.scenario},
                            {"kind", to_string(cell.kind)}});
    m["files"] = nlohmann::json::array();
    for (const auto& f : summary.files) {
      std::string body = detail::read_file(out_dir / f);
      m["files"].push_back({{"path", f}, {"bytes", body.size()}, {"fnv1a64", hex64(fnv1a64(body))}});
    }
    auto os = detail::open_output(out_dir / "manifest.json");
    os << m.dump(1) << '\n';
  };

  if (c.scenarios.empty()) {
    write_manifest({});
    return summary;
  }

  StudyInputs in = prepare_study(c);
  const Network& net = in.network;
  std::vector<std::string> config_ids;
  for (const auto& cfg : in.configurations) config_ids.push_back(cfg.id);

  {
    auto os = detail::open_output(out_dir / "sections.csv");
    os << "section_id,feeder,phase_class,phases,distance_mi\n";
    auto base_view = apply_configuration(net, net.base_configuration());
    for (int s : in.sections) {
      const auto& sec = net.sections()[s];
      os << sec.id << ',' << section_feeder(base_view, s) << ',' << to_string(phase_class_of(sec)) << ','
         << sec.phases.str() << ',' << fmt_fixed(net.nodes()[net.to_index(s)].distance_from_source, 6) << '\n';
    }
    summary.files.push_back("sections.csv");
  }
  {
    auto os = detail::open_output(out_dir / "configurations.csv");
    os << "config,probability,closed_switches,open_switches\n";
    for (const auto& cfg : in.configurations)
      os << cfg.id << ',' << fmt_fixed(cfg.probability, 6) << ',' << detail::join(cfg.closed_switches, ';') << ','
         << detail::join(cfg.open_switches, ';') << '\n';
    summary.files.push_back("configurations.csv");
  }

  auto results_os = detail::open_output(out_dir / "results.csv");
  auto flat_os = detail::open_output(out_dir / "flat.csv");
  results_os << kResultsHeader << '\n';
  flat_os << kFlatHeader << '\n';
  std::optional<std::ofstream> lost_os, eo_os;
  if (c.mode == StudyMode::profile) {
    lost_os = detail::open_output(out_dir / "lost_der.csv");
    *lost_os << "section_id,regime,config,scenario,lost_kwh\n";
  }
  if (c.expected_outcome_epsilon) {
    eo_os = detail::open_output(out_dir / "expected_outcome.csv");
    *eo_os << "section_id,scenario,epsilon,expectation_kw,chance_constrained_kw\n";
  }

  std::vector<EnergizedView> views;
  for (const auto& cfg : in.configurations) views.push_back(apply_configuration(net, cfg));

  auto emit = [&](const std::vector<HcResult>& results, const std::string& regime, const std::string& config,
                  const std::string& scenario, HcKind kind) {
    summary.cells.push_back({regime, config, scenario, kind});
    for (const auto& r : results) {
      for (const auto& e : r.profile)
        results_os << r.section_id << ',' << to_string(kind) << ',' << regime << ',' << config << ',' << scenario << ','
                   << e.interval << ',' << detail::kw(e.kw) << ',' << to_string(e.binding) << '\n';
      std::string at;
      for (const auto& e : r.profile)
        if (e.kw == r.flat_kw) {
          at = e.interval;
          break;
        }
      flat_os << r.section_id << ',' << to_string(kind) << ',' << regime << ',' << config << ',' << scenario << ','
              << detail::kw(r.flat_kw) << ',' << to_string(r.flat_binding) << ',' << at << ','
              << r.flat_configuration << '\n';
      if (lost_os && kind == HcKind::generation)
        *lost_os << r.section_id << ',' << regime << ',' << config << ',' << scenario << ','
                 << fmt_fixed(lost_der_opportunity(r), 3) << '\n';
    }
  };

  for (const auto& sc : c.scenarios) {
    ScenarioLoads loads = apply_penetration(net, sc, in.libraries);
    std::optional<EnvelopeSnapshots> env;
    std::vector<Snapshot> grid;
    if (c.mode == StudyMode::flat || c.expected_outcome_epsilon) env = envelope_snapshots(net, loads);
    if (c.mode == StudyMode::profile) grid = grid_snapshots(loads);

    for (HcKind kind : c.kinds) {
      std::vector<Snapshot> snaps;
      if (c.mode == StudyMode::profile) snaps = grid;
      else snaps = {kind == HcKind::generation ? env->minimum : env->peak};
      for (const auto& regime_name : c.regimes) {
        CriteriaRegime regime = regime_by_name(regime_name);
        std::vector<std::vector<HcResult>> per_config;
        for (std::size_t k = 0; k < in.configurations.size(); ++k) {
          per_config.push_back(hc_profiles(views[k], in.sections, snaps, regime, kind, sc.id(), c.hc, threads));
          emit(per_config.back(), regime.name, in.configurations[k].id, sc.id(), kind);
        }
        if (regime.name == "transfer_study") {
          std::vector<HcResult> combined;
          for (std::size_t s = 0; s < in.sections.size(); ++s) {
            std::vector<HcResult> column;
            for (const auto& pc : per_config) column.push_back(pc[s]);
            combined.push_back(combine_transfer(column));
            combined.back().regime_name = regime.name;
          }
          emit(combined, regime.name, "all", sc.id(), kind);
        }
      }
    }

    if (eo_os) {
      std::vector<int> chosen;
      if (c.expected_outcome_sections.empty()) chosen = in.sections;
      for (const auto& id : c.expected_outcome_sections) chosen.push_back(net.section_index(id));
      double psum = 0.0;
      for (const auto& cfg : in.configurations) psum += cfg.probability;
      if (std::abs(psum - 1.0) > 1e-9)
        throw ConfigError("expected outcome needs configuration probabilities summing to 1 (got " + fmt_fixed(psum, 6) +
                          "); select all configurations");
      std::vector<std::vector<HcResult>> per_config;
      for (const auto& v : views)
        per_config.push_back(hc_profiles(v, chosen, env->mean_days, regime_by_name("transfer_study"),
                                         HcKind::generation, sc.id(), c.hc, threads));
      for (std::size_t s = 0; s < chosen.size(); ++s) {
        std::vector<std::pair<double, double>> outcomes;
        for (std::size_t k = 0; k < views.size(); ++k) {
          const auto& r = per_config[k][s];
          bool energized = views[k].section_energized(chosen[s]);
          outcomes.emplace_back(in.configurations[k].probability, energized ? r.flat_kw : 0.0);
        }
        auto st = expected_outcome_stats(outcomes, *c.expected_outcome_epsilon);
        *eo_os << net.sections()[chosen[s]].id << ',' << sc.id() << ',' << fmt_fixed(*c.expected_outcome_epsilon, 6)
               << ',' << fmt_fixed(st.expectation, 3) << ',' << detail::kw(st.chance_constrained) << '\n';
      }
    }
  }

  results_os.close();
  flat_os.close();
  summary.files.push_back("results.csv");
  summary.files.push_back("flat.csv");
  if (lost_os) {
    lost_os->close();
    summary.files.push_back("lost_der.csv");
  }
  if (eo_os) {
    eo_os->close();
    summary.files.push_back("expected_outcome.csv");
  }
  std::sort(summary.files.begin(), summary.files.end());
  write_manifest(config_ids);
  return summary;
}

}  // namespace hcap
