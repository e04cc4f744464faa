#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <hcap/hcap.hpp>

namespace fs = std::filesystem;
using namespace hcap;

namespace {

int run_cmd(const std::string& config_path, const std::string& output) {
  auto cfg = load_study_config(config_path);
  std::optional<fs::path> out;
  if (!output.empty()) out = output;
  auto summary = run_study(cfg, out);
  std::cerr << "study cells: " << summary.cells.size() << ", files: " << summary.files.size() + 1 << '\n';
  return 0;
}

int report_cmd(const std::string& kind, const std::string& bundle, const ReportOptions& o, const std::string& out) {
  std::optional<fs::path> dir;
  if (!out.empty()) dir = out;
  for (const auto& p : write_report(parse_report_kind(kind), bundle, o, dir)) std::cout << p.string() << '\n';
  return 0;
}

// Spec file: one feeder object, or {"feeders": [a, b], "tie_miles": x} for a
// tied pair.
int gen_feeder_cmd(const std::string& spec_path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw ConfigError("cannot open feeder spec '" + spec_path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::istringstream is(text);
  auto doc = detail::parse_json(is, spec_path);
  detail::ConfigReader r(text, spec_path);

  SyntheticNetwork syn;
  std::string stem;
  if (doc.contains("feeders")) {
    r.only(doc, {"feeders", "tie_miles"}, "feeder spec");
    const auto& fs_ = doc.at("feeders");
    if (!fs_.is_array() || fs_.size() != 2) r.fail("feeders", "expected exactly two feeder objects");
    FeederSpec a = feeder_f1_spec(), b = feeder_f2_spec();
    detail::read_feeder_spec(r, fs_[0], a);
    detail::read_feeder_spec(r, fs_[1], b);
    if (seed) {
      a.seed = *seed;
      b.seed = *seed + 1;
    }
    syn = generate_feeder_pair(a, b, r.get_or<double>(doc, "tie_miles", 0.5));
    auto en = enumerate_configurations(syn.network);
    syn.network = syn.network.with_configurations(en.configurations);
    stem = a.name + "-" + b.name;
  } else {
    FeederSpec s;
    detail::read_feeder_spec(r, doc, s);
    if (seed) s.seed = *seed;
    syn = generate_synthetic_feeder(s);
    stem = s.name;
  }
  fs::create_directories(out_dir);
  fs::path net_path = fs::path(out_dir) / (stem + ".json");
  fs::path prof_path = fs::path(out_dir) / (stem + "_profiles.csv");
  {
    std::ofstream os(net_path);
    write_network(os, syn.network);
  }
  {
    std::ofstream os(prof_path);
    write_profiles_csv(os, syn.load_shapes);
  }
  std::cout << net_path.string() << '\n' << prof_path.string() << '\n';
  return 0;
}

int solve_cmd(const std::string& network, const std::string& interval, const std::string& profiles,
              const std::string& config, const std::string& out_dir) {
  Network net = load_network(network);
  ScenarioLibraries lib;
  if (!profiles.empty()) {
    std::ifstream in(profiles);
    if (!in) throw ConfigError("cannot open profiles file '" + profiles + "'");
    lib.load_shapes = read_profiles_csv(in, ProfileKind::load);
  }
  auto iv = IntervalIndex::parse(interval);
  std::vector<Complex> loads(net.node_count());
  for (std::size_t l = 0; l < net.loads().size(); ++l) {
    const auto& lp = net.loads()[l];
    double f = 1.0;
    if (!lp.profile_id.empty()) {
      if (lib.load_shapes.empty())
        throw ConfigError("load at node '" + lp.node_id + "' uses profile '" + lp.profile_id + "'; pass --profiles");
      f = lib.load_shapes.get(lp.profile_id).at(iv);
    }
    loads[net.load_node_index(static_cast<int>(l))] += Complex{lp.peak_kw * f, lp.peak_kvar() * f};
  }
  auto view = apply_configuration(net, config.empty() ? net.base_configuration() : net.configuration(config));
  for (std::size_t n = 0; n < net.node_count(); ++n)
    if (!view.energized(static_cast<int>(n))) loads[n] = Complex{};
  auto sol = solve(view, loads);
  if (!sol.converged) throw NumericalError("power flow did not converge within " + std::to_string(sol.iterations) + " iterations");
  if (out_dir.empty()) {
    write_voltages_csv(std::cout, sol, view);
  } else {
    fs::create_directories(out_dir);
    std::ofstream v(fs::path(out_dir) / "voltages.csv"), f(fs::path(out_dir) / "flows.csv");
    write_voltages_csv(v, sol, view);
    write_flows_csv(f, sol, view);
  }
  std::cerr << "converged in " << sol.iterations << " iterations, losses " << fmt_fixed(sol.losses_kw, 3) << " kW\n";
  return 0;
}

int transfer_cmd(const std::string& network, const std::string& configs, const std::string& out, double p) {
  if (configs != "all") throw ConfigError("--configs accepts only 'all'");
  Network net = load_network(network);
  auto en = enumerate_configurations(net, TransferProbabilities{p});
  for (const auto& c : en.configurations) std::cout << c.id << ',' << fmt_fixed(c.probability, 6) << '\n';
  if (en.filtered_non_radial > 0) std::cerr << en.filtered_non_radial << " non-radial candidates dropped\n";
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw ConfigError("cannot write '" + out + "'");
    write_network(os, net.with_configurations(en.configurations));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feeder hosting-capacity engine"};
  app.require_subcommand(1);

  std::string config_path, output;
  auto* run = app.add_subcommand("run", "Run a study from a run-config file");
  run->add_option("--config", config_path, "Run-config JSON")->required();
  run->add_option("--output", output, "Override the bundle directory");

  std::string kind, bundle, report_out, bucket;
  ReportOptions ro;
  auto* report = app.add_subcommand("report", "Render a report from a study bundle");
  report->add_option("--kind", kind, "distance|limits|diff|load_census|profile")->required();
  report->add_option("--bundle", bundle, "Bundle directory")->required();
  report->add_option("--regime", ro.regime);
  report->add_option("--config", ro.config);
  report->add_option("--regime-b", ro.regime_b);
  report->add_option("--config-b", ro.config_b);
  report->add_option("--scenario", ro.scenario);
  report->add_option("--section", ro.section);
  std::string hc_kind = "generation";
  report->add_option("--hc-kind", hc_kind, "generation|load");
  report->add_option("--bucket-miles", ro.bucket_miles);
  report->add_option("--bin-kw", ro.census_bin_kw);
  report->add_option("--out", report_out, "Output directory (default <bundle>/reports)");

  std::string spec_path, gen_out = ".";
  std::optional<std::uint64_t> seed;
  auto* gen = app.add_subcommand("gen-feeder", "Generate a synthetic feeder or tied pair");
  gen->add_option("--spec", spec_path, "Feeder spec JSON")->required();
  gen->add_option("--seed", seed);
  gen->add_option("--out", gen_out, "Output directory");

  std::string network, interval, profiles, solve_config, solve_out;
  auto* sv = app.add_subcommand("solve", "Solve one interval's power flow");
  sv->add_option("--network", network)->required();
  sv->add_option("--interval", interval, "M/WD/H or M/WE/H")->required();
  sv->add_option("--profiles", profiles);
  sv->add_option("--configuration", solve_config);
  sv->add_option("--out", solve_out, "Write voltages.csv and flows.csv here instead of stdout");

  std::string tr_network, tr_configs = "all", tr_out;
  double tr_p = 0.01;
  auto* tr = app.add_subcommand("transfer", "Enumerate transfer configurations");
  tr->add_option("--network", tr_network)->required();
  tr->add_option("--configs", tr_configs);
  tr->add_option("--probability", tr_p, "Probability of each transfer configuration");
  tr->add_option("--out", tr_out, "Write the network with configurations embedded");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return run_cmd(config_path, output);
    if (*report) {
      ro.kind = parse_hc_kind(hc_kind);
      return report_cmd(kind, bundle, ro, report_out);
    }
    if (*gen) return gen_feeder_cmd(spec_path, seed, gen_out);
    if (*sv) return solve_cmd(network, interval, profiles, solve_config, solve_out);
    if (*tr) return transfer_cmd(tr_network, tr_configs, tr_out, tr_p);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
