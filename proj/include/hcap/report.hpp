#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "study.hpp"

namespace hcap {

/// Per-section row of a bundle's results or flat summary.
struct BundleRow {
  std::string section_id;
  HcKind kind = HcKind::generation;
  std::string regime;
  std::string config;
  std::string scenario;
  std::string interval;
  double hc_kw = 0.0;
  Criterion binding = Criterion::none;
};

struct BundleSection {
  std::string id;
  std::string feeder;
  std::string phase_class;
  double distance_mi = 0.0;
};

/// Read-only view of a study bundle directory.
class Bundle {
 public:
  explicit Bundle(std::filesystem::path dir) : dir_(std::move(dir)) {
    auto text = read("manifest.json");
    std::istringstream in(text);
    manifest_ = detail::parse_json(in, (dir_ / "manifest.json").string());
    mode_ = manifest_.value("mode", std::string("flat"));
    if (has_file("sections.csv")) {
      for_each_row("sections.csv", 5, [&](const std::vector<std::string>& f) {
        sections_.push_back({f[0], f[1], f[2], std::stod(f[4])});
      });
    }
    if (has_file("flat.csv")) flat_ = read_rows("flat.csv", 9, 5, 6, 7);
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& mode() const { return mode_; }
  const std::vector<BundleSection>& sections() const { return sections_; }
  const std::vector<BundleRow>& flat() const { return flat_; }

  std::vector<std::string> list(const char* key) const {
    std::vector<std::string> out;
    if (manifest_.contains(key))
      for (const auto& v : manifest_.at(key)) out.push_back(v.get<std::string>());
    return out;
  }

  bool has_file(const std::string& name) const {
    if (!manifest_.contains("files")) return false;
    for (const auto& f : manifest_.at("files"))
      if (f.at("path").get<std::string>() == name) return true;
    return false;
  }

  bool has_cell(const std::string& regime, const std::string& config, const std::string& scenario, HcKind kind) const {
    if (!manifest_.contains("cells")) return false;
    for (const auto& c : manifest_.at("cells"))
      if (c.at("regime") == regime && c.at("config") == config && c.at("scenario") == scenario &&
          c.at("kind") == to_string(kind))
        return true;
    return false;
  }

  void require_cell(const std::string& regime, const std::string& config, const std::string& scenario,
                    HcKind kind) const {
    if (!has_cell(regime, config, scenario, kind))
      throw ConfigError("bundle '" + dir_.string() + "' has no study cell (regime=" + regime + ", config=" + config +
                        ", scenario=" + scenario + ", kind=" + to_string(kind) + ")");
  }

  /// Flat rows of one cell, in section order.
  std::vector<BundleRow> flat_cell(const std::string& regime, const std::string& config, const std::string& scenario,
                                   HcKind kind) const {
    require_cell(regime, config, scenario, kind);
    std::vector<BundleRow> out;
    for (const auto& r : flat_)
      if (r.regime == regime && r.config == config && r.scenario == scenario && r.kind == kind) out.push_back(r);
    return out;
  }

  /// Interval rows of one section in one cell.
  std::vector<BundleRow> intervals(const std::string& section, const std::string& regime, const std::string& config,
                                   const std::string& scenario, HcKind kind) const {
    require_cell(regime, config, scenario, kind);
    std::vector<BundleRow> out;
    for (auto& r : read_rows("results.csv", 8, 5, 6, 7))
      if (r.section_id == section && r.regime == regime && r.config == config && r.scenario == scenario &&
          r.kind == kind)
        out.push_back(std::move(r));
    return out;
  }

 private:
  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    if (!in) throw ConfigError("bundle '" + dir_.string() + "' is missing " + name);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }

  template <typename Fn>
  void for_each_row(const std::string& name, std::size_t fields, Fn&& fn) const {
    std::istringstream in(read(name));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      if (++lineno == 1 || line.empty()) continue;
      auto f = split(line, ',');
      if (f.size() != fields)
        throw ConfigError(name + " line " + std::to_string(lineno) + ": expected " + std::to_string(fields) + " fields");
      fn(f);
    }
  }

  std::vector<BundleRow> read_rows(const std::string& name, std::size_t fields, int interval_col, int kw_col,
                                   int binding_col) const {
    std::vector<BundleRow> out;
    const bool flat = name == "flat.csv";
    for_each_row(name, fields, [&](const std::vector<std::string>& f) {
      BundleRow r;
      r.section_id = f[0];
      r.kind = parse_hc_kind(f[1]);
      r.regime = f[2];
      r.config = f[3];
      r.scenario = f[4];
      r.interval = flat ? f[7] : f[interval_col];
      r.hc_kw = std::stod(f[flat ? 5 : kw_col]);
      r.binding = parse_criterion(f[flat ? 6 : binding_col]);
      out.push_back(std::move(r));
    });
    return out;
  }

  std::filesystem::path dir_;
  nlohmann::json manifest_;
  std::string mode_;
  std::vector<BundleSection> sections_;
  std::vector<BundleRow> flat_;
};

enum class ReportKind { distance, limits, diff, load_census, profile };

inline ReportKind parse_report_kind(const std::string& s) {
  if (s == "distance") return ReportKind::distance;
  if (s == "limits") return ReportKind::limits;
  if (s == "diff") return ReportKind::diff;
  if (s == "load_census") return ReportKind::load_census;
  if (s == "profile") return ReportKind::profile;
  throw ConfigError("unknown report kind '" + s + "' (expected distance|limits|diff|load_census|profile)");
}

inline const char* to_string(ReportKind k) {
  switch (k) {
    case ReportKind::distance: return "distance";
    case ReportKind::limits: return "limits";
    case ReportKind::diff: return "diff";
    case ReportKind::load_census: return "load_census";
    case ReportKind::profile: return "profile";
  }
  return "?";
}

/// Cell selection for a report; empty fields take per-kind defaults.
struct ReportOptions {
  std::string regime;
  std::string config;
  std::string scenario;
  HcKind kind = HcKind::generation;
  // diff compares cell A against cell B
  std::string regime_b;
  std::string config_b;
  std::string section;         // profile report
  double bucket_miles = 1.0;   // distance report
  double census_bin_kw = 500;  // load_census report
  int window_first_hour = 6;   // profile report display window
  int window_last_hour = 18;
};

struct ReportOutput {
  std::string csv;
  std::string svg;
};

namespace detail {

class Svg {
 public:
  Svg(int width, int height, const std::string& title) : w_(width), h_(height) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 "
        << w_ << ' ' << h_ << "\">\n";
    os_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(w_ / 2.0, 18, title, "middle", 14);
  }

  void text(double x, double y, const std::string& s, const char* anchor = "start", int size = 10) {
    os_ << "<text x=\"" << fmt_fixed(x, 1) << "\" y=\"" << fmt_fixed(y, 1) << "\" font-size=\"" << size
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
  }

  void rect(double x, double y, double w, double h, const char* fill) {
    if (h < 0) {
      y += h;
      h = -h;
    }
    os_ << "<rect x=\"" << fmt_fixed(x, 2) << "\" y=\"" << fmt_fixed(y, 2) << "\" width=\"" << fmt_fixed(w, 2)
        << "\" height=\"" << fmt_fixed(h, 2) << "\" fill=\"" << fill << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke = "black") {
    os_ << "<line x1=\"" << fmt_fixed(x1, 2) << "\" y1=\"" << fmt_fixed(y1, 2) << "\" x2=\"" << fmt_fixed(x2, 2)
        << "\" y2=\"" << fmt_fixed(y2, 2) << "\" stroke=\"" << stroke << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    os_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      os_ << (i ? " " : "") << fmt_fixed(pts[i].first, 2) << ',' << fmt_fixed(pts[i].second, 2);
    os_ << "\"/>\n";
  }

  std::string finish() {
    os_ << "</svg>\n";
    return os_.str();
  }

  int width() const { return w_; }
  int height() const { return h_; }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  }

  int w_, h_;
  std::ostringstream os_;
};

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                 "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  return colors[i % 12];
}

// Bar chart of labelled groups; one series per group member.
inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                             const std::vector<std::string>& series,
                             const std::vector<std::vector<double>>& values /* [series][label] */) {
  const int w = 900, h = 420, left = 70, right = 20, top = 40, bottom = 70;
  Svg svg(w, h, title);
  double lo = 0.0, hi = 0.0;
  for (const auto& s : values)
    for (double v : s) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi == lo) hi = lo + 1.0;
  const double plot_h = h - top - bottom;
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };
  svg.line(left, y_of(0.0), w - right, y_of(0.0));
  svg.line(left, top, left, h - bottom);
  svg.text(left - 4, y_of(hi) + 4, fmt_fixed(hi, 0), "end");
  svg.text(left - 4, y_of(lo) + 4, fmt_fixed(lo, 0), "end");
  const double group_w = labels.empty() ? 0.0 : static_cast<double>(w - left - right) / labels.size();
  const double bar_w = series.empty() ? 0.0 : group_w * 0.8 / series.size();
  for (std::size_t l = 0; l < labels.size(); ++l) {
    double gx = left + l * group_w + group_w * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s)
      svg.rect(gx + s * bar_w, y_of(0.0), bar_w, y_of(values[s][l]) - y_of(0.0), palette(s));
    if (labels.size() <= 40) svg.text(gx + group_w * 0.4, h - bottom + 14, labels[l], "middle", 9);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg.rect(left + 10 + s * 150, h - 22, 10, 10, palette(s));
    svg.text(left + 24 + s * 150, h - 13, series[s]);
  }
  return svg.finish();
}

inline std::string first_or(const std::vector<std::string>& v, const std::string& fallback) {
  return v.empty() ? fallback : v.front();
}

}  // namespace detail

/// Generation HC summed per distance bucket and phase class.
inline ReportOutput distance_report(const Bundle& b, ReportOptions o) {
  if (!(o.bucket_miles > 0.0)) throw ConfigError("distance report: bucket width must be > 0");
  if (o.regime.empty()) o.regime = "opflex";
  if (o.config.empty()) o.config = kBaseConfigurationId;
  if (o.scenario.empty()) o.scenario = detail::first_or(b.list("scenarios"), "");
  auto rows = b.flat_cell(o.regime, o.config, o.scenario, o.kind);
  std::map<std::string, const BundleSection*> by_id;
  for (const auto& s : b.sections()) by_id[s.id] = &s;
  std::map<std::pair<std::string, int>, std::pair<int, double>> agg;
  int max_bin = 0;
  for (const auto& r : rows) {
    auto it = by_id.find(r.section_id);
    if (it == by_id.end()) throw ConfigError("distance report: section '" + r.section_id + "' missing from sections.csv");
    int bin = static_cast<int>(std::floor(it->second->distance_mi / o.bucket_miles));
    max_bin = std::max(max_bin, bin);
    auto& a = agg[{it->second->phase_class, bin}];
    a.first++;
    a.second += r.hc_kw;
  }
  std::ostringstream csv;
  csv << "phase_class,distance_from_mi,distance_to_mi,sections,hc_sum_kw\n";
  for (const auto& [key, a] : agg)
    csv << key.first << ',' << fmt_fixed(key.second * o.bucket_miles, 3) << ','
        << fmt_fixed((key.second + 1) * o.bucket_miles, 3) << ',' << a.first << ',' << fmt_fixed(a.second, 0) << '\n';

  std::vector<std::string> labels, series{"3ph", "1-2ph"};
  std::vector<std::vector<double>> values(2, std::vector<double>(max_bin + 1, 0.0));
  for (int k = 0; k <= max_bin; ++k) labels.push_back(fmt_fixed(k * o.bucket_miles, 1));
  for (const auto& [key, a] : agg) values[key.first == "3ph" ? 0 : 1][key.second] = a.second / 1000.0;
  return {csv.str(), detail::bar_chart("Aggregate " + std::string(to_string(o.kind)) + " HC (MW) by distance, " +
                                           o.regime + "/" + o.config + "/" + o.scenario,
                                       labels, series, values)};
}

/// Count of sections per binding criterion.
inline ReportOutput limits_report(const Bundle& b, ReportOptions o) {
  if (o.regime.empty()) o.regime = "opflex";
  if (o.config.empty()) o.config = kBaseConfigurationId;
  if (o.scenario.empty()) o.scenario = detail::first_or(b.list("scenarios"), "");
  auto rows = b.flat_cell(o.regime, o.config, o.scenario, o.kind);
  std::map<Criterion, int> counts;
  for (const auto& r : rows) counts[r.binding]++;
  std::ostringstream csv;
  csv << "binding_criterion,sections\n";
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values(1);
  for (auto c : kAllCriteria) {
    csv << to_string(c) << ',' << counts[c] << '\n';
    labels.push_back(to_string(c));
    values[0].push_back(counts[c]);
  }
  return {csv.str(), detail::bar_chart("Limiting criteria, " + o.regime + "/" + o.config + "/" + o.scenario, labels,
                                       {"sections"}, values)};
}

/// Per-section difference between two cells (default OpFlex base minus the
/// transfer aggregate).
inline ReportOutput diff_report(const Bundle& b, ReportOptions o) {
  if (o.regime.empty()) o.regime = "opflex";
  if (o.config.empty()) o.config = kBaseConfigurationId;
  if (o.regime_b.empty()) o.regime_b = "transfer_study";
  if (o.config_b.empty()) o.config_b = "all";
  if (o.scenario.empty()) o.scenario = detail::first_or(b.list("scenarios"), "");
  auto a = b.flat_cell(o.regime, o.config, o.scenario, o.kind);
  auto t = b.flat_cell(o.regime_b, o.config_b, o.scenario, o.kind);
  std::map<std::string, double> t_by_id;
  for (const auto& r : t) t_by_id[r.section_id] = r.hc_kw;
  std::ostringstream csv;
  csv << "section_id,hc_opflex_kw,hc_transfer_kw,diff_kw\n";
  std::vector<double> diffs;
  for (const auto& r : a) {
    auto it = t_by_id.find(r.section_id);
    if (it == t_by_id.end()) throw ConfigError("diff report: section '" + r.section_id + "' missing from second cell");
    double d = r.hc_kw - it->second;
    diffs.push_back(d);
    csv << r.section_id << ',' << fmt_fixed(r.hc_kw, 0) << ',' << fmt_fixed(it->second, 0) << ',' << fmt_fixed(d, 0)
        << '\n';
  }
  std::sort(diffs.begin(), diffs.end(), std::greater<>());
  std::vector<std::string> labels(diffs.size());
  return {csv.str(), detail::bar_chart("HC difference (kW), " + o.regime + "/" + o.config + " minus " + o.regime_b + "/" +
                                           o.config_b + ", " + o.scenario + ", sorted",
                                       labels, {"diff"}, {diffs})};
}

/// Distribution of flat load HC per configuration with zero-HC counts.
inline ReportOutput load_census_report(const Bundle& b, ReportOptions o) {
  if (!(o.census_bin_kw > 0.0)) throw ConfigError("load_census report: bin width must be > 0");
  if (o.regime.empty()) o.regime = "transfer_study";
  if (o.scenario.empty()) o.scenario = detail::first_or(b.list("scenarios"), "");
  o.kind = HcKind::load;
  auto configs = b.list("configurations");
  if (configs.empty()) throw ConfigError("load_census report: bundle lists no configurations");
  std::ostringstream csv;
  csv << "config,bin_from_kw,bin_to_kw,sections,zero_hc_sections,total_sections\n";
  std::vector<std::map<int, int>> hist;
  int max_bin = 0;
  for (const auto& cfg : configs) {
    auto rows = b.flat_cell(o.regime, cfg, o.scenario, o.kind);
    std::map<int, int> h;
    int zeros = 0;
    for (const auto& r : rows) {
      if (r.hc_kw <= 0.0) zeros++;
      int bin = static_cast<int>(std::floor(r.hc_kw / o.census_bin_kw));
      h[bin]++;
      max_bin = std::max(max_bin, bin);
    }
    for (const auto& [bin, n] : h)
      csv << cfg << ',' << fmt_fixed(bin * o.census_bin_kw, 0) << ',' << fmt_fixed((bin + 1) * o.census_bin_kw, 0)
          << ',' << n << ',' << zeros << ',' << rows.size() << '\n';
    hist.push_back(std::move(h));
  }
  std::vector<std::string> labels;
  for (int k = 0; k <= max_bin; ++k) labels.push_back(fmt_fixed(k * o.census_bin_kw / 1000.0, 1));
  std::vector<std::vector<double>> values;
  for (const auto& h : hist) {
    std::vector<double> v(max_bin + 1, 0.0);
    for (const auto& [bin, n] : h) v[bin] = n;
    values.push_back(std::move(v));
  }
  return {csv.str(), detail::bar_chart("Load HC distribution (MW bins), " + o.regime + "/" + o.scenario, labels,
                                       configs, values)};
}

/// Interval HC of one section per month and day type, restricted to the
/// display window; the bundle keeps every hour.
inline ReportOutput profile_report(const Bundle& b, ReportOptions o) {
  if (b.mode() != "profile") throw ConfigError("profile report needs a bundle run in profile mode");
  if (o.window_first_hour < 0 || o.window_last_hour > 23 || o.window_first_hour > o.window_last_hour)
    throw ConfigError("profile report: invalid display window");
  if (o.regime.empty()) o.regime = "opflex";
  if (o.config.empty()) o.config = kBaseConfigurationId;
  if (o.scenario.empty()) o.scenario = detail::first_or(b.list("scenarios"), "");
  if (o.section.empty()) {
    if (b.sections().empty()) throw ConfigError("profile report: bundle has no sections");
    o.section = b.sections().front().id;
  }
  auto rows = b.intervals(o.section, o.regime, o.config, o.scenario, o.kind);
  if (rows.empty()) throw ConfigError("profile report: section '" + o.section + "' not in the bundle");
  std::map<int, double> by_flat;
  for (const auto& r : rows) by_flat[IntervalIndex::parse(r.interval).flat()] = r.hc_kw;

  std::ostringstream csv;
  csv << "section_id,month,day_type,hour,hc_kw\n";
  const int w = 960, h = 480, left = 60, top = 40, bottom = 60, right = 20;
  detail::Svg svg(w, h, "Interval " + std::string(to_string(o.kind)) + " HC, " + o.section + ", " + o.regime + "/" +
                            o.config + "/" + o.scenario);
  double hi = 1.0;
  for (const auto& [i, v] : by_flat) hi = std::max(hi, v);
  const int span = o.window_last_hour - o.window_first_hour;
  const double panel_w = static_cast<double>(w - left - right) / 12.0;
  for (int m = 1; m <= 12; ++m) {
    double x0 = left + (m - 1) * panel_w;
    svg.text(x0 + panel_w / 2, h - bottom + 16, std::to_string(m), "middle");
    for (auto d : {DayType::weekday, DayType::weekend}) {
      std::vector<std::pair<double, double>> pts;
      for (int hr = o.window_first_hour; hr <= o.window_last_hour; ++hr) {
        auto it = by_flat.find(IntervalIndex{m, d, hr}.flat());
        if (it == by_flat.end()) continue;
        csv << o.section << ',' << m << ',' << to_string(d) << ',' << hr << ',' << fmt_fixed(it->second, 0) << '\n';
        double x = x0 + 4 + (panel_w - 8) * (span ? static_cast<double>(hr - o.window_first_hour) / span : 0.5);
        double y = top + (hi - it->second) / hi * (h - top - bottom);
        pts.emplace_back(x, y);
      }
      svg.polyline(pts, d == DayType::weekday ? "#1f77b4" : "#ff7f0e");
    }
  }
  svg.line(left, h - bottom, w - right, h - bottom);
  svg.text(left - 4, top + 4, fmt_fixed(hi, 0), "end");
  svg.text(left + 10, h - 14, "weekday (blue), weekend (orange); month panels, hours " +
                                  std::to_string(o.window_first_hour) + "-" + std::to_string(o.window_last_hour));
  return {csv.str(), svg.finish()};
}

inline ReportOutput render_report(ReportKind kind, const Bundle& b, const ReportOptions& o = {}) {
  switch (kind) {
    case ReportKind::distance: return distance_report(b, o);
    case ReportKind::limits: return limits_report(b, o);
    case ReportKind::diff: return diff_report(b, o);
    case ReportKind::load_census: return load_census_report(b, o);
    case ReportKind::profile: return profile_report(b, o);
  }
  throw Error("unreachable report kind");
}

/// Renders a report and writes `<kind>.csv` and `<kind>.svg` into `out_dir`
/// (default `<bundle>/reports`). Returns the written paths.
inline std::vector<std::filesystem::path> write_report(ReportKind kind, const std::filesystem::path& bundle_dir,
                                                        const ReportOptions& o = {},
                                                        std::optional<std::filesystem::path> out_dir = std::nullopt) {
  Bundle b(bundle_dir);
  auto rep = render_report(kind, b, o);
  auto dir = out_dir ? *out_dir : bundle_dir / "reports";
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths{dir / (std::string(to_string(kind)) + ".csv"),
                                           dir / (std::string(to_string(kind)) + ".svg")};
  detail::open_output(paths[0]) << rep.csv;
  detail::open_output(paths[1]) << rep.svg;
  return paths;
}

}  // namespace hcap
