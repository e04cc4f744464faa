#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "profiles.hpp"

namespace hcap {

enum class SiteClass { residential, commercial };

inline const char* to_string(SiteClass s) { return s == SiteClass::residential ? "residential" : "commercial"; }

/// Normalized daylight shape for a mid-latitude site: January peaks at 1.0
/// at hour 12; other months scale by their clear-sky peak ratio and day length.
inline ProfileLibrary builtin_pv_shapes() {
  constexpr std::array<double, 12> half_day_hours{4.9, 5.4, 6.0, 6.6, 7.0, 7.2, 7.1, 6.8, 6.2, 5.6, 5.1, 4.8};
  constexpr std::array<double, 12> peak_ratio{1.00, 1.05, 1.10, 1.12, 1.10, 1.08, 1.06, 1.06, 1.06, 1.05, 1.00, 0.97};
  Profile p{ProfileKind::pv, {}};
  for (int i = 0; i < kIntervalCount; ++i) {
    auto iv = IntervalIndex::from_flat(i);
    double x = (iv.hour - 12.0) / half_day_hours[iv.month - 1];
    double v = std::abs(x) >= 1.0 ? 0.0 : std::pow(std::cos(std::numbers::pi / 2.0 * x), 1.3);
    p.values[i] = peak_ratio[iv.month - 1] * v;
  }
  ProfileLibrary lib;
  lib.add("pv", p);
  return lib;
}

/// Per-system PV output: shape from the library scaled by the site-class
/// rating (the January daily maximum).
struct PvModel {
  ProfileLibrary shapes = builtin_pv_shapes();
  std::string shape_id = "pv";
  double residential_kw = 2.5;
  double commercial_kw = 30.0;

  double rating(SiteClass s) const { return s == SiteClass::residential ? residential_kw : commercial_kw; }
  double output_kw(SiteClass s, const IntervalIndex& iv) const { return rating(s) * shapes.get(shape_id).at(iv); }
};

/// 24-hour output of one system in a month.
inline DayValues pv_profile(const PvModel& model, SiteClass site, int month) {
  if (month < 1 || month > 12) throw ConfigError("pv_profile: missing month " + std::to_string(month));
  DayValues out{};
  for (int h = 0; h < 24; ++h) out[h] = model.output_kw(site, IntervalIndex{month, DayType::weekday, h});
  return out;
}

}  // namespace hcap
