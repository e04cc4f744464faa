#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "intervals.hpp"
#include "profiles.hpp"

namespace hcap {

enum class ChargerClass { home_l1, home_l2, work_l1, work_l2, public_l2, dcfc };

inline constexpr int kChargerClassCount = 6;
inline constexpr std::array<ChargerClass, kChargerClassCount> kChargerClasses{
    ChargerClass::home_l1, ChargerClass::home_l2, ChargerClass::work_l1,
    ChargerClass::work_l2, ChargerClass::public_l2, ChargerClass::dcfc};

inline const char* to_string(ChargerClass c) {
  switch (c) {
    case ChargerClass::home_l1: return "home_l1";
    case ChargerClass::home_l2: return "home_l2";
    case ChargerClass::work_l1: return "work_l1";
    case ChargerClass::work_l2: return "work_l2";
    case ChargerClass::public_l2: return "public_l2";
    case ChargerClass::dcfc: return "dcfc";
  }
  return "?";
}

inline ChargerClass parse_charger_class(const std::string& s) {
  for (auto c : kChargerClasses)
    if (s == to_string(c)) return c;
  throw ConfigError("unknown charger class '" + s + "'");
}

enum class ChargingStrategy { immediate, delayed };

/// Daily driving distance per month for the study region.
inline constexpr std::array<double, 12> kDefaultDailyMiles{24, 24, 26, 26, 26, 28, 28, 28, 26, 26, 26, 24};

struct EvFleetSpec {
  int ev_count = 0;
  std::array<double, 12> daily_miles_by_month = kDefaultDailyMiles;
  double pct_bev = 0.5;
  double pct_sedan = 0.8;
  double l1_kw = 1.4;
  double l2_kw = 6.2;
  double dcfc_kw = 50.0;
  double home_charging_access = 1.0;
  double home_l1_share = 0.5;
  ChargingStrategy strategy = ChargingStrategy::immediate;
  double kwh_per_mile = 0.30;

  double mean_daily_miles() const {
    return std::accumulate(daily_miles_by_month.begin(), daily_miles_by_month.end(), 0.0) / 12.0;
  }

  double charger_kw(ChargerClass c) const {
    switch (c) {
      case ChargerClass::home_l1:
      case ChargerClass::work_l1: return l1_kw;
      case ChargerClass::dcfc: return dcfc_kw;
      default: return l2_kw;
    }
  }

  void validate() const {
    if (ev_count < 0) throw ConfigError("fleet: ev_count must be >= 0");
    for (double f : {pct_bev, pct_sedan, home_charging_access, home_l1_share})
      if (f < 0.0 || f > 1.0) throw ConfigError("fleet: fractions must lie in [0, 1]");
    for (double m : daily_miles_by_month)
      if (m < 0.0) throw ConfigError("fleet: daily miles must be >= 0");
    if (!(kwh_per_mile > 0.0)) throw ConfigError("fleet: kwh_per_mile must be > 0");
  }
};

using ChargerMix = std::array<int, kChargerClassCount>;

/// Active chargers per 1000 EVs at 45 daily miles.
inline constexpr ChargerMix kReferenceChargerMix{331, 132, 30, 79, 82, 2};
inline constexpr double kReferenceFleetSize = 1000.0;
inline constexpr double kReferenceDailyMiles = 45.0;

/// Charger counts scale linearly with fleet size and with average daily
/// miles (charging need), rounded half-up per class.
inline ChargerMix ev_charger_mix(const EvFleetSpec& fleet) {
  fleet.validate();
  ChargerMix mix{};
  if (fleet.ev_count == 0) return mix;
  double scale = fleet.ev_count / kReferenceFleetSize * fleet.mean_daily_miles() / kReferenceDailyMiles;
  for (int c = 0; c < kChargerClassCount; ++c)
    mix[c] = static_cast<int>(std::floor(kReferenceChargerMix[c] * scale + 0.5));
  return mix;
}

/// Hourly arrival/duration templates per charger class and day type, as
/// fractions of that class's daily energy (each row sums to 1), plus the
/// average daily hours at full power each active charger delivers.
struct EvTemplates {
  std::map<std::pair<ChargerClass, DayType>, DayValues> shape;
  std::map<std::pair<ChargerClass, DayType>, double> utilization_hours;

  const DayValues& at(ChargerClass c, DayType d) const {
    auto it = shape.find({c, d});
    if (it == shape.end())
      throw ConfigError(std::string("missing EV template for class '") + to_string(c) + "' (" + to_string(d) + ")");
    return it->second;
  }

  double utilization(ChargerClass c, DayType d) const {
    auto it = utilization_hours.find({c, d});
    if (it == utilization_hours.end())
      throw ConfigError(std::string("missing EV utilization for class '") + to_string(c) + "' (" + to_string(d) + ")");
    return it->second;
  }

  void normalize() {
    for (auto& [key, row] : shape) {
      double s = std::accumulate(row.begin(), row.end(), 0.0);
      if (!(s > 0.0)) throw ConfigError(std::string("EV template for '") + to_string(key.first) + "' sums to zero");
      for (double& v : row) v /= s;
    }
  }
};

inline EvTemplates builtin_ev_templates() {
  using C = ChargerClass;
  using D = DayType;
  EvTemplates t;
  // Weekday: home charging after the evening commute, workplace in the morning.
  t.shape[{C::home_l1, D::weekday}] = {6, 5, 4, 3, 2, 1, 0.5, 0.3, 0.2, 0.2, 0.2, 0.3,
                                       0.4, 0.5, 0.7, 1, 2, 4, 6, 7, 7.5, 7.5, 7, 6.5};
  t.shape[{C::home_l2, D::weekday}] = {1.5, 0.8, 0.4, 0.2, 0.1, 0.1, 0.1, 0.2, 0.3, 0.3, 0.4, 0.5,
                                       0.6, 0.8, 1, 1.5, 3, 6, 8, 8, 6.5, 4.5, 3, 2};
  t.shape[{C::work_l1, D::weekday}] = {0, 0, 0, 0, 0, 0, 0.2, 1.5, 5, 7, 7, 6, 5, 4.5, 4, 3, 1.5, 0.5, 0.1, 0, 0, 0, 0, 0};
  t.shape[{C::work_l2, D::weekday}] = {0, 0, 0, 0, 0, 0, 0.3, 3, 8, 7, 4, 2.5, 2, 2.5, 2, 1, 0.5, 0.2, 0, 0, 0, 0, 0, 0};
  t.shape[{C::public_l2, D::weekday}] = {0.1, 0, 0, 0, 0, 0, 0.2, 0.5, 1, 1.5, 2, 2.5,
                                         3, 3, 2.8, 2.6, 2.5, 2.5, 2.2, 1.8, 1.2, 0.8, 0.4, 0.2};
  t.shape[{C::dcfc, D::weekday}] = {0.2, 0.1, 0.1, 0.1, 0.1, 0.2, 0.5, 1.5, 2, 2, 2.2, 2.5,
                                    2.8, 2.8, 2.6, 2.6, 2.8, 3, 2.8, 2.2, 1.5, 1, 0.6, 0.3};
  // Weekend: flatter, with a midday shoulder.
  t.shape[{C::home_l1, D::weekend}] = {6, 5, 4, 3, 2, 1.5, 1, 0.8, 0.8, 1, 1.5, 2,
                                       2.5, 3, 3.5, 4, 4.5, 5, 5.5, 6, 6.5, 6.5, 6.5, 6.5};
  t.shape[{C::home_l2, D::weekend}] = {1.5, 0.8, 0.4, 0.2, 0.1, 0.1, 0.2, 0.4, 0.8, 1.5, 2.5, 3.5,
                                       4, 4, 4, 4, 4.5, 5, 5, 4.5, 4, 3, 2.5, 2};
  t.shape[{C::work_l1, D::weekend}] = {0, 0, 0, 0, 0, 0, 0, 0.5, 2, 4, 5, 5, 4.5, 4, 3, 2, 1, 0.5, 0, 0, 0, 0, 0, 0};
  t.shape[{C::work_l2, D::weekend}] = {0, 0, 0, 0, 0, 0, 0, 1, 3, 4, 3.5, 3, 2.5, 2, 1.5, 1, 0.5, 0, 0, 0, 0, 0, 0, 0};
  t.shape[{C::public_l2, D::weekend}] = {0.2, 0.1, 0, 0, 0, 0, 0.1, 0.3, 0.8, 1.5, 2.5, 3.2,
                                         3.5, 3.5, 3.2, 3, 2.8, 2.5, 2.2, 1.8, 1.2, 0.8, 0.5, 0.3};
  t.shape[{C::dcfc, D::weekend}] = {0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.3, 0.8, 1.5, 2.2, 2.8, 3,
                                    3.2, 3.2, 3, 2.8, 2.8, 2.6, 2.4, 2, 1.5, 1, 0.6, 0.3};
  const std::array<std::pair<double, double>, kChargerClassCount> hours{
      {{6.0, 6.5}, {2.0, 2.2}, {4.0, 0.6}, {1.5, 0.3}, {1.0, 1.2}, {0.3, 0.35}}};
  for (int c = 0; c < kChargerClassCount; ++c) {
    t.utilization_hours[{kChargerClasses[c], D::weekday}] = hours[c].first;
    t.utilization_hours[{kChargerClasses[c], D::weekend}] = hours[c].second;
  }
  t.normalize();
  return t;
}

/// Templates CSV: `class,day_type,hour,value` rows plus optional
/// `class,day_type,utilization,hours` rows.
inline EvTemplates read_ev_templates_csv(std::istream& in) {
  EvTemplates t;
  std::map<std::pair<ChargerClass, DayType>, int> filled;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("class", 0) == 0)) continue;
    auto f = split(line, ',');
    if (f.size() != 4) throw ConfigError("EV templates line " + std::to_string(lineno) + ": expected 4 fields");
    auto cls = parse_charger_class(f[0]);
    DayType d;
    if (f[1] == "WD") d = DayType::weekday;
    else if (f[1] == "WE") d = DayType::weekend;
    else throw ConfigError("EV templates line " + std::to_string(lineno) + ": day type must be WD or WE");
    try {
      if (f[2] == "utilization") {
        t.utilization_hours[{cls, d}] = std::stod(f[3]);
        continue;
      }
      int h = std::stoi(f[2]);
      if (h < 0 || h > 23) throw ConfigError("hour out of range");
      t.shape[{cls, d}][h] = std::stod(f[3]);
      filled[{cls, d}]++;
    } catch (const ConfigError&) {
      throw ConfigError("EV templates line " + std::to_string(lineno) + ": hour out of range");
    } catch (const std::exception& e) {
      throw ConfigError("EV templates line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (const auto& [key, count] : filled)
    if (count != 24) throw ConfigError(std::string("EV template '") + to_string(key.first) + "' incomplete");
  t.normalize();
  return t;
}

inline void write_ev_templates_csv(std::ostream& os, const EvTemplates& t) {
  os << "class,day_type,hour,value\n";
  for (const auto& [key, row] : t.shape)
    for (int h = 0; h < 24; ++h)
      os << to_string(key.first) << ',' << to_string(key.second) << ',' << h << ',' << fmt_fixed(row[h], 8) << '\n';
  for (const auto& [key, hrs] : t.utilization_hours)
    os << to_string(key.first) << ',' << to_string(key.second) << ",utilization," << fmt_fixed(hrs, 4) << '\n';
}

/// Aggregate fleet charging demand for one month and day type, kW per hour.
/// Class energy shares follow charger count x power x utilization; the day
/// total is pinned to ev_count x daily miles x kWh/mile.
inline DayValues ev_profile(const EvFleetSpec& fleet, int month, DayType day_type,
                            const EvTemplates& templates = builtin_ev_templates()) {
  if (month < 1 || month > 12) throw ConfigError("ev_profile: month must be 1-12");
  fleet.validate();
  DayValues out{};
  if (fleet.ev_count == 0) return out;

  auto mix = ev_charger_mix(fleet);
  if (std::all_of(mix.begin(), mix.end(), [](int c) { return c == 0; })) mix = kReferenceChargerMix;

  std::array<double, kChargerClassCount> weight{};
  double total_weight = 0.0;
  for (int c = 0; c < kChargerClassCount; ++c) {
    auto cls = kChargerClasses[c];
    if (mix[c] == 0) continue;
    templates.at(cls, day_type);
    weight[c] = mix[c] * fleet.charger_kw(cls) * templates.utilization(cls, day_type);
    total_weight += weight[c];
  }
  const double daily_kwh = fleet.ev_count * fleet.daily_miles_by_month[month - 1] * fleet.kwh_per_mile;
  for (int c = 0; c < kChargerClassCount; ++c) {
    if (weight[c] == 0.0) continue;
    auto cls = kChargerClasses[c];
    const auto& row = templates.at(cls, day_type);
    // Delayed home charging waits for the off-peak window starting at 23:00.
    int shift = (fleet.strategy == ChargingStrategy::delayed &&
                 (cls == ChargerClass::home_l1 || cls == ChargerClass::home_l2)) ? 5 : 0;
    double class_kwh = daily_kwh * weight[c] / total_weight;
    for (int h = 0; h < 24; ++h) out[(h + shift) % 24] += class_kwh * row[h];
  }
  return out;
}

}  // namespace hcap
