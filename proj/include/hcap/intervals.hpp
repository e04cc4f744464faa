#pragma once

#include <array>
#include <chrono>
#include <string>

#include "common.hpp"

namespace hcap {

enum class DayType { weekday = 0, weekend = 1 };

inline const char* to_string(DayType d) { return d == DayType::weekday ? "WD" : "WE"; }

inline constexpr int kIntervalCount = 12 * 2 * 24;

/// One cell of the analysis grid: month x day type x hour.
struct IntervalIndex {
  int month = 1;  // 1..12
  DayType day_type = DayType::weekday;
  int hour = 0;   // 0..23

  constexpr int flat() const { return ((month - 1) * 2 + static_cast<int>(day_type)) * 24 + hour; }

  static constexpr IntervalIndex from_flat(int i) {
    return IntervalIndex{i / 48 + 1, static_cast<DayType>((i / 24) % 2), i % 24};
  }

  constexpr bool operator==(const IntervalIndex&) const = default;

  /// "M/WD/H", e.g. "7/WE/14".
  std::string str() const {
    return std::to_string(month) + "/" + to_string(day_type) + "/" + std::to_string(hour);
  }

  static IntervalIndex parse(const std::string& s) {
    auto parts = split(s, '/');
    if (parts.size() != 3) throw ConfigError("interval '" + s + "': expected M/WD/H");
    IntervalIndex iv;
    try {
      iv.month = std::stoi(parts[0]);
      iv.hour = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("interval '" + s + "': month and hour must be integers");
    }
    if (parts[1] == "WD") iv.day_type = DayType::weekday;
    else if (parts[1] == "WE") iv.day_type = DayType::weekend;
    else throw ConfigError("interval '" + s + "': day type must be WD or WE");
    if (iv.month < 1 || iv.month > 12 || iv.hour < 0 || iv.hour > 23)
      throw ConfigError("interval '" + s + "': month 1-12, hour 0-23");
    return iv;
  }
};

inline constexpr std::array<int, 12> kDaysInMonth{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};

/// Representative-year hours carried by one interval: weekday cells weigh
/// 5/7 of the month's days, weekend cells 2/7. Weights sum to 8760.
inline double interval_weight_hours(const IntervalIndex& iv) {
  double days = kDaysInMonth[iv.month - 1];
  return iv.day_type == DayType::weekday ? days * 5.0 / 7.0 : days * 2.0 / 7.0;
}

/// Calendar of the reference (non-leap) year used to expand the grid into a
/// daily history: month and day type for each of the 365 days.
struct CalendarDay {
  int month;
  DayType day_type;
};

inline std::array<CalendarDay, 365> reference_calendar() {
  using namespace std::chrono;
  std::array<CalendarDay, 365> out{};
  sys_days day = sys_days{year{2021} / January / 1};
  for (int i = 0; i < 365; ++i, day += days{1}) {
    year_month_day ymd{day};
    weekday wd{day};
    bool weekend = wd == Saturday || wd == Sunday;
    out[i] = {static_cast<int>(static_cast<unsigned>(ymd.month())), weekend ? DayType::weekend : DayType::weekday};
  }
  return out;
}

}  // namespace hcap
