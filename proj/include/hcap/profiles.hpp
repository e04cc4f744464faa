#pragma once

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "intervals.hpp"

namespace hcap {

enum class ProfileKind { load, pv, ev };

using GridValues = std::array<double, kIntervalCount>;
using DayValues = std::array<double, 24>;

struct Profile {
  ProfileKind kind = ProfileKind::load;
  GridValues values{};

  double at(const IntervalIndex& iv) const { return values[iv.flat()]; }
};

/// Normalized interval shapes keyed by profile id.
class ProfileLibrary {
 public:
  void add(const std::string& id, Profile p) {
    validate(id, p);
    profiles_[id] = std::move(p);
  }

  bool contains(const std::string& id) const { return profiles_.count(id) > 0; }

  const Profile& get(const std::string& id) const {
    auto it = profiles_.find(id);
    if (it == profiles_.end()) throw ConfigError("unknown profile id '" + id + "'");
    return it->second;
  }

  const std::map<std::string, Profile>& all() const { return profiles_; }
  bool empty() const { return profiles_.empty(); }

  void merge(const ProfileLibrary& other) {
    for (const auto& [id, p] : other.profiles_) profiles_[id] = p;
  }

  /// Load shapes lie in [0, 1] with maximum 1; PV shapes are non-negative and
  /// zero at night (hours 0-4 and 20-23).
  static void validate(const std::string& id, const Profile& p) {
    double mx = 0.0;
    for (int i = 0; i < kIntervalCount; ++i) {
      double v = p.values[i];
      if (!std::isfinite(v) || v < 0.0) throw ConfigError("profile '" + id + "': negative or non-finite value");
      mx = std::max(mx, v);
      int h = i % 24;
      if (p.kind == ProfileKind::pv && (h <= 4 || h >= 20) && v != 0.0)
        throw ConfigError("profile '" + id + "': PV output at night (hour " + std::to_string(h) + ")");
    }
    if (p.kind == ProfileKind::load && (mx > 1.0 + 1e-9 || mx < 1.0 - 1e-9))
      throw ConfigError("profile '" + id + "': load shape maximum must be 1");
  }

 private:
  std::map<std::string, Profile> profiles_;
};

/// Profiles CSV: `profile_id,month,day_type,hour,value`. Every id must cover
/// all 576 intervals.
inline ProfileLibrary read_profiles_csv(std::istream& in, ProfileKind kind) {
  std::map<std::string, std::pair<GridValues, std::array<char, kIntervalCount>>> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("profile_id", 0) == 0) continue;
    auto f = split(line, ',');
    if (f.size() != 5) throw ConfigError("profiles line " + std::to_string(lineno) + ": expected 5 fields");
    IntervalIndex iv;
    double value;
    try {
      iv = IntervalIndex::parse(f[1] + "/" + f[2] + "/" + f[3]);
      value = std::stod(f[4]);
    } catch (const std::exception& e) {
      throw ConfigError("profiles line " + std::to_string(lineno) + ": " + e.what());
    }
    auto& entry = raw[f[0]];
    entry.first[iv.flat()] = value;
    entry.second[iv.flat()] = 1;
  }
  ProfileLibrary lib;
  for (auto& [id, entry] : raw) {
    for (char c : entry.second)
      if (!c) throw ConfigError("profile '" + id + "': missing intervals");
    lib.add(id, Profile{kind, entry.first});
  }
  return lib;
}

inline void write_profiles_csv(std::ostream& os, const ProfileLibrary& lib) {
  os << "profile_id,month,day_type,hour,value\n";
  for (const auto& [id, p] : lib.all())
    for (int i = 0; i < kIntervalCount; ++i) {
      auto iv = IntervalIndex::from_flat(i);
      os << id << ',' << iv.month << ',' << to_string(iv.day_type) << ',' << iv.hour << ',' << fmt_fixed(p.values[i], 6)
         << '\n';
    }
}

}  // namespace hcap
