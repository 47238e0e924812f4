#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace bizlens {

using Json = nlohmann::ordered_json;

/// Calendar date without time zone.
using Date = std::chrono::year_month_day;

/// Parses strict YYYY-MM-DD; nullopt on any deviation or invalid day.
std::optional<Date> parse_iso_date(std::string_view s);
std::string format_iso_date(Date d);
Date make_date(int year, unsigned month, unsigned day);
int year_of(Date d);
/// Whole days from `from` to `to` (negative when `to` is earlier).
long days_between(Date from, Date to);
Date today_utc();

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Serializes JSON with members in insertion order, no whitespace, and
/// floating-point numbers in shortest round-trip form. Byte-stable for equal
/// input trees.
std::string canonical_json(const Json& value);

/// Seeded generator with a fixed algorithm (mt19937_64) and hand-written
/// range reduction, so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi].
  long long between(long long lo, long long hi);
  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bizlens
