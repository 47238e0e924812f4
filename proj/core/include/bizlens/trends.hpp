#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bizlens/query.hpp"
#include "bizlens/reference.hpp"
#include "bizlens/util.hpp"

namespace bizlens {

struct TrendBucket {
  Date bucket_start{};
  int count = 0;
  double share = 0;  // count / documents published in the bucket; 0 when none
  bool operator==(const TrendBucket&) const = default;
};

/// Month, quarter and year buckets tile [from, to] without overlap; the
/// first and last bucket are clipped to the range. multi_year buckets are
/// rolling windows of window_years stepped by one year, so they overlap.
struct TrendSeries {
  std::vector<std::string> topic_terms;
  TrendScale scale = TrendScale::year;
  int window_years = 5;  // multi_year only
  int min_match = 1;
  Date from{};
  Date to{};
  std::vector<TrendBucket> buckets;
  bool operator==(const TrendSeries&) const = default;
};

struct TrendSummary {
  enum class Direction { rising, falling, flat };
  Direction direction = Direction::flat;
  Date peak_bucket{};
  double pct_change_first_to_last = 0;  // percent
  bool operator==(const TrendSummary&) const = default;
};
std::string_view direction_name(TrendSummary::Direction d);

class EmptyRange : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TooFewBuckets : public std::invalid_argument {
 public:
  TooFewBuckets() : std::invalid_argument("a trend summary needs at least two buckets") {}
};

/// A document matches when at least `min_match` distinct topic terms occur
/// in it; a multi-word term must occur as a contiguous token sequence.
/// Throws EmptyRange when no term has a token or from > to.
TrendSeries topic_series(const CorpusIndex& index, const std::vector<std::string>& topic_terms, TrendScale scale,
                         Date from, Date to, int min_match = 1, int window_years = 5);

/// Least-squares slope over bucket counts; |slope| < 0.05 * mean count is
/// flat. Peak is the first bucket with the highest count. Percent change is
/// 100 * (last - first) / max(first, 1).
TrendSummary summarize_trend(const TrendSeries& series);

Json trend_to_json(const TrendSeries& s);
Json summary_to_json(const TrendSummary& s);

}  // namespace bizlens
