#include "bizlens/trends.hpp"

#include <algorithm>

#include "bizlens/text.hpp"

namespace bizlens {

namespace {

using std::chrono::months;
using std::chrono::years;

Date next_start(Date start, TrendScale scale, int window_years) {
  switch (scale) {
    case TrendScale::month: return start + months(1);
    case TrendScale::quarter: return start + months(3);
    case TrendScale::year: return start + years(1);
    case TrendScale::multi_year: return start + years(window_years);
  }
  return start + years(1);
}

Date first_start(Date from, TrendScale scale) {
  int y = year_of(from);
  unsigned m = static_cast<unsigned>(from.month());
  switch (scale) {
    case TrendScale::month: return make_date(y, m, 1);
    case TrendScale::quarter: return make_date(y, (m - 1) / 3 * 3 + 1, 1);
    default: return make_date(y, 1, 1);
  }
}

bool has_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string_view direction_name(TrendSummary::Direction d) {
  switch (d) {
    case TrendSummary::Direction::rising: return "rising";
    case TrendSummary::Direction::falling: return "falling";
    case TrendSummary::Direction::flat: return "flat";
  }
  return "flat";
}

TrendSeries topic_series(const CorpusIndex& index, const std::vector<std::string>& topic_terms, TrendScale scale,
                         Date from, Date to, int min_match, int window_years) {
  if (from > to) throw EmptyRange("range start " + format_iso_date(from) + " is after end " + format_iso_date(to));
  if (min_match < 1) throw std::invalid_argument("min_match must be at least 1");
  if (window_years < 1) throw std::invalid_argument("window_years must be at least 1");
  std::vector<std::vector<std::string>> terms;
  for (const auto& t : topic_terms) {
    auto toks = text::tokenize(t);
    if (!toks.empty()) terms.push_back(std::move(toks));
  }
  if (terms.empty()) throw EmptyRange("no searchable topic term");

  TrendSeries s;
  for (const auto& t : terms) s.topic_terms.push_back(text::join(t, " "));
  s.scale = scale;
  s.window_years = window_years;
  s.min_match = min_match;
  s.from = from;
  s.to = to;

  std::vector<bool> matched(index.doc_count(), false);
  for (std::size_t d = 0; d < index.doc_count(); ++d) {
    const auto& toks = index.tokens(d);
    int hits = 0;
    for (const auto& t : terms) hits += has_sequence(toks, t) ? 1 : 0;
    matched[d] = hits >= min_match;
  }

  auto tally = [&](Date lo, Date hi_exclusive) {
    TrendBucket b;
    int total = 0;
    for (std::size_t d = 0; d < index.doc_count(); ++d) {
      auto p = index.docs()[d].published;
      if (p < lo || p >= hi_exclusive || p < from || p > to) continue;
      ++total;
      b.count += matched[d] ? 1 : 0;
    }
    b.share = total ? static_cast<double>(b.count) / total : 0.0;
    return b;
  };

  if (scale == TrendScale::multi_year) {
    int first = year_of(from);
    int last = std::max(first, year_of(to) - window_years + 1);
    for (int y = first; y <= last; ++y) {
      Date start = make_date(y, 1, 1);
      auto b = tally(start, next_start(start, scale, window_years));
      b.bucket_start = start;
      s.buckets.push_back(b);
    }
    return s;
  }
  for (Date start = first_start(from, scale); start <= to; start = next_start(start, scale, window_years)) {
    auto b = tally(start, next_start(start, scale, window_years));
    b.bucket_start = start;
    s.buckets.push_back(b);
  }
  return s;
}

TrendSummary summarize_trend(const TrendSeries& series) {
  const auto& b = series.buckets;
  if (b.size() < 2) throw TooFewBuckets();
  double n = static_cast<double>(b.size());
  double mean_x = (n - 1) / 2, mean_y = 0;
  for (const auto& x : b) mean_y += x.count;
  mean_y /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (b[i].count - mean_y);
    sxx += dx * dx;
  }
  double slope = sxy / sxx;
  TrendSummary out;
  if (std::abs(slope) < 0.05 * mean_y || slope == 0) {
    out.direction = TrendSummary::Direction::flat;
  } else {
    out.direction = slope > 0 ? TrendSummary::Direction::rising : TrendSummary::Direction::falling;
  }
  std::size_t peak = 0;
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (b[i].count > b[peak].count) peak = i;
  }
  out.peak_bucket = b[peak].bucket_start;
  double first = b.front().count, last = b.back().count;
  out.pct_change_first_to_last = 100.0 * (last - first) / std::max(first, 1.0);
  return out;
}

Json trend_to_json(const TrendSeries& s) {
  Json j;
  j["topic_terms"] = s.topic_terms;
  j["scale"] = std::string(trend_scale_name(s.scale));
  j["window_years"] = s.scale == TrendScale::multi_year ? Json(s.window_years) : Json(nullptr);
  j["min_match"] = s.min_match;
  j["from"] = format_iso_date(s.from);
  j["to"] = format_iso_date(s.to);
  j["buckets"] = Json::array();
  for (const auto& b : s.buckets) {
    j["buckets"].push_back({{"bucket_start", format_iso_date(b.bucket_start)}, {"count", b.count}, {"share", b.share}});
  }
  return j;
}

Json summary_to_json(const TrendSummary& s) {
  return {{"direction", std::string(direction_name(s.direction))},
          {"peak_bucket", format_iso_date(s.peak_bucket)},
          {"pct_change_first_to_last", s.pct_change_first_to_last}};
}

}  // namespace bizlens
