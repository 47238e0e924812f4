#include <gtest/gtest.h>

#include <cmath>

#include "bizlens/trends.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

ArticleDoc doc(std::string id, std::string body, Date published) {
  return {std::move(id), "Note", std::move(body), published, "News", "https://example.com"};
}

const CorpusIndex& fixture_index() { return *bt::fixture_snapshot().index; }

// Grep oracle: lowercase the text and look for the term as a whole word.
bool grep_match(const ArticleDoc& d, const std::string& term) {
  std::string hay = " ";
  for (char c : d.title + " " + d.body) {
    char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    hay += std::isalnum(static_cast<unsigned char>(l)) ? l : ' ';
  }
  hay += " ";
  return hay.find(" " + term + " ") != std::string::npos;
}

std::map<int, int> grep_by_year(const std::string& term, int from, int to) {
  std::map<int, int> out;
  for (int y = from; y <= to; ++y) out[y] = 0;
  for (const auto& d : fixture_index().docs()) {
    int y = year_of(d.published);
    if (y >= from && y <= to && grep_match(d, term)) ++out[y];
  }
  return out;
}

TrendSeries with_counts(const std::vector<int>& counts) {
  TrendSeries s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s.buckets.push_back({make_date(2000 + static_cast<int>(i), 1, 1), counts[i], 0});
  }
  return s;
}

}  // namespace

TEST(Trends, ThreeDocsInOneYear) {
  auto index = CorpusIndex::build({doc("a", "AI chips", make_date(2023, 1, 5)), doc("b", "new AI model", make_date(2023, 3, 9)),
                                   doc("c", "AI rules", make_date(2023, 11, 20)), doc("d", "steel", make_date(2023, 2, 1))});
  auto year = topic_series(index, {"ai"}, TrendScale::year, make_date(2023, 1, 1), make_date(2023, 12, 31));
  ASSERT_EQ(year.buckets.size(), 1u);
  EXPECT_EQ(year.buckets[0].count, 3);
  EXPECT_DOUBLE_EQ(year.buckets[0].share, 0.75);
  auto month = topic_series(index, {"ai"}, TrendScale::month, make_date(2023, 1, 1), make_date(2023, 12, 31));
  ASSERT_EQ(month.buckets.size(), 12u);
  std::vector<int> counts;
  for (const auto& b : month.buckets) counts.push_back(b.count);
  EXPECT_EQ(counts, (std::vector<int>{1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0}));
}

TEST(Trends, AbsentTermGivesZeros) {
  auto s = topic_series(fixture_index(), {"qwxvzz"}, TrendScale::quarter, make_date(2019, 1, 1), make_date(2024, 12, 31));
  for (const auto& b : s.buckets) {
    EXPECT_EQ(b.count, 0);
    EXPECT_EQ(b.share, 0.0);
  }
}

TEST(Trends, Errors) {
  EXPECT_THROW(topic_series(fixture_index(), {"inflation"}, TrendScale::year, make_date(2024, 1, 1), make_date(2023, 1, 1)),
               EmptyRange);
  EXPECT_THROW(topic_series(fixture_index(), {}, TrendScale::year, make_date(2023, 1, 1), make_date(2024, 1, 1)), EmptyRange);
  EXPECT_THROW(topic_series(fixture_index(), {"!"}, TrendScale::year, make_date(2023, 1, 1), make_date(2024, 1, 1)), EmptyRange);
  EXPECT_THROW(summarize_trend(with_counts({3})), TooFewBuckets);
}

TEST(Trends, InflationMatchesGrepOracle) {
  auto s = topic_series(fixture_index(), {"inflation"}, TrendScale::year, make_date(2019, 1, 1), make_date(2024, 12, 31));
  auto oracle = grep_by_year("inflation", 2019, 2024);
  ASSERT_EQ(s.buckets.size(), 6u);
  int total = 0;
  for (const auto& b : s.buckets) {
    EXPECT_EQ(b.count, oracle.at(year_of(b.bucket_start))) << year_of(b.bucket_start);
    total += b.count;
  }
  EXPECT_GT(total, 0);
}

TEST(Trends, GrepOracleForEveryCorpusTerm) {
  // Every single-token term that appears in some title.
  std::set<std::string> terms;
  for (std::size_t d = 0; d < fixture_index().doc_count(); ++d) {
    for (const auto& t : fixture_index().title_terms(d)) terms.insert(t);
  }
  int first = 9999, last = 0;
  for (const auto& d : fixture_index().docs()) {
    first = std::min(first, year_of(d.published));
    last = std::max(last, year_of(d.published));
  }
  for (const auto& term : terms) {
    auto s = topic_series(fixture_index(), {term}, TrendScale::year, make_date(first, 1, 1), make_date(last, 12, 31));
    auto oracle = grep_by_year(term, first, last);
    for (const auto& b : s.buckets) ASSERT_EQ(b.count, oracle.at(year_of(b.bucket_start))) << term;
  }
}

// year = sum of months = sum of quarters, for every topic and full year.
TEST(Trends, ConservationAcrossScales) {
  std::set<std::string> terms;
  for (std::size_t d = 0; d < fixture_index().doc_count(); ++d) {
    for (const auto& t : fixture_index().title_terms(d)) terms.insert(t);
  }
  std::vector<std::vector<std::string>> topics;
  for (const auto& t : terms) topics.push_back({t});
  topics.push_back({"inflation", "interest rates"});
  topics.push_back({"ai", "chips", "cloud"});
  const std::vector<std::pair<int, int>> ranges = {{2015, 2024}, {2019, 2024}, {2020, 2020}, {2018, 2022}};
  for (const auto& topic : topics) {
    for (auto [a, b] : ranges) {
      auto from = make_date(a, 1, 1), to = make_date(b, 12, 31);
      auto ys = topic_series(fixture_index(), topic, TrendScale::year, from, to);
      auto ms = topic_series(fixture_index(), topic, TrendScale::month, from, to);
      auto qs = topic_series(fixture_index(), topic, TrendScale::quarter, from, to);
      std::map<int, int> msum, qsum;
      for (const auto& x : ms.buckets) msum[year_of(x.bucket_start)] += x.count;
      for (const auto& x : qs.buckets) qsum[year_of(x.bucket_start)] += x.count;
      ASSERT_EQ(ms.buckets.size(), ys.buckets.size() * 12);
      ASSERT_EQ(qs.buckets.size(), ys.buckets.size() * 4);
      for (const auto& x : ys.buckets) {
        int y = year_of(x.bucket_start);
        ASSERT_EQ(x.count, msum[y]) << topic.front() << " " << y;
        ASSERT_EQ(x.count, qsum[y]) << topic.front() << " " << y;
        ASSERT_GE(x.share, 0.0);
        ASSERT_LE(x.share, 1.0);
      }
    }
  }
}

TEST(Trends, MultiYearWindowsAreRollingSums) {
  auto from = make_date(2015, 1, 1), to = make_date(2024, 12, 31);
  auto ys = topic_series(fixture_index(), {"inflation"}, TrendScale::year, from, to);
  auto mw = topic_series(fixture_index(), {"inflation"}, TrendScale::multi_year, from, to, 1, 5);
  std::map<int, int> by_year;
  for (const auto& b : ys.buckets) by_year[year_of(b.bucket_start)] = b.count;
  ASSERT_EQ(mw.buckets.size(), 6u);
  for (const auto& b : mw.buckets) {
    int y = year_of(b.bucket_start), sum = 0;
    for (int k = y; k < y + 5; ++k) sum += by_year[k];
    EXPECT_EQ(b.count, sum) << y;
  }
}

TEST(Trends, AddingMatchingDocBumpsOneBucket) {
  auto docs = fixture_index().docs();
  auto from = make_date(2015, 1, 1), to = make_date(2024, 12, 31);
  auto before = topic_series(fixture_index(), {"inflation"}, TrendScale::quarter, from, to);
  docs.push_back(doc("zz-extra", "inflation again", make_date(2021, 5, 17)));
  auto after = topic_series(CorpusIndex::build(docs), {"inflation"}, TrendScale::quarter, from, to);
  ASSERT_EQ(before.buckets.size(), after.buckets.size());
  for (std::size_t i = 0; i < before.buckets.size(); ++i) {
    int delta = after.buckets[i].count - before.buckets[i].count;
    EXPECT_EQ(delta, after.buckets[i].bucket_start == make_date(2021, 4, 1) ? 1 : 0);
  }
}

TEST(Trends, MultiWordTermNeedsContiguousTokens) {
  auto index = CorpusIndex::build({doc("a", "interest rates rose", make_date(2022, 1, 1)),
                                   doc("b", "rates of interest", make_date(2022, 2, 1))});
  auto s = topic_series(index, {"interest rates"}, TrendScale::year, make_date(2022, 1, 1), make_date(2022, 12, 31));
  EXPECT_EQ(s.buckets[0].count, 1);
  auto two = topic_series(index, {"interest", "rose"}, TrendScale::year, make_date(2022, 1, 1), make_date(2022, 12, 31), 2);
  EXPECT_EQ(two.buckets[0].count, 1);
}

TEST(Trends, SummaryExamples) {
  auto up = summarize_trend(with_counts({1, 2, 3, 4}));
  EXPECT_EQ(up.direction, TrendSummary::Direction::rising);
  EXPECT_EQ(up.peak_bucket, make_date(2003, 1, 1));
  EXPECT_DOUBLE_EQ(up.pct_change_first_to_last, 300.0);
  EXPECT_EQ(summarize_trend(with_counts({5, 5, 5})).direction, TrendSummary::Direction::flat);
  auto down = summarize_trend(with_counts({0, 4, 4, 1}));
  EXPECT_EQ(down.peak_bucket, make_date(2001, 1, 1));
  EXPECT_DOUBLE_EQ(down.pct_change_first_to_last, 100.0);
}

TEST(Trends, SummaryAgreesWithSlopeOracle) {
  auto check = [](const TrendSeries& s) {
    const auto& b = s.buckets;
    double n = static_cast<double>(b.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      double x = static_cast<double>(i), y = b[i].count;
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double mean = sy / n;
    // Integer counts keep the numerator exact, so a level series gives 0.
    auto want = slope == 0 || std::abs(slope) < 0.05 * mean ? TrendSummary::Direction::flat
                : slope > 0                   ? TrendSummary::Direction::rising
                                              : TrendSummary::Direction::falling;
    auto got = summarize_trend(s);
    EXPECT_EQ(got.direction, want);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < b.size(); ++i) {
      if (b[i].count > b[peak].count) peak = i;
    }
    EXPECT_EQ(got.peak_bucket, b[peak].bucket_start);
  };
  check(topic_series(fixture_index(), {"ai"}, TrendScale::year, make_date(2015, 1, 1), make_date(2024, 12, 31)));
  check(topic_series(fixture_index(), {"ai"}, TrendScale::quarter, make_date(2020, 1, 1), make_date(2024, 12, 31)));
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    std::vector<int> counts(2 + rng.below(10));
    for (auto& c : counts) c = static_cast<int>(rng.below(20));
    check(with_counts(counts));
  }
}

TEST(Trends, JsonShape) {
  auto s = topic_series(fixture_index(), {"inflation"}, TrendScale::year, make_date(2023, 1, 1), make_date(2024, 12, 31));
  auto j = trend_to_json(s);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"topic_terms", "scale", "window_years", "min_match", "from", "to", "buckets"}));
  EXPECT_EQ(j["buckets"][0]["bucket_start"], "2023-01-01");
}
