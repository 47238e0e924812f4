#include <gtest/gtest.h>

#include "bizlens/temporal.hpp"
#include "support.hpp"
#include "temporal_cases.hpp"

using namespace bizlens;
using K = TemporalExpr::Kind;
using bizlens::testing::span;
using bizlens::testing::temporal_table;

TEST(Temporal, DocumentAnchoredLastYear) {
  auto expr = parse_temporal("last year", make_date(2020, 6, 1));
  EXPECT_EQ(expr.kind, K::relative_year_offset);
  EXPECT_EQ(expr.offset, -1);
  auto r = resolve(expr, make_date(2020, 3, 14), 2024, AnchorSource::document);
  EXPECT_EQ(r.years, std::vector<int>{2019});
  EXPECT_EQ(r.basis, ResolvedTime::Basis::document_anchored);
}

TEST(Temporal, BasicForms) {
  auto since = parse_temporal("revenue since 2014", make_date(2025, 6, 1));
  EXPECT_EQ(since.kind, K::since_year);
  EXPECT_EQ(since.start, 2014);
  EXPECT_THROW(parse_temporal("from 2024 to 2020", make_date(2025, 6, 1)), MalformedRange);
  auto none = resolve(parse_temporal("revenue of Apple", make_date(2025, 6, 1)), make_date(2025, 6, 1), 2024);
  EXPECT_EQ(none.years, std::vector<int>{2024});
  EXPECT_EQ(none.basis, ResolvedTime::Basis::defaulted_to_latest);
  EXPECT_EQ(resolve(since, make_date(2025, 6, 1), 2024).years, span(2014, 2024));
}

TEST(Temporal, TwentyFiveCaseTable) {
  const auto& table = temporal_table();
  ASSERT_EQ(table.size(), 25u);
  for (const auto& c : table) {
    EXPECT_EQ(bizlens::testing::resolve_text(c.text, make_date(2025, 6, 1), 2024), c.years) << c.text;
  }
}

TEST(Temporal, ClampExamples) {
  YearCoverage to2024{span(2015, 2024), 2024};
  auto rej = clamp_to_coverage({{2025}, ResolvedTime::Basis::explicit_years}, to2024, BoundaryPolicy::metric);
  EXPECT_EQ(rej.kind, BoundaryOutcome::Kind::reject);
  EXPECT_TRUE(rej.effective_years.empty());
  EXPECT_EQ(rej.latest_available, 2024);

  YearCoverage sparse{{2015, 2020}, 2020};
  auto red = clamp_to_coverage({{2018}, ResolvedTime::Basis::explicit_years}, sparse, BoundaryPolicy::ranking);
  EXPECT_EQ(red.kind, BoundaryOutcome::Kind::redirect);
  EXPECT_EQ(red.effective_years, std::vector<int>{2020});

  auto inter = clamp_to_coverage({span(2014, 2024), ResolvedTime::Basis::explicit_years}, to2024,
                                 BoundaryPolicy::metric);
  EXPECT_EQ(inter.kind, BoundaryOutcome::Kind::in_range);
  EXPECT_EQ(inter.effective_years, span(2015, 2024));

  auto none = clamp_to_coverage({span(2026, 2028), ResolvedTime::Basis::explicit_years}, to2024,
                                BoundaryPolicy::ranking);
  EXPECT_EQ(none.kind, BoundaryOutcome::Kind::reject);
}

TEST(Temporal, EquidistantRedirectPrefersLaterYear) {
  YearCoverage cov{{2016, 2018}, 2018};
  auto out = clamp_to_coverage({{2017}, ResolvedTime::Basis::explicit_years}, cov, BoundaryPolicy::ranking);
  EXPECT_EQ(out.effective_years, std::vector<int>{2018});
}

TEST(Temporal, ClampPropertiesAgainstLinearScan) {
  Rng rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<int> cov;
    for (int y = 2000; y <= 2030; ++y) {
      if (rng.below(3) == 0) cov.push_back(y);
    }
    if (cov.empty()) cov.push_back(2010);
    YearCoverage c{cov, cov.back()};
    std::vector<int> req;
    int n = static_cast<int>(rng.between(1, 4));
    int start = static_cast<int>(rng.between(1995, 2035));
    for (int i = 0; i < n; ++i) req.push_back(start + i);
    auto policy = rng.below(2) ? BoundaryPolicy::ranking : BoundaryPolicy::metric;
    auto out = clamp_to_coverage({req, ResolvedTime::Basis::explicit_years}, c, policy);
    for (int y : out.effective_years) {
      ASSERT_TRUE(std::binary_search(cov.begin(), cov.end(), y));
    }
    ASSERT_EQ(out.effective_years.empty(), out.kind == BoundaryOutcome::Kind::reject);
    if (out.kind == BoundaryOutcome::Kind::redirect) {
      ASSERT_EQ(policy, BoundaryPolicy::ranking);
      ASSERT_EQ(req.size(), 1u);
      // Linear scan: smallest distance, ties to the larger year.
      int best = cov[0];
      for (int y : cov) {
        int d = std::abs(y - req[0]), bd = std::abs(best - req[0]);
        if (d < bd || (d == bd && y > best)) best = y;
      }
      ASSERT_EQ(out.effective_years, std::vector<int>{best});
    }
  }
}

TEST(Temporal, DocumentAnchoredIgnoresToday) {
  const std::vector<std::string> phrases = {"last year", "this year", "two years ago", "5 years ago"};
  for (const auto& p : phrases) {
    std::vector<int> first;
    for (int today_year : {2019, 2022, 2025, 2031}) {
      auto expr = parse_temporal(p, make_date(today_year, 1, 15));
      auto r = resolve(expr, make_date(2020, 9, 30), 2024, AnchorSource::document);
      EXPECT_EQ(r.basis, ResolvedTime::Basis::document_anchored);
      if (first.empty()) first = r.years;
      EXPECT_EQ(r.years, first) << p << " today " << today_year;
    }
  }
}

TEST(Temporal, ResolutionIsDeterministic) {
  auto e = parse_temporal("last 4 years", make_date(2025, 6, 1));
  EXPECT_EQ(resolve(e, make_date(2025, 6, 1), 2024), resolve(e, make_date(2025, 6, 1), 2024));
}

TEST(Temporal, MonthMention) {
  auto m = find_month_mention("What was the view on inflation in April 2024?");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->year, 2024);
  EXPECT_EQ(m->month, 4u);
  EXPECT_FALSE(find_month_mention("revenue in 2024"));
}
