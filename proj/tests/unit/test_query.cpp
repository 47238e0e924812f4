#include <gtest/gtest.h>

#include "bizlens/eval.hpp"
#include "bizlens/query.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

const Grammar& grammar() { return *bt::fixture_snapshot().grammar; }
const MetricsCatalog& catalog() { return bt::fixture_dataset().catalog(); }

ParseResult parse(const std::string& q) { return parse_query(q, catalog(), bt::ref_date(), grammar()); }

QueryPlan plan_of(const std::string& q) {
  auto r = parse(q);
  if (auto* d = std::get_if<ParseDiagnostics>(&r)) {
    ADD_FAILURE() << q << " -> " << diagnostics_kind_name(d->kind) << ": " << d->message;
    return {};
  }
  return std::get<QueryPlan>(r);
}

}  // namespace

TEST(Query, ClassifyIntentExamples) {
  EXPECT_EQ(classify_intent("Are there any philosophical principles embedded in your programming?", grammar()),
            Intent::persona);
  EXPECT_EQ(classify_intent("Plot the revenue for Apple, Google and Nvidia in 2024", grammar()), Intent::chart);
  EXPECT_EQ(classify_intent("What are the top 5 companies by revenue in 2024?", grammar()), Intent::ranking_qa);
  EXPECT_EQ(classify_intent("How has coverage of inflation evolved over time?", grammar()), Intent::trend);
  EXPECT_EQ(classify_intent("What was Walmart's revenue in 2024?", grammar()), Intent::metric_qa);
}

TEST(Query, EmptyTextIsDiagnosed) { EXPECT_TRUE(std::holds_alternative<ParseDiagnostics>(parse(""))); }

TEST(Query, WalmartRevenue) {
  auto p = plan_of("What was Walmart's revenue in 2024?");
  EXPECT_EQ(p.intent, Intent::metric_qa);
  EXPECT_EQ(p.companies, std::vector<std::string>{"Walmart"});
  EXPECT_EQ(p.metrics, std::vector<Metric>{Metric::revenue});
  EXPECT_EQ(p.time.years, std::vector<int>{2024});
  EXPECT_EQ(p.boundary.kind, BoundaryOutcome::Kind::in_range);
  EXPECT_EQ(canonical_form(p), "metric company=Walmart metric=revenue years=2024");
}

TEST(Query, StockPriceIsOutOfDomain) {
  auto r = parse("What was the average stock price of Apple in 2025?");
  ASSERT_TRUE(std::holds_alternative<ParseDiagnostics>(r));
  const auto& d = std::get<ParseDiagnostics>(r);
  EXPECT_EQ(d.kind, ParseDiagnostics::Kind::out_of_domain);
  EXPECT_NE(d.message.find("stock price"), std::string::npos);
}

TEST(Query, CompareRevenueAndEmployeesIsScatter) {
  auto p = plan_of(
      "Compare the revenue and the number of employees for the top 10 companies on the Fortune 1000 list");
  EXPECT_EQ(p.intent, Intent::chart);
  EXPECT_EQ(p.chart_type, ChartType::scatter);
  EXPECT_EQ(p.metrics, (std::vector<Metric>{Metric::revenue, Metric::employees}));
  EXPECT_EQ(p.top_k, 10);
  EXPECT_EQ(p.list_id, "f1000");
  EXPECT_EQ(p.time.years, std::vector<int>{catalog().cutoff_year("f1000").value()});
}

TEST(Query, BarPlotCanonicalForm) {
  auto a = plan_of("Plot the revenue for Apple, Google and Nvidia in 2024");
  EXPECT_EQ(canonical_form(a), "chart bar list=g500 metrics=revenue companies=Apple,Google,Nvidia years=2024");
  auto b = plan_of("Plot the revenue for Nvidia, Apple and Google in 2024");
  EXPECT_EQ(canonical_form(a), canonical_form(b));
  EXPECT_TRUE(a == b);
}

TEST(Query, SinceIsLineChart) {
  auto p = plan_of("Show me the revenue for Apple, Google and Nvidia since 2014");
  EXPECT_EQ(p.chart_type, ChartType::line);
  // 2014 lies before coverage; the request is intersected with it.
  EXPECT_EQ(p.boundary.effective_years.front(), 2015);
  EXPECT_EQ(p.boundary.effective_years.back(), 2024);
}

TEST(Query, MetricKeywordTable) {
  const std::vector<std::pair<std::string, Metric>> cases = {
      {"What were Apple's sales in 2023?", Metric::revenue},
      {"What was Apple's profit in 2023?", Metric::profits},
      {"What was Apple's net income in 2023?", Metric::profits},
      {"What was Apple's market cap in 2023?", Metric::market_value},
      {"What was Apple's market value in 2023?", Metric::market_value},
      {"How many employees did Apple have in 2023?", Metric::employees},
      {"What was Apple's headcount in 2023?", Metric::employees},
      {"What was Apple's EPS in 2023?", Metric::eps},
      {"What were Apple's assets in 2023?", Metric::assets},
  };
  for (const auto& [q, m] : cases) {
    auto p = plan_of(q);
    ASSERT_FALSE(p.metrics.empty()) << q;
    EXPECT_EQ(p.metrics.front(), m) << q;
  }
}

TEST(Query, FutureYearMetricIsBoundaryReject) {
  auto r = parse("What was Walmart's revenue in 2031?");
  if (auto* p = std::get_if<QueryPlan>(&r)) {
    EXPECT_EQ(p->boundary.kind, BoundaryOutcome::Kind::reject);
    EXPECT_EQ(p->boundary.latest_available, 2024);
  } else {
    EXPECT_EQ(std::get<ParseDiagnostics>(r).kind, ParseDiagnostics::Kind::boundary_reject);
  }
}

TEST(Query, RankingGapRedirects) {
  auto p = plan_of("What were the top 5 companies in the Fortune 1000 in 2017?");
  EXPECT_EQ(p.intent, Intent::ranking_qa);
  EXPECT_EQ(p.boundary.kind, BoundaryOutcome::Kind::redirect);
  EXPECT_EQ(p.boundary.effective_years, std::vector<int>{2018});
}

TEST(Query, UnknownCompanySuggests) {
  auto r = parse("What was Wallmartt Global's revenue in 2024?");
  ASSERT_TRUE(std::holds_alternative<ParseDiagnostics>(r));
}

TEST(Query, CanonicalFormRoundTripsOnRandomPlans) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    auto p = bt::random_plan(rng, bt::fixture_dataset());
    ASSERT_EQ(validate_plan(p), std::nullopt) << canonical_form(p);
    auto text = canonical_form(p);
    auto back = parse_canonical(text, catalog());
    ASSERT_TRUE(back == p) << text;
    ASSERT_EQ(canonical_form(back), text);
  }
}

TEST(Query, ParseCanonicalRejectsMalformed) {
  EXPECT_THROW(parse_canonical("metric company=Walmart years=2024", catalog()), std::invalid_argument);
  EXPECT_THROW(parse_canonical("chart pie list=g500 metrics=revenue top=3 years=2024", catalog()),
               std::invalid_argument);
  EXPECT_THROW(parse_canonical("metric company=Nobody metric=revenue years=2024", catalog()), std::invalid_argument);
}

TEST(Query, YearListFormatting) {
  EXPECT_EQ(format_years({2012, 2015, 2016, 2017}), "2012,2015-2017");
  EXPECT_EQ(parse_years("2012,2015-2017"), (std::vector<int>{2012, 2015, 2016, 2017}));
}

// Every input yields a valid plan or diagnostics.
TEST(Query, FuzzTotality) {
  std::vector<std::string> vocab = {"revenue", "top", "plot", "Apple", "Walmart", "2024", "since", "last", "year",
                                    "between", "and", "by", "sector", "Fortune", "1000", "average", "of", "in",
                                    "employees", "'19", "%", ",", "?", "\xc3\xa9", "\xff", "chart", "trend",
                                    "inflation", "decade", "companies", "10", "scatter", "vs", "from", "to"};
  Rng rng(3);
  for (int i = 0; i < 3000; ++i) {
    std::string q;
    if (i % 3 == 0) {
      std::size_t len = rng.below(60);
      for (std::size_t k = 0; k < len; ++k) q += static_cast<char>(rng.below(256));
    } else {
      std::size_t len = 1 + rng.below(12);
      for (std::size_t k = 0; k < len; ++k) q += vocab[rng.below(vocab.size())] + " ";
    }
    ParseResult r;
    ASSERT_NO_THROW(r = parse(q)) << q;
    if (auto* p = std::get_if<QueryPlan>(&r)) {
      ASSERT_EQ(validate_plan(*p), std::nullopt) << q;
    }
  }
}

TEST(Query, IntentInvariantUnderCompanySubstitution) {
  const std::vector<std::string> prompts = {
      "What was {} revenue in 2023?", "Plot the profits of {} since 2018", "How many employees did {} have?",
      "Show the market value of {} and Apple in 2022"};
  const std::vector<std::string> names = {"Walmart", "Toyota Motor", "Shell", "Microsoft", "Nestle"};
  for (const auto& p : prompts) {
    auto fill = [&](const std::string& n) {
      auto s = p;
      return s.replace(s.find("{}"), 2, n);
    };
    auto base = classify_intent(fill(names[0]), grammar());
    for (const auto& n : names) EXPECT_EQ(classify_intent(fill(n), grammar()), base) << fill(n);
  }
}

// The eval templates are authored apart from the grammar; each paraphrase of
// every template must still map to the intended canonical plan.
TEST(Query, TemplateParaphrasesAgree) {
  auto templates = EvalTemplates::load(bt::data_dir() / "eval" / "templates.conf");
  for (const char* suite : {"viz", "qa"}) {
    auto cases = gen_templated_prompts(templates, bt::fixture_dataset(), suite, 5, 300, bt::ref_date());
    for (const auto& c : cases) {
      auto p = plan_of(c.prompt);
      EXPECT_EQ(canonical_form(p), c.intended_plan) << c.template_id << ": " << c.prompt;
    }
  }
  for (const auto* t : templates.suite("viz")) EXPECT_GE(t->prompts.size(), 3u) << t->id;
  for (const auto* t : templates.suite("qa")) EXPECT_GE(t->prompts.size(), 3u) << t->id;
}
