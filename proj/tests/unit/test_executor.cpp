#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "bizlens/executor.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

std::string csv(std::initializer_list<std::string> rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

QueryPlan plan(const std::string& text, const Dataset& ds) { return parse_canonical(text, ds.catalog()); }

std::optional<ExecError::Kind> error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const ExecError& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(Executor, BarPlotOfThreeCompanies) {
  const auto& ds = bt::fixture_dataset();
  auto p = plan("chart bar list=g500 metrics=revenue companies=Apple,Google,Nvidia years=2024", ds);
  auto res = execute(p, ds);
  ASSERT_TRUE(res.chart_spec);
  const auto& spec = *res.chart_spec;
  EXPECT_EQ(spec["chart_type"], "bar");
  EXPECT_EQ(spec["x"]["field"], "company");
  EXPECT_EQ(spec["x"]["kind"], "categorical");
  EXPECT_EQ(spec["y"]["field"], "revenue_musd");
  ASSERT_EQ(spec["rows"].size(), 3u);

  // Oracle: read the three cells straight from the fixture file.
  std::map<std::string, double> expect;
  std::ifstream in(bt::lists_dir() / "g500_small.csv");
  std::string line;
  while (std::getline(in, line)) {
    for (const char* name : {"Apple", "Google", "Nvidia"}) {
      std::string prefix = std::string("g500,2024,");
      if (line.rfind(prefix, 0) != 0) continue;
      auto after_rank = line.find(',', prefix.size()) + 1;
      if (line.compare(after_rank, std::strlen(name) + 1, std::string(name) + ",") != 0) continue;
      // revenue is the 10th column; company names here contain no commas.
      std::size_t pos = 0;
      for (int i = 0; i < 9; ++i) {
        if (line[pos] == '"') pos = line.find('"', pos + 1) + 1;
        pos = line.find(',', pos) + 1;
      }
      expect[name] = std::stod(line.substr(pos, line.find(',', pos) - pos));
    }
  }
  ASSERT_EQ(expect.size(), 3u);
  double prev = 1e300;
  for (const auto& row : spec["rows"]) {
    double y = row["revenue_musd"].get<double>();
    EXPECT_EQ(y, expect.at(row["company"].get<std::string>()));
    EXPECT_LE(y, prev);
    prev = y;
  }
}

TEST(Executor, MissingValueStaysInTableButNotInChart) {
  auto ds = ingest_csv(csv({"g500,2023,1,Acme,,,,,,100,,,,,,", "g500,2023,2,Beta,,,,,,,,,,,,"}), "m.csv");
  auto p = plan("chart bar list=g500 metrics=revenue companies=Acme,Beta years=2023", *ds);
  auto res = execute(p, *ds);
  ASSERT_EQ(res.table.rows.size(), 2u);
  auto col = *res.table.column_index("revenue_musd");
  int missing = 0;
  for (const auto& r : res.table.rows) missing += std::holds_alternative<std::monostate>(r[col]);
  EXPECT_EQ(missing, 1);
  EXPECT_EQ((*res.chart_spec)["rows"].size(), 1u);
}

TEST(Executor, TopKOrdersByMetric) {
  auto ds = ingest_csv(csv({"g500,2023,1,A,,,,,,100,,,,,,", "g500,2023,2,B,,,,,,300,,,,,,",
                            "g500,2023,3,C,,,,,,200,,,,,,", "g500,2023,4,D,,,,,,50,,,,,,"}),
                       "k.csv");
  auto res = execute(plan("chart bar list=g500 metrics=revenue top=3 years=2023", *ds), *ds);
  auto c = *res.table.column_index("company");
  std::vector<std::string> order;
  for (const auto& r : res.table.rows) order.push_back(std::get<std::string>(r[c]));
  EXPECT_EQ(order, (std::vector<std::string>{"B", "C", "A"}));
}

TEST(Executor, LineChartSeriesField) {
  const auto& ds = bt::fixture_dataset();
  auto one = execute(plan("chart line list=g500 metrics=revenue companies=Apple years=2015-2024", ds), ds);
  EXPECT_EQ((*one.chart_spec)["x"]["field"], "year");
  EXPECT_EQ((*one.chart_spec)["x"]["kind"], "temporal");
  EXPECT_TRUE((*one.chart_spec)["series_field"].is_null());
  auto many = execute(plan("chart line list=g500 metrics=revenue companies=Apple,Google,Nvidia years=2015-2024", ds), ds);
  EXPECT_EQ((*many.chart_spec)["series_field"], "company");
  // Line rows are ordered by (series, year).
  std::vector<std::pair<std::string, int>> keys;
  for (const auto& r : (*many.chart_spec)["rows"]) keys.emplace_back(r["company"], r["year"]);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
}

TEST(Executor, ScatterOrderedByRank) {
  const auto& ds = bt::fixture_dataset();
  auto res = execute(plan("chart scatter list=g500 metrics=revenue,employees top=10 years=2024", ds), ds);
  auto rc = res.table.column_index("rank");
  ASSERT_TRUE(rc);
  double prev = 0;
  for (const auto& r : res.table.rows) {
    double rank = std::get<double>(r[*rc]);
    EXPECT_GT(rank, prev);
    prev = rank;
  }
}

TEST(Executor, ChartSpecIsByteStable) {
  const auto& ds = bt::fixture_dataset();
  auto p = plan("chart bar list=g500 metrics=profits top=7 years=2022", ds);
  auto a = canonical_json(*execute(p, ds).chart_spec);
  auto b = canonical_json(*execute(p, ds).chart_spec);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind(R"({"version":1,"chart_type":"bar","title":)", 0), 0u);
}

TEST(Executor, ScatterWithOneMetricIsInvalid) {
  const auto& ds = bt::fixture_dataset();
  auto p = plan("chart bar list=g500 metrics=revenue top=3 years=2024", ds);
  auto res = execute(p, ds);
  p.chart_type = ChartType::scatter;
  EXPECT_EQ(error_kind([&] { emit_chart_spec(res.table, p); }), ExecError::Kind::invalid_plan);
}

TEST(Executor, EmptyResultAgreesWithOracle) {
  auto ds = ingest_csv(csv({"g500,2023,1,Acme,,Tech,,US,,100,,,,,,", "g500,2024,1,Beta,,Energy,,US,,100,,,,,,"}),
                       "e.csv");
  auto p = plan("ranking list=g500 top=3 metric=revenue filter=sector:Energy years=2023", *ds);
  EXPECT_EQ(error_kind([&] { execute(p, *ds); }), ExecError::Kind::empty_result);
  EXPECT_EQ(error_kind([&] { oracle_execute(p, *ds); }), ExecError::Kind::empty_result);
}

TEST(Executor, SingleRowDataset) {
  auto ds = ingest_csv(csv({"g500,2023,1,Acme,,Tech,,US,,100,2,3,4,5,6,7"}), "s.csv");
  for (const char* text : {"metric company=Acme metric=revenue years=2023",
                           "ranking list=g500 top=5 metric=profits years=2023",
                           "chart bar list=g500 metrics=eps companies=Acme years=2023",
                           "chart scatter list=g500 metrics=revenue,assets top=2 years=2023",
                           "chart bar list=g500 metrics=revenue group=sector:avg years=2023"}) {
    auto p = plan(text, *ds);
    EXPECT_EQ(execute(p, *ds).table, oracle_execute(p, *ds)) << text;
  }
}

TEST(Executor, BudgetExceededGivesNoTable) {
  const auto& ds = bt::fixture_dataset();
  auto p = plan("chart line list=g500 metrics=revenue top=10 years=2015-2024", ds);
  SandboxLimits tiny;
  tiny.max_rows_scanned = 10;
  EXPECT_EQ(error_kind([&] { execute(p, ds, tiny); }), ExecError::Kind::budget_exceeded);
  SandboxLimits out_rows;
  out_rows.max_output_rows = 5;
  EXPECT_EQ(error_kind([&] { execute(p, ds, out_rows); }), ExecError::Kind::budget_exceeded);
  SandboxLimits no_time;
  no_time.wall_clock_budget = std::chrono::milliseconds(0);
  EXPECT_EQ(error_kind([&] { execute(p, ds, no_time); }), ExecError::Kind::budget_exceeded);
}

// execute and oracle_execute share no selection code; they must agree on
// every random valid plan, including which error they raise.
TEST(Executor, MatchesOracleOnRandomPlans) {
  const auto& ds = bt::fixture_dataset();
  Rng rng(1000);
  auto t0 = std::chrono::steady_clock::now();
  int errors = 0;
  for (int i = 0; i < 1000; ++i) {
    auto p = bt::random_plan(rng, ds);
    std::optional<ResultTable> a, b;
    std::optional<ExecError::Kind> ea, eb;
    try {
      a = execute(p, ds).table;
    } catch (const ExecError& e) {
      ea = e.kind();
    }
    try {
      b = oracle_execute(p, ds);
    } catch (const ExecError& e) {
      eb = e.kind();
    }
    ASSERT_EQ(ea, eb) << canonical_form(p);
    if (ea) {
      ++errors;
      continue;
    }
    ASSERT_EQ(*a, *b) << canonical_form(p);
  }
  auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 30.0);
  EXPECT_LT(errors, 500);
}

// Every plotted number is a stored cell or an aggregate of stored cells.
TEST(Executor, ChartValuesAreGrounded) {
  const auto& ds = bt::fixture_dataset();
  std::set<double> cells;
  for (const auto& r : ds.records()) {
    for (Metric m : kAllMetrics) {
      if (auto v = r.value(m)) cells.insert(*v);
    }
    cells.insert(r.year);
  }
  Rng rng(8);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto p = bt::random_plan(rng, ds);
    if (p.intent != Intent::chart || p.group) continue;
    try {
      auto res = execute(p, ds);
      for (const auto& row : (*res.chart_spec)["rows"]) {
        for (const auto& [k, v] : row.items()) {
          if (v.is_number()) {
            ASSERT_TRUE(cells.count(v.get<double>())) << k << "=" << v << " in " << canonical_form(p);
          }
        }
      }
      ++checked;
    } catch (const ExecError&) {
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Executor, GroupedAggregatesMatchManualSum) {
  const auto& ds = bt::fixture_dataset();
  auto res = execute(plan("chart bar list=g500 metrics=revenue group=sector:sum years=2024", ds), ds);
  std::map<std::string, double> manual;
  for (const auto& r : ds.records()) {
    if (r.list_id == "g500" && r.year == 2024 && r.revenue) manual[r.sector] += *r.revenue;
  }
  auto sc = *res.table.column_index("sector");
  auto vc = *res.table.column_index(aggregate_field(Metric::revenue, Aggregation::sum));
  ASSERT_EQ(res.table.rows.size(), manual.size());
  for (const auto& row : res.table.rows) {
    double got = std::get<double>(row[vc]);
    double want = manual.at(std::get<std::string>(row[sc]));
    EXPECT_NEAR(got, want, 1e-9 * std::abs(want));
  }
}
