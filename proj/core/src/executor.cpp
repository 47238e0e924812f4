#include "bizlens/executor.hpp"

#include <algorithm>
#include <set>
#include <span>

#include "bizlens/text.hpp"

namespace bizlens {

std::string_view column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::temporal: return "temporal";
    case ColumnKind::quantitative: return "quantitative";
  }
  return "categorical";
}

std::string_view exec_error_name(ExecError::Kind k) {
  switch (k) {
    case ExecError::Kind::budget_exceeded: return "budget_exceeded";
    case ExecError::Kind::empty_result: return "empty_result";
    case ExecError::Kind::column_absent: return "column_absent";
    case ExecError::Kind::invalid_plan: return "invalid_plan";
  }
  return "invalid_plan";
}

std::optional<std::size_t> ResultTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::string metric_field(Metric m) { return std::string(metric_column(m)); }

std::string aggregate_field(Metric m, Aggregation agg) {
  if (agg == Aggregation::count) return "company_count";
  return metric_field(m) + "_" + std::string(aggregation_name(agg));
}

namespace {

Json cell_json(const Cell& c) {
  if (std::holds_alternative<double>(c)) return std::get<double>(c);
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return nullptr;
}

}  // namespace

Json table_to_json(const ResultTable& t) {
  Json j;
  j["columns"] = Json::array();
  for (const auto& c : t.columns) {
    Json col;
    col["name"] = c.name;
    col["kind"] = std::string(column_kind_name(c.kind));
    col["unit"] = c.unit.empty() ? Json(nullptr) : Json(c.unit);
    j["columns"].push_back(col);
  }
  j["rows"] = Json::array();
  for (const auto& r : t.rows) {
    Json row = Json::array();
    for (const auto& c : r) row.push_back(cell_json(c));
    j["rows"].push_back(row);
  }
  j["provenance"] = {{"plan", t.provenance.plan}, {"dataset_fingerprint", t.provenance.dataset_fingerprint}};
  return j;
}

namespace {

class Budget {
 public:
  explicit Budget(const SandboxLimits& limits) : limits_(limits), start_(std::chrono::steady_clock::now()) {}

  void scan(std::size_t n) {
    scanned_ += n;
    if (scanned_ > limits_.max_rows_scanned) {
      throw ExecError(ExecError::Kind::budget_exceeded,
                      "scanned more than " + std::to_string(limits_.max_rows_scanned) + " rows");
    }
    check_clock();
  }

  void check_clock() const {
    if (std::chrono::steady_clock::now() - start_ > limits_.wall_clock_budget) {
      throw ExecError(ExecError::Kind::budget_exceeded,
                      "exceeded the " + std::to_string(limits_.wall_clock_budget.count()) + " ms budget");
    }
  }

  void output(std::size_t rows) const {
    if (rows > limits_.max_output_rows) {
      throw ExecError(ExecError::Kind::budget_exceeded,
                      "result exceeds " + std::to_string(limits_.max_output_rows) + " rows");
    }
  }

 private:
  SandboxLimits limits_;
  std::chrono::steady_clock::time_point start_;
  std::size_t scanned_ = 0;
};

/// Records of one (list, year) slice, in rank order.
std::span<const CompanyRecord> slice(const Dataset& ds, const std::string& list_id, int year) {
  const auto& recs = ds.records();
  auto lo = std::lower_bound(recs.begin(), recs.end(), std::make_pair(std::string_view(list_id), year),
                             [](const CompanyRecord& r, const std::pair<std::string_view, int>& k) {
                               return std::make_pair(std::string_view(r.list_id), r.year) < k;
                             });
  auto hi = lo;
  while (hi != recs.end() && hi->list_id == list_id && hi->year == year) ++hi;
  return {lo, hi};
}

std::span<const CompanyRecord> list_slice(const Dataset& ds, const std::string& list_id) {
  const auto& recs = ds.records();
  auto lo = std::lower_bound(recs.begin(), recs.end(), std::string_view(list_id),
                             [](const CompanyRecord& r, std::string_view k) { return r.list_id < k; });
  auto hi = std::upper_bound(lo, recs.end(), std::string_view(list_id),
                             [](std::string_view k, const CompanyRecord& r) { return k < r.list_id; });
  return {lo, hi};
}

Cell metric_cell(const CompanyRecord& r, Metric m) {
  auto v = r.value(m);
  return v ? Cell(*v) : Cell(std::monostate{});
}

bool passes_filter(const CompanyRecord& r, const std::optional<FilterSpec>& f) {
  if (!f) return true;
  return (f->field == GroupField::sector ? r.sector : r.country) == f->value;
}

/// Ranking order for top-k: by the metric (rank ascending, others descending),
/// then lower stored rank, then company.
struct TopKLess {
  Metric m;
  const Dataset* ds;
  bool operator()(const CompanyRecord* a, const CompanyRecord* b) const {
    if (m != Metric::rank) {
      double va = *a->value(m), vb = *b->value(m);
      if (va != vb) return va > vb;
    }
    if (a->rank != b->rank) return a->rank < b->rank;
    return ds->canonical_name(*a) < ds->canonical_name(*b);
  }
};

std::vector<const CompanyRecord*> select_year(const QueryPlan& plan, const Dataset& ds, int year, Budget& budget) {
  auto recs = slice(ds, plan.list_id, year);
  budget.scan(recs.size());
  std::set<std::string_view> named(plan.companies.begin(), plan.companies.end());
  std::vector<const CompanyRecord*> out;
  for (const auto& r : recs) {
    if (!passes_filter(r, plan.filter)) continue;
    if (!named.empty() && !named.count(ds.canonical_name(r))) continue;
    out.push_back(&r);
  }
  if (plan.top_k) {
    Metric primary = plan.metrics.front();
    std::erase_if(out, [&](const CompanyRecord* r) { return !r->value(primary).has_value(); });
    std::stable_sort(out.begin(), out.end(), TopKLess{primary, &ds});
    if (out.size() > static_cast<std::size_t>(*plan.top_k)) out.resize(static_cast<std::size_t>(*plan.top_k));
  }
  return out;
}

Column metric_col(Metric m) { return {metric_field(m), ColumnKind::quantitative, std::string(metric_unit(m))}; }

void require_columns(const QueryPlan& plan, const Dataset& ds, Budget& budget) {
  auto recs = list_slice(ds, plan.list_id);
  for (auto m : plan.metrics) {
    if (m == Metric::rank) continue;
    if (plan.group && plan.group->agg == Aggregation::count) continue;
    budget.scan(recs.size());
    bool any = std::any_of(recs.begin(), recs.end(), [&](const CompanyRecord& r) { return r.value(m).has_value(); });
    if (!any) {
      throw ExecError(ExecError::Kind::column_absent,
                      "the " + ds.catalog().display_name(plan.list_id) + " has no " +
                          std::string(metric_label(m)) + " values");
    }
  }
}

struct Row {
  const CompanyRecord* rec = nullptr;  // null for grouped rows
  std::string key;                     // company or group value
  int year = 0;
  std::optional<double> primary;
  std::vector<Cell> cells;
};

/// Descending by primary value with missing last.
bool value_desc(const std::optional<double>& a, const std::optional<double>& b, bool& decided) {
  decided = true;
  if (a.has_value() != b.has_value()) return a.has_value();
  if (a && *a != *b) return *a > *b;
  decided = false;
  return false;
}

ResultTable run_grouped(const QueryPlan& plan, const Dataset& ds, Budget& budget) {
  const auto& g = *plan.group;
  Metric m = plan.metrics.front();
  ResultTable t;
  t.columns = {{std::string(group_field_name(g.field)), ColumnKind::categorical, ""},
               {"year", ColumnKind::temporal, ""},
               {aggregate_field(m, g.agg), ColumnKind::quantitative,
                g.agg == Aggregation::count ? "companies" : std::string(metric_unit(m))}};
  std::vector<Row> rows;
  for (int year : plan.boundary.effective_years) {
    auto members = select_year(plan, ds, year, budget);
    // Groups in first-appearance (rank) order; values accumulate in rank order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const CompanyRecord*>> groups;
    for (const auto* r : members) {
      const auto& key = g.field == GroupField::sector ? r->sector : r->country;
      if (!groups.count(key)) order.push_back(key);
      groups[key].push_back(r);
    }
    for (const auto& key : order) {
      const auto& rs = groups[key];
      std::optional<double> v;
      if (g.agg == Aggregation::count) {
        v = static_cast<double>(rs.size());
      } else {
        double acc = 0;
        std::size_t n = 0;
        for (const auto* r : rs) {
          auto x = r->value(m);
          if (!x) continue;
          if (g.agg == Aggregation::sum || g.agg == Aggregation::avg) acc = n ? acc + *x : *x;
          if (g.agg == Aggregation::min) acc = n ? std::min(acc, *x) : *x;
          if (g.agg == Aggregation::max) acc = n ? std::max(acc, *x) : *x;
          ++n;
        }
        if (n) v = g.agg == Aggregation::avg ? acc / static_cast<double>(n) : acc;
      }
      Row row{nullptr, key, year, v, {key, static_cast<double>(year), v ? Cell(*v) : Cell(std::monostate{})}};
      rows.push_back(std::move(row));
    }
  }
  bool bar = plan.chart_type == ChartType::bar;
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (bar) {
      bool decided;
      bool less = value_desc(a.primary, b.primary, decided);
      if (decided) return less;
      if (a.year != b.year) return a.year < b.year;
      return a.key < b.key;
    }
    if (a.key != b.key) return a.key < b.key;
    return a.year < b.year;
  });
  for (auto& r : rows) t.rows.push_back(std::move(r.cells));
  return t;
}

ResultTable run(const QueryPlan& plan, const Dataset& ds, Budget& budget) {
  if (plan.intent == Intent::chart && plan.group) return run_grouped(plan, ds, budget);

  ResultTable t;
  std::vector<Row> rows;
  const auto& years = plan.boundary.effective_years;

  switch (plan.intent) {
    case Intent::metric_qa: {
      t.columns = {{"company", ColumnKind::categorical, ""}, {"year", ColumnKind::temporal, ""}};
      for (auto m : plan.metrics) t.columns.push_back(metric_col(m));
      for (int year : years) {
        budget.scan(1);
        const auto* r = ds.find(plan.list_id, year, plan.companies.front());
        if (!r) continue;
        Row row{r, plan.companies.front(), year, std::nullopt, {plan.companies.front(), static_cast<double>(year)}};
        for (auto m : plan.metrics) row.cells.push_back(metric_cell(*r, m));
        rows.push_back(std::move(row));
      }
      break;
    }
    case Intent::ranking_qa: {
      Metric m = plan.metrics.front();
      t.columns = {{"rank", ColumnKind::quantitative, "rank"},
                   {"company", ColumnKind::categorical, ""},
                   {"year", ColumnKind::temporal, ""}};
      if (m != Metric::rank) t.columns.push_back(metric_col(m));
      for (int year : years) {
        for (const auto* r : select_year(plan, ds, year, budget)) {
          Row row{r, ds.canonical_name(*r), year, std::nullopt,
                  {static_cast<double>(r->rank), ds.canonical_name(*r), static_cast<double>(year)}};
          if (m != Metric::rank) row.cells.push_back(metric_cell(*r, m));
          rows.push_back(std::move(row));
        }
      }
      break;
    }
    case Intent::chart: {
      t.columns = {{"company", ColumnKind::categorical, ""},
                   {"year", ColumnKind::temporal, ""},
                   {"rank", ColumnKind::quantitative, "rank"}};
      for (auto m : plan.metrics) t.columns.push_back(metric_col(m));
      for (int year : years) {
        for (const auto* r : select_year(plan, ds, year, budget)) {
          Row row{r, ds.canonical_name(*r), year, r->value(plan.metrics.front()),
                  {ds.canonical_name(*r), static_cast<double>(year), static_cast<double>(r->rank)}};
          for (auto m : plan.metrics) row.cells.push_back(metric_cell(*r, m));
          rows.push_back(std::move(row));
        }
      }
      auto type = *plan.chart_type;
      std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
        if (type == ChartType::bar) {
          bool decided;
          bool less = value_desc(a.primary, b.primary, decided);
          if (decided) return less;
          if (a.year != b.year) return a.year < b.year;
          if (a.rec->rank != b.rec->rank) return a.rec->rank < b.rec->rank;
          return a.key < b.key;
        }
        if (type == ChartType::line) {
          if (a.key != b.key) return a.key < b.key;
          return a.year < b.year;
        }
        if (a.year != b.year) return a.year < b.year;
        if (a.rec->rank != b.rec->rank) return a.rec->rank < b.rec->rank;
        return a.key < b.key;
      });
      break;
    }
    default:
      throw ExecError(ExecError::Kind::invalid_plan, "plan intent has no table");
  }
  for (auto& r : rows) t.rows.push_back(std::move(r.cells));
  return t;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string axis_label(Metric m) { return capitalize(std::string(metric_label(m))) + " (" + std::string(metric_unit(m)) + ")"; }

std::string aggregate_label(Metric m, Aggregation a) {
  switch (a) {
    case Aggregation::sum: return "Total " + std::string(metric_label(m));
    case Aggregation::avg: return "Average " + std::string(metric_label(m));
    case Aggregation::min: return "Minimum " + std::string(metric_label(m));
    case Aggregation::max: return "Maximum " + std::string(metric_label(m));
    case Aggregation::count: return "Number of companies";
  }
  return "";
}

}  // namespace

ExecutionResult execute(const QueryPlan& plan, const Dataset& ds, const SandboxLimits& limits) {
  if (auto bad = validate_plan(plan)) throw ExecError(ExecError::Kind::invalid_plan, *bad);
  if (plan.intent != Intent::metric_qa && plan.intent != Intent::ranking_qa && plan.intent != Intent::chart) {
    throw ExecError(ExecError::Kind::invalid_plan, "only metric, ranking and chart plans execute");
  }
  if (plan.boundary.kind == BoundaryOutcome::Kind::reject) {
    throw ExecError(ExecError::Kind::invalid_plan, "rejected plans do not execute");
  }
  if (!ds.catalog().lists.count(plan.list_id)) {
    throw ExecError(ExecError::Kind::invalid_plan, "unknown list '" + plan.list_id + "'");
  }
  Budget budget(limits);
  require_columns(plan, ds, budget);
  ExecutionResult out;
  out.table = run(plan, ds, budget);
  budget.output(out.table.rows.size());
  budget.check_clock();
  if (out.table.rows.empty()) throw ExecError(ExecError::Kind::empty_result, "no rows match the plan");
  out.table.provenance = {canonical_form(plan), ds.fingerprint()};
  if (plan.intent == Intent::chart) {
    out.chart_spec = emit_chart_spec(out.table, plan);
    if (out.chart_spec->at("rows").empty()) {
      throw ExecError(ExecError::Kind::empty_result, "every selected row lacks the charted value");
    }
  }
  return out;
}

Json emit_chart_spec(const ResultTable& table, const QueryPlan& plan) {
  auto invalid = [](const std::string& why) { return ExecError(ExecError::Kind::invalid_plan, why); };
  if (plan.intent != Intent::chart || !plan.chart_type) throw invalid("not a chart plan");
  auto type = *plan.chart_type;
  if (plan.metrics.empty()) throw invalid("chart without a metric");
  if (type == ChartType::scatter && plan.metrics.size() != 2) throw invalid("scatter plots need exactly two metrics");
  if (type != ChartType::scatter && plan.metrics.size() != 1) throw invalid("bar and line charts show one metric");
  if (type == ChartType::scatter && plan.group) throw invalid("grouped scatter plots are not supported");

  auto years = plan.boundary.effective_years;
  bool multi_year = years.size() > 1;
  Metric m0 = plan.metrics.front();
  Json x, y;
  Json series = nullptr;
  std::string title;
  std::string year_text = format_years(years);

  if (plan.group) {
    auto gfield = std::string(group_field_name(plan.group->field));
    y = {{"field", aggregate_field(m0, plan.group->agg)},
         {"label", aggregate_label(m0, plan.group->agg)},
         {"kind", "quantitative"},
         {"unit", plan.group->agg == Aggregation::count ? "companies" : std::string(metric_unit(m0))}};
    if (type == ChartType::bar) {
      x = {{"field", gfield}, {"label", capitalize(gfield)}, {"kind", "categorical"}};
      if (multi_year) series = "year";
    } else {
      x = {{"field", "year"}, {"label", "Year"}, {"kind", "temporal"}};
      series = gfield;
    }
    title = aggregate_label(m0, plan.group->agg) + " by " + gfield + ", " + year_text;
  } else if (type == ChartType::scatter) {
    Metric m1 = plan.metrics[1];
    x = {{"field", metric_field(m0)}, {"label", axis_label(m0)}, {"kind", "quantitative"}};
    y = {{"field", metric_field(m1)}, {"label", axis_label(m1)}, {"kind", "quantitative"},
         {"unit", std::string(metric_unit(m1))}};
    if (multi_year) series = "year";
    title = capitalize(std::string(metric_label(m0))) + " vs " + std::string(metric_label(m1)) + ", " + year_text;
  } else {
    y = {{"field", metric_field(m0)}, {"label", axis_label(m0)}, {"kind", "quantitative"},
         {"unit", std::string(metric_unit(m0))}};
    if (type == ChartType::bar) {
      x = {{"field", "company"}, {"label", "Company"}, {"kind", "categorical"}};
      if (multi_year) series = "year";
      title = capitalize(std::string(metric_label(m0))) + " by company, " + year_text;
    } else {
      x = {{"field", "year"}, {"label", "Year"}, {"kind", "temporal"}};
      if (plan.companies.size() > 1 || plan.top_k) series = "company";
      title = capitalize(std::string(metric_label(m0))) + ", " + year_text;
    }
  }

  auto col = [&](const Json& field) -> std::size_t {
    auto idx = table.column_index(field.get<std::string>());
    if (!idx) throw ExecError(ExecError::Kind::column_absent, "result has no column '" + field.get<std::string>() + "'");
    return *idx;
  };
  std::size_t xi = col(x["field"]), yi = col(y["field"]);
  std::optional<std::size_t> si;
  if (!series.is_null()) si = col(series);
  std::optional<std::size_t> ci;
  if (type == ChartType::scatter && !plan.group) ci = col("company");

  Json rows = Json::array();
  for (const auto& r : table.rows) {
    if (std::holds_alternative<std::monostate>(r[xi]) || std::holds_alternative<std::monostate>(r[yi])) continue;
    Json row = Json::object();
    if (ci) row["company"] = cell_json(r[*ci]);
    row[x["field"].get<std::string>()] = cell_json(r[xi]);
    row[y["field"].get<std::string>()] = cell_json(r[yi]);
    if (si) row[series.get<std::string>()] = cell_json(r[*si]);
    rows.push_back(std::move(row));
  }

  Json spec;
  spec["version"] = 1;
  spec["chart_type"] = std::string(chart_type_name(type));
  spec["title"] = title;
  spec["x"] = x;
  spec["y"] = y;
  spec["series_field"] = series;
  spec["rows"] = rows;
  return spec;
}

}  // namespace bizlens
