// Naive reference executor. Shares no selection or ordering code with
// executor.cpp: every step is a full scan followed by selection sorting.

#include <cmath>
#include <functional>
#include <map>

#include "bizlens/executor.hpp"

namespace bizlens {

namespace {

using Before = std::function<bool(std::size_t, std::size_t)>;

// Stable selection sort of indices: repeatedly take the first minimum.
std::vector<std::size_t> order_by(std::size_t n, const Before& before) {
  std::vector<std::size_t> rest(n);
  for (std::size_t i = 0; i < n; ++i) rest[i] = i;
  std::vector<std::size_t> out;
  while (!rest.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < rest.size(); ++j) {
      if (before(rest[j], rest[best])) best = j;
    }
    out.push_back(rest[best]);
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

bool contains(const std::vector<int>& v, int x) {
  for (int y : v) {
    if (y == x) return true;
  }
  return false;
}

bool contains(const std::vector<std::string>& v, const std::string& x) {
  for (const auto& y : v) {
    if (y == x) return true;
  }
  return false;
}

Cell cell_of(std::optional<double> v) { return v ? Cell(*v) : Cell(std::monostate{}); }

// Records of the plan's list and years that pass filter and named-company
// constraints, in (year, rank) order.
std::vector<const CompanyRecord*> eligible(const QueryPlan& plan, const Dataset& ds) {
  std::vector<const CompanyRecord*> found;
  for (const auto& r : ds.records()) {
    if (r.list_id != plan.list_id) continue;
    if (!contains(plan.boundary.effective_years, r.year)) continue;
    if (plan.filter) {
      const std::string& v = plan.filter->field == GroupField::sector ? r.sector : r.country;
      if (v != plan.filter->value) continue;
    }
    if (!plan.companies.empty() && !contains(plan.companies, ds.canonical_name(r))) continue;
    found.push_back(&r);
  }
  auto idx = order_by(found.size(), [&](std::size_t a, std::size_t b) {
    if (found[a]->year != found[b]->year) return found[a]->year < found[b]->year;
    return found[a]->rank < found[b]->rank;
  });
  std::vector<const CompanyRecord*> out;
  for (auto i : idx) out.push_back(found[i]);
  return out;
}

// Keeps the best k per year by the primary metric.
std::vector<const CompanyRecord*> top_per_year(const std::vector<const CompanyRecord*>& recs, Metric m, int k,
                                               const Dataset& ds) {
  std::vector<const CompanyRecord*> out;
  for (int year : [&] {
         std::vector<int> ys;
         for (const auto* r : recs) {
           if (!contains(ys, r->year)) ys.push_back(r->year);
         }
         return ys;
       }()) {
    std::vector<const CompanyRecord*> pool;
    for (const auto* r : recs) {
      if (r->year == year && r->value(m)) pool.push_back(r);
    }
    auto idx = order_by(pool.size(), [&](std::size_t a, std::size_t b) {
      double va = *pool[a]->value(m), vb = *pool[b]->value(m);
      if (m != Metric::rank && va != vb) return va > vb;
      if (pool[a]->rank != pool[b]->rank) return pool[a]->rank < pool[b]->rank;
      return ds.canonical_name(*pool[a]) < ds.canonical_name(*pool[b]);
    });
    for (std::size_t i = 0; i < idx.size() && static_cast<int>(i) < k; ++i) out.push_back(pool[idx[i]]);
  }
  return out;
}

Column quantity(Metric m) { return {metric_field(m), ColumnKind::quantitative, std::string(metric_unit(m))}; }

// Descending value, missing last; returns nullopt on a tie.
std::optional<bool> desc(const Cell& a, const Cell& b) {
  bool ha = std::holds_alternative<double>(a), hb = std::holds_alternative<double>(b);
  if (ha && !hb) return true;
  if (!ha && hb) return false;
  if (ha && std::get<double>(a) != std::get<double>(b)) return std::get<double>(a) > std::get<double>(b);
  return std::nullopt;
}

ResultTable oracle_table(const QueryPlan& plan, const Dataset& ds) {
  if (validate_plan(plan) || plan.boundary.kind == BoundaryOutcome::Kind::reject ||
      (plan.intent != Intent::metric_qa && plan.intent != Intent::ranking_qa && plan.intent != Intent::chart)) {
    throw ExecError(ExecError::Kind::invalid_plan, "plan cannot be executed");
  }
  // a requested metric with no value anywhere in the list is an absent column
  for (auto m : plan.metrics) {
    if (m == Metric::rank || (plan.group && plan.group->agg == Aggregation::count)) continue;
    bool seen = false;
    for (const auto& r : ds.records()) {
      if (r.list_id == plan.list_id && r.value(m)) seen = true;
    }
    if (!seen) throw ExecError(ExecError::Kind::column_absent, "metric has no values in the list");
  }
  ResultTable t;
  t.provenance = {canonical_form(plan), ds.fingerprint()};

  if (plan.intent == Intent::metric_qa) {
    t.columns = {{"company", ColumnKind::categorical, ""}, {"year", ColumnKind::temporal, ""}};
    for (auto m : plan.metrics) t.columns.push_back(quantity(m));
    for (const auto* r : eligible(plan, ds)) {
      std::vector<Cell> row{ds.canonical_name(*r), static_cast<double>(r->year)};
      for (auto m : plan.metrics) row.push_back(cell_of(r->value(m)));
      t.rows.push_back(row);
    }
    return t;
  }

  if (plan.intent == Intent::ranking_qa) {
    Metric m = plan.metrics.at(0);
    t.columns = {{"rank", ColumnKind::quantitative, "rank"},
                 {"company", ColumnKind::categorical, ""},
                 {"year", ColumnKind::temporal, ""}};
    if (m != Metric::rank) t.columns.push_back(quantity(m));
    for (const auto* r : top_per_year(eligible(plan, ds), m, plan.top_k.value_or(0), ds)) {
      std::vector<Cell> row{static_cast<double>(r->rank), ds.canonical_name(*r), static_cast<double>(r->year)};
      if (m != Metric::rank) row.push_back(cell_of(r->value(m)));
      t.rows.push_back(row);
    }
    return t;
  }

  if (plan.intent != Intent::chart || !plan.chart_type) return t;
  auto recs = eligible(plan, ds);
  if (plan.top_k) recs = top_per_year(recs, plan.metrics.at(0), *plan.top_k, ds);
  bool bar = *plan.chart_type == ChartType::bar;

  if (plan.group) {
    Metric m = plan.metrics.at(0);
    auto agg = plan.group->agg;
    t.columns = {{std::string(group_field_name(plan.group->field)), ColumnKind::categorical, ""},
                 {"year", ColumnKind::temporal, ""},
                 {aggregate_field(m, agg), ColumnKind::quantitative,
                  agg == Aggregation::count ? "companies" : std::string(metric_unit(m))}};
    // (group, year) -> values in rank order
    std::vector<std::pair<std::string, int>> keys;
    std::vector<std::vector<const CompanyRecord*>> members;
    for (const auto* r : recs) {
      std::pair<std::string, int> key{plan.group->field == GroupField::sector ? r->sector : r->country, r->year};
      std::size_t at = keys.size();
      for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] == key) at = i;
      }
      if (at == keys.size()) {
        keys.push_back(key);
        members.emplace_back();
      }
      members[at].push_back(r);
    }
    std::vector<std::vector<Cell>> rows;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      Cell value = std::monostate{};
      if (agg == Aggregation::count) {
        value = static_cast<double>(members[i].size());
      } else {
        std::vector<double> xs;
        for (const auto* r : members[i]) {
          if (auto v = r->value(m)) xs.push_back(*v);
        }
        if (!xs.empty()) {
          double acc = xs[0];
          for (std::size_t j = 1; j < xs.size(); ++j) {
            if (agg == Aggregation::sum || agg == Aggregation::avg) acc += xs[j];
            if (agg == Aggregation::min && xs[j] < acc) acc = xs[j];
            if (agg == Aggregation::max && xs[j] > acc) acc = xs[j];
          }
          if (agg == Aggregation::avg) acc /= static_cast<double>(xs.size());
          value = acc;
        }
      }
      rows.push_back({keys[i].first, static_cast<double>(keys[i].second), value});
    }
    auto idx = order_by(rows.size(), [&](std::size_t a, std::size_t b) {
      const auto& ga = std::get<std::string>(rows[a][0]);
      const auto& gb = std::get<std::string>(rows[b][0]);
      double ya = std::get<double>(rows[a][1]), yb = std::get<double>(rows[b][1]);
      if (bar) {
        if (auto d = desc(rows[a][2], rows[b][2])) return *d;
        if (ya != yb) return ya < yb;
        return ga < gb;
      }
      if (ga != gb) return ga < gb;
      return ya < yb;
    });
    for (auto i : idx) t.rows.push_back(rows[i]);
    return t;
  }

  t.columns = {{"company", ColumnKind::categorical, ""},
               {"year", ColumnKind::temporal, ""},
               {"rank", ColumnKind::quantitative, "rank"}};
  for (auto m : plan.metrics) t.columns.push_back(quantity(m));
  std::vector<std::vector<Cell>> rows;
  for (const auto* r : recs) {
    std::vector<Cell> row{ds.canonical_name(*r), static_cast<double>(r->year), static_cast<double>(r->rank)};
    for (auto m : plan.metrics) row.push_back(cell_of(r->value(m)));
    rows.push_back(row);
  }
  auto type = *plan.chart_type;
  auto idx = order_by(rows.size(), [&](std::size_t a, std::size_t b) {
    const auto& ca = std::get<std::string>(rows[a][0]);
    const auto& cb = std::get<std::string>(rows[b][0]);
    double ya = std::get<double>(rows[a][1]), yb = std::get<double>(rows[b][1]);
    double ra = std::get<double>(rows[a][2]), rb = std::get<double>(rows[b][2]);
    if (type == ChartType::line) {
      if (ca != cb) return ca < cb;
      return ya < yb;
    }
    if (type == ChartType::bar) {
      if (auto d = desc(rows[a][3], rows[b][3])) return *d;
    }
    if (ya != yb) return ya < yb;
    if (ra != rb) return ra < rb;
    return ca < cb;
  });
  for (auto i : idx) t.rows.push_back(rows[i]);
  return t;
}

}  // namespace

ResultTable oracle_execute(const QueryPlan& plan, const Dataset& ds) {
  ResultTable t = oracle_table(plan, ds);
  if (t.rows.empty()) throw ExecError(ExecError::Kind::empty_result, "no rows match the plan");
  if (plan.intent == Intent::chart) {
    // A chart needs one row with every plotted value present.
    std::vector<std::string> plotted;
    if (plan.group) {
      plotted.push_back(aggregate_field(plan.metrics.front(), plan.group->agg));
    } else {
      for (Metric m : plan.metrics) plotted.push_back(metric_field(m));
    }
    bool drawable = false;
    for (const auto& row : t.rows) {
      bool all = true;
      for (const auto& name : plotted) {
        auto c = t.column_index(name);
        all = all && c && std::holds_alternative<double>(row[*c]);
      }
      drawable = drawable || all;
    }
    if (!drawable) throw ExecError(ExecError::Kind::empty_result, "every selected row lacks the charted value");
  }
  return t;
}

}  // namespace bizlens
