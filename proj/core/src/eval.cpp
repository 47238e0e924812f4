#include "bizlens/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "bizlens/text.hpp"

namespace bizlens {

namespace {

std::vector<std::string> pool(const ConfigSection& sec, std::string_view key) {
  std::vector<std::string> out;
  for (const auto& v : sec.get_all(key)) {
    for (const auto& p : text::split(v, '|')) {
      auto t = std::string(text::trim(p));
      if (!t.empty()) out.push_back(t);
    }
  }
  return out;
}

// Replaces {slot} markers; an unknown slot is a template error.
std::string fill(const std::string& pattern, const std::map<std::string, std::string>& slots, const std::string& where) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '{') {
      out += pattern[i];
      continue;
    }
    auto close = pattern.find('}', i);
    if (close == std::string::npos) throw EvalTemplateError(where + ": unclosed '{'");
    auto name = pattern.substr(i + 1, close - i - 1);
    auto it = slots.find(name);
    if (it == slots.end()) throw EvalTemplateError(where + ": unknown slot {" + name + "}");
    out += it->second;
    i = close;
  }
  return out;
}

bool mentions(const EvalTemplate& t, const std::string& slot) {
  std::string marker = "{" + slot + "}";
  if (t.plan.find(marker) != std::string::npos) return true;
  return std::any_of(t.prompts.begin(), t.prompts.end(),
                     [&](const std::string& p) { return p.find(marker) != std::string::npos; });
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v.at(rng.below(v.size()));
}

std::string escape_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '%') out += "%25";
    else if (c == ',') out += "%2C";
    else if (c == '=') out += "%3D";
    else if (c == ':') out += "%3A";
    else if (c == '+') out += "%2B";
    else out += c;
  }
  return out;
}

// Companies of `list` present in every year of `years` with every metric set.
std::vector<std::string> companies_with(const Dataset& ds, const std::string& list, const std::vector<int>& years,
                                        const std::vector<Metric>& metrics) {
  std::vector<std::string> out;
  for (const auto& [name, info] : ds.catalog().companies) {
    bool ok = true;
    for (int y : years) {
      const auto* r = ds.find(list, y, name);
      if (!r) {
        ok = false;
        break;
      }
      for (auto m : metrics) {
        if (!r->value(m)) ok = false;
      }
    }
    if (ok) out.push_back(name);
  }
  return out;
}

std::vector<std::string> top_companies(const Dataset& ds, const std::string& list, int year, Metric m, int k) {
  std::vector<std::pair<const CompanyRecord*, std::string>> pool;
  for (const auto& r : ds.records()) {
    if (r.list_id == list && r.year == year && r.value(m)) pool.emplace_back(&r, ds.canonical_name(r));
  }
  std::sort(pool.begin(), pool.end(), [&](const auto& a, const auto& b) {
    double va = *a.first->value(m), vb = *b.first->value(m);
    if (m == Metric::rank) va = -va, vb = -vb;
    if (va != vb) return va > vb;
    if (a.first->rank != b.first->rank) return a.first->rank < b.first->rank;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < pool.size() && static_cast<int>(i) < k; ++i) out.push_back(pool[i].second);
  return out;
}

bool near(double a, double b) {
  return std::fabs(a - b) <= kValueRelTol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

bool cells_equal(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return near(a.get<double>(), b.get<double>());
  return a == b;
}

bool rows_equal(const Json& a, const Json& b) {
  if (a.is_object() && b.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !cells_equal(it.value(), b[it.key()])) return false;
    }
    return true;
  }
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!cells_equal(a[i], b[i])) return false;
    }
    return true;
  }
  return cells_equal(a, b);
}

std::vector<std::string> column_names(const ResultTable& t) {
  std::vector<std::string> out;
  for (const auto& c : t.columns) out.push_back(c.name);
  return out;
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

Json timing_json(const std::vector<double>& ms) {
  return {{"p50_ms", percentile(ms, 50)}, {"p95_ms", percentile(ms, 95)}, {"max_ms", percentile(ms, 100)}};
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::vector<std::string> out;
  for (const auto& line : text::split(read_file(p), '\n')) {
    auto t = std::string(text::trim(line));
    if (!t.empty() && t[0] != '#') out.push_back(t);
  }
  return out;
}

}  // namespace

EvalTemplates EvalTemplates::from_config(const ConfigFile& config) {
  EvalTemplates out;
  if (const auto* h = config.find("header")) out.header = h->get("note").value_or("");
  if (const auto* w = config.find("wording")) {
    for (const auto& e : w->entries) {
      for (const auto& p : text::split(e.value, '|')) {
        auto t = std::string(text::trim(p));
        if (!t.empty()) out.wording[e.key].push_back(t);
      }
    }
  }
  for (const auto& sec : config.sections()) {
    if (sec.name.rfind("template.", 0) != 0) continue;
    EvalTemplate t;
    t.id = sec.name.substr(9);
    t.suite = sec.require("suite");
    if (t.suite != "viz" && t.suite != "qa") {
      throw EvalTemplateError(config.source() + ": " + t.id + ": suite must be viz or qa");
    }
    t.kind = t.suite == "viz" ? sec.require("kind") : sec.require("rubric");
    if (t.suite == "viz" && t.kind != "bar" && t.kind != "line" && t.kind != "scatter" && t.kind != "table") {
      throw EvalTemplateError(config.source() + ": " + t.id + ": unknown kind '" + t.kind + "'");
    }
    if (t.suite == "qa" && std::none_of(std::begin(kRubrics), std::end(kRubrics),
                                        [&](const char* r) { return t.kind == r; })) {
      throw EvalTemplateError(config.source() + ": " + t.id + ": unknown rubric '" + t.kind + "'");
    }
    t.list = sec.get("list").value_or("g500");
    t.metrics = pool(sec, "metrics");
    t.metrics2 = pool(sec, "metrics2");
    t.aggs = pool(sec, "aggs");
    t.groups = pool(sec, "groups");
    t.plan = sec.require("plan");
    t.prompts = sec.get_all("prompt");
    if (t.prompts.empty()) throw EvalTemplateError(config.source() + ": " + t.id + ": no prompt lines");
    out.templates.push_back(std::move(t));
  }
  return out;
}

EvalTemplates EvalTemplates::load(const std::filesystem::path& path) {
  return from_config(ConfigFile::load(path));
}

std::vector<const EvalTemplate*> EvalTemplates::suite(const std::string& name) const {
  std::vector<const EvalTemplate*> out;
  for (const auto& t : templates) {
    if (t.suite == name) out.push_back(&t);
  }
  return out;
}

Json case_to_json(const BenchmarkCase& c) {
  Json j;
  j["case_id"] = c.case_id;
  j["template_id"] = c.template_id;
  j["suite"] = c.suite;
  j["kind"] = c.kind;
  j["prompt"] = c.prompt;
  j["intended_plan"] = c.intended_plan;
  j["expected_table"] = c.expected_table ? table_to_json(*c.expected_table) : Json(nullptr);
  j["expected_chart"] = c.expected_chart ? *c.expected_chart : Json(nullptr);
  j["expected"] = c.expected;
  return j;
}

namespace {

constexpr int kMaxDraws = 200;

struct Draw {
  std::map<std::string, std::string> slots;
  std::string list;
  std::optional<Metric> metric;
  std::string company;
  int year = 0;
  std::optional<int> c_latest;
  std::optional<int> nearest;
  int k = 0;
};

std::string phrase(Rng& rng, const EvalTemplates& tpl, const std::string& key, const std::string& fallback) {
  auto it = tpl.wording.find(key);
  if (it == tpl.wording.end() || it->second.empty()) return fallback;
  return pick(rng, it->second);
}

// One attempt at filling a template's slots; nullopt when the catalog has no
// fitting companies for the drawn years.
std::optional<Draw> draw_slots(const EvalTemplate& t, const EvalTemplates& tpl, const Dataset& ds, Rng& rng,
                               Date ref_date) {
  Draw d;
  d.list = t.list;
  auto& s = d.slots;
  const auto& cat = ds.catalog();
  auto cov = coverage(cat, t.list);
  s["list"] = t.list;
  s["list_text"] = phrase(rng, tpl, "list." + t.list, cat.display_name(t.list));
  s["ref_year"] = std::to_string(year_of(ref_date));
  s["latest"] = std::to_string(cov.cutoff_year);

  std::vector<Metric> needed;
  if (!t.metrics.empty()) {
    auto m = metric_from_id(pick(rng, t.metrics));
    if (!m) throw EvalTemplateError(t.id + ": unknown metric in pool");
    d.metric = *m;
    needed.push_back(*m);
    s["metric"] = std::string(metric_id(*m));
    s["metric_text"] = phrase(rng, tpl, "metric." + s["metric"], std::string(metric_label(*m)));
  }
  if (!t.metrics2.empty()) {
    std::vector<std::string> rest;
    for (const auto& id : t.metrics2) {
      if (id != s["metric"]) rest.push_back(id);
    }
    if (rest.empty()) throw EvalTemplateError(t.id + ": metrics2 pool has nothing distinct from metrics");
    auto m = metric_from_id(pick(rng, rest));
    if (!m) throw EvalTemplateError(t.id + ": unknown metric in pool");
    needed.push_back(*m);
    s["metric2"] = std::string(metric_id(*m));
    s["metric2_text"] = phrase(rng, tpl, "metric." + s["metric2"], std::string(metric_label(*m)));
  }
  if (!t.aggs.empty()) {
    s["agg"] = pick(rng, t.aggs);
    s["agg_text"] = phrase(rng, tpl, "agg." + s["agg"], s["agg"]);
  }
  if (!t.groups.empty()) {
    s["group"] = pick(rng, t.groups);
    s["group_text"] = phrase(rng, tpl, "group." + s["group"], "by " + s["group"]);
  }

  // Years: a single year, or a covered range y1..y2.
  std::vector<int> years;
  if (mentions(t, "y1")) {
    std::vector<int> ys = cov.years;
    if (ys.size() < 2) return std::nullopt;
    int y1 = ys[rng.below(ys.size() - 1)];
    std::vector<int> later;
    for (int y : ys) {
      if (y > y1) later.push_back(y);
    }
    int y2 = pick(rng, later);
    for (int y = y1; y <= y2; ++y) {
      if (!std::binary_search(ys.begin(), ys.end(), y)) return std::nullopt;
      years.push_back(y);
    }
    s["y1"] = std::to_string(y1);
    s["y2"] = std::to_string(y2);
    s["span"] = format_years(years);
  }
  d.year = pick(rng, cov.years);
  s["year"] = std::to_string(d.year);
  if (years.empty()) years = {d.year};

  if (mentions(t, "future_year")) {
    s["future_year"] = std::to_string(std::max(year_of(ref_date), cov.cutoff_year) + 1 + static_cast<int>(rng.below(3)));
  }
  if (mentions(t, "gap_year")) {
    std::vector<int> gaps;
    for (int y = cov.years.front(); y < cov.years.back(); ++y) {
      if (!std::binary_search(cov.years.begin(), cov.years.end(), y)) gaps.push_back(y);
    }
    if (gaps.empty()) throw EvalTemplateError(t.id + ": list " + t.list + " has no gap years");
    int g = pick(rng, gaps);
    d.nearest = nearest_year(cov.years, g);
    s["gap_year"] = std::to_string(g);
    s["nearest"] = std::to_string(*d.nearest);
  }
  if (mentions(t, "k")) {
    d.k = static_cast<int>(rng.between(3, 10));
    s["k"] = std::to_string(d.k);
  }
  if (mentions(t, "sector") || mentions(t, "country")) {
    // a sector or country with at least one company in every drawn year
    std::set<std::string> sectors, countries;
    bool first = true;
    for (int y : years) {
      std::set<std::string> ys_sec, ys_cty;
      for (const auto& r : ds.records()) {
        if (r.list_id != t.list || r.year != y) continue;
        bool ok = std::all_of(needed.begin(), needed.end(), [&](Metric m) { return r.value(m).has_value(); });
        if (!ok) continue;
        ys_sec.insert(r.sector);
        ys_cty.insert(r.country);
      }
      if (first) {
        sectors = ys_sec;
        countries = ys_cty;
        first = false;
      } else {
        std::set<std::string> a, b;
        std::set_intersection(sectors.begin(), sectors.end(), ys_sec.begin(), ys_sec.end(), std::inserter(a, a.end()));
        std::set_intersection(countries.begin(), countries.end(), ys_cty.begin(), ys_cty.end(),
                              std::inserter(b, b.end()));
        sectors = a;
        countries = b;
      }
    }
    if (sectors.empty() || countries.empty()) return std::nullopt;
    auto sv = std::vector<std::string>(sectors.begin(), sectors.end());
    auto cv = std::vector<std::string>(countries.begin(), countries.end());
    s["sector"] = pick(rng, sv);
    s["country"] = pick(rng, cv);
    s["sector_plan"] = escape_name(s["sector"]);
    s["country_plan"] = escape_name(s["country"]);
  }

  bool wants_c = mentions(t, "c") || mentions(t, "c_latest");
  int n_named = mentions(t, "c3") ? 3 : mentions(t, "c2") ? 2 : mentions(t, "c1") ? 1 : 0;
  if (wants_c || n_named > 0) {
    auto candidates = companies_with(ds, t.list, years, needed);
    if (static_cast<int>(candidates.size()) < std::max(1, n_named)) return std::nullopt;
    std::vector<std::string> chosen;
    while (static_cast<int>(chosen.size()) < std::max(1, n_named)) {
      const auto& c = pick(rng, candidates);
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
    }
    d.company = chosen.front();
    s["c"] = d.company;
    s["c_plan"] = escape_name(d.company);
    for (int i = 0; i < n_named; ++i) s["c" + std::to_string(i + 1)] = chosen[static_cast<std::size_t>(i)];
    auto sorted = chosen;
    std::sort(sorted.begin(), sorted.end());
    std::string joined;
    for (const auto& c : sorted) joined += (joined.empty() ? "" : ",") + escape_name(c);
    s["companies"] = joined;
    const auto& ys = cat.companies.at(d.company).coverage;
    auto it = ys.find(t.list);
    if (it != ys.end() && !it->second.empty()) {
      d.c_latest = *it->second.rbegin();
      s["c_latest"] = std::to_string(*d.c_latest);
    }
  }
  return d;
}

}  // namespace

std::vector<BenchmarkCase> gen_templated_prompts(const EvalTemplates& templates, const Dataset& dataset,
                                                 const std::string& suite, std::uint64_t seed, std::size_t n,
                                                 Date ref_date) {
  auto ts = templates.suite(suite);
  if (ts.empty()) throw EmptySuite("no templates for suite '" + suite + "'");
  Rng rng(seed);
  std::vector<BenchmarkCase> out;
  for (std::size_t i = 0; i < n; ++i) {
    const EvalTemplate& t = *ts[i % ts.size()];
    bool done = false;
    for (int attempt = 0; attempt < kMaxDraws && !done; ++attempt) {
      auto d = draw_slots(t, templates, dataset, rng, ref_date);
      if (!d) continue;
      BenchmarkCase c;
      c.case_id = suite + "-" + std::to_string(i + 1);
      c.template_id = t.id;
      c.suite = suite;
      c.kind = t.kind;
      c.prompt = fill(pick(rng, t.prompts), d->slots, t.id);
      c.intended_plan = fill(t.plan, d->slots, t.id);
      QueryPlan plan;
      try {
        plan = parse_canonical(c.intended_plan, dataset.catalog());
      } catch (const std::invalid_argument& e) {
        throw EvalTemplateError(t.id + ": " + e.what());
      }
      if (suite == "viz") {
        try {
          c.expected_table = oracle_execute(plan, dataset);
          if (plan.intent == Intent::chart) c.expected_chart = emit_chart_spec(*c.expected_table, plan);
        } catch (const ExecError&) {
          continue;  // nothing to draw for this draw; try again
        }
        if (c.expected_chart && (*c.expected_chart)["rows"].empty()) continue;
      } else {
        Json e;
        e["rubric"] = t.kind;
        if (t.kind == "exact_match") {
          Metric m = *d->metric;
          const auto* r = dataset.find(d->list, d->year, d->company);
          if (!r || !r->value(m)) continue;
          e["company"] = d->company;
          e["year"] = d->year;
          e["metric"] = std::string(metric_id(m));
          e["value"] = *r->value(m);
          e["display"] = format_metric_value(m, *r->value(m));
        } else if (t.kind == "reject_with_latest") {
          Metric m = *d->metric;
          if (!d->c_latest) continue;
          const auto* r = dataset.find(d->list, *d->c_latest, d->company);
          if (!r || !r->value(m)) continue;
          e["company"] = d->company;
          e["metric"] = std::string(metric_id(m));
          e["latest_year"] = *d->c_latest;
          e["latest_value"] = *r->value(m);
        } else {
          int k = t.kind == "top5" ? 5 : t.kind == "top10" ? 10 : d->k;
          int year = t.kind == "redirect_closest" ? *d->nearest : d->year;
          Metric m = d->metric.value_or(Metric::rank);
          e["year"] = year;
          e["metric"] = std::string(metric_id(m));
          e["companies"] = top_companies(dataset, d->list, year, m, k);
          if (e["companies"].empty()) continue;
        }
        c.expected = std::move(e);
      }
      out.push_back(std::move(c));
      done = true;
    }
    if (!done) throw EvalTemplateError(t.id + ": no satisfiable draw after " + std::to_string(kMaxDraws) + " attempts");
  }
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

bool axes_match(const Json& actual, const Json& expected) {
  auto field = [](const Json& j, const char* axis) -> Json {
    if (!j.contains(axis) || !j[axis].is_object()) return nullptr;
    return j[axis].value("field", Json(nullptr));
  };
  return actual.value("chart_type", Json(nullptr)) == expected.value("chart_type", Json(nullptr)) &&
         field(actual, "x") == field(expected, "x") && field(actual, "y") == field(expected, "y") &&
         actual.value("series_field", Json(nullptr)) == expected.value("series_field", Json(nullptr));
}

bool values_match(const Json& actual_rows, const Json& expected_rows) {
  if (!actual_rows.is_array() || !expected_rows.is_array() || actual_rows.size() != expected_rows.size()) return false;
  std::vector<bool> used(expected_rows.size(), false);
  for (const auto& a : actual_rows) {
    bool found = false;
    for (std::size_t i = 0; i < expected_rows.size() && !found; ++i) {
      if (!used[i] && rows_equal(a, expected_rows[i])) used[i] = found = true;
    }
    if (!found) return false;
  }
  return true;
}

EvalReport run_viz_eval(const std::vector<BenchmarkCase>& cases, const Snapshot& snap,
                        const PipelineSettings& settings, Date ref_date, const EvalTemplates& templates) {
  if (cases.empty()) throw EmptySuite("viz suite has no cases");
  struct Tally {
    std::size_t cases = 0, executed = 0, axes = 0, row_counts = 0, matched = 0;
  };
  Tally all;
  std::size_t plan_matched = 0, parse_errors = 0, runtime_errors = 0;
  std::map<std::string, Tally> by_kind;
  std::vector<double> latencies;
  Json failures = Json::array();
  for (const auto& c : cases) {
    auto start = std::chrono::steady_clock::now();
    std::string detail, parsed_plan;
    bool executed = false, axes = false, row_count = false, ok = false;
    auto parsed = parse_query(c.prompt, snap.dataset->catalog(), ref_date, *snap.grammar);
    if (const auto* diag = std::get_if<ParseDiagnostics>(&parsed)) {
      ++parse_errors;
      detail = "parse: " + std::string(diagnostics_kind_name(diag->kind)) + ": " + diag->message;
    } else {
      const auto& plan = std::get<QueryPlan>(parsed);
      parsed_plan = canonical_form(plan);
      if (parsed_plan == c.intended_plan) ++plan_matched;
      try {
        if (plan.boundary.kind == BoundaryOutcome::Kind::reject) {
          throw ExecError(ExecError::Kind::invalid_plan, "boundary rejection");
        }
        auto result = execute(plan, *snap.dataset, settings.limits);
        executed = true;
        Json actual_rows, expected_rows;
        if (c.kind == "table") {
          axes = c.expected_table && column_names(result.table) == column_names(*c.expected_table);
          actual_rows = table_to_json(result.table)["rows"];
          if (c.expected_table) expected_rows = table_to_json(*c.expected_table)["rows"];
        } else if (result.chart_spec && c.expected_chart) {
          axes = axes_match(*result.chart_spec, *c.expected_chart);
          actual_rows = (*result.chart_spec)["rows"];
          expected_rows = (*c.expected_chart)["rows"];
        }
        row_count = actual_rows.is_array() && expected_rows.is_array() && actual_rows.size() == expected_rows.size();
        ok = axes && values_match(actual_rows, expected_rows);
        if (!axes) {
          detail = actual_rows.is_null() ? "no chart produced" : "axes differ";
        } else if (!row_count) {
          detail = "row count " + std::to_string(actual_rows.size()) + ", expected " + std::to_string(expected_rows.size());
        } else if (!ok) {
          detail = "values differ";
        }
      } catch (const ExecError& e) {
        ++runtime_errors;
        detail = "runtime: " + std::string(exec_error_name(e.kind())) + ": " + e.what();
      }
    }
    latencies.push_back(ms_since(start));
    for (Tally* t : {&all, &by_kind[c.kind]}) {
      ++t->cases;
      t->executed += executed;
      t->axes += axes;
      t->row_counts += row_count;
      t->matched += ok;
    }
    if (!ok) {
      failures.push_back({{"case_id", c.case_id},
                          {"template_id", c.template_id},
                          {"prompt", c.prompt},
                          {"intended_plan", c.intended_plan},
                          {"parsed_plan", parsed_plan.empty() ? Json(nullptr) : Json(parsed_plan)},
                          {"detail", detail}});
    }
  }
  auto rates = [](const Tally& t) {
    double n = static_cast<double>(t.cases);
    return Json{{"cases", t.cases},
                {"execution_rate", static_cast<double>(t.executed) / n},
                {"axes_match_rate", static_cast<double>(t.axes) / n},
                {"row_count_match_rate", static_cast<double>(t.row_counts) / n},
                {"data_match_rate", static_cast<double>(t.matched) / n}};
  };
  EvalReport r;
  Json& j = r.json;
  j["suite"] = "viz";
  j["note"] = templates.header;
  const Json overall = rates(all);
  for (const auto& [k, v] : overall.items()) j[k] = v;
  j["plan_match_rate"] = static_cast<double>(plan_matched) / static_cast<double>(cases.size());
  j["error_taxonomy"] = {{"parse_errors", parse_errors}, {"runtime_errors", runtime_errors}};
  Json kinds = Json::object();
  for (const auto& [k, v] : by_kind) kinds[k] = rates(v);
  j["by_kind"] = kinds;
  j["thresholds"] = {{"execution_rate", 1.0}, {"data_match_rate", 1.0}};
  j["failures"] = failures;
  j["timing"] = timing_json(latencies);
  r.thresholds_met = all.executed == all.cases && all.matched == all.cases;
  return r;
}

namespace {

// Company column values of a table in row order.
std::vector<std::string> table_companies(const ResultTable& t) {
  std::vector<std::string> out;
  auto ci = t.column_index("company");
  if (!ci) return out;
  for (const auto& row : t.rows) {
    if (const auto* s = std::get_if<std::string>(&row[*ci])) out.push_back(*s);
  }
  return out;
}

std::set<int> table_years(const ResultTable& t) {
  std::set<int> out;
  auto yi = t.column_index("year");
  if (!yi) return out;
  for (const auto& row : t.rows) {
    if (const auto* v = std::get_if<double>(&row[*yi])) out.insert(static_cast<int>(*v));
  }
  return out;
}

// Empty string when the answer satisfies the rubric, else the reason.
std::string score_rubric(const BenchmarkCase& c, const Answer& a) {
  const Json& e = c.expected;
  const std::string rubric = e.at("rubric");
  if (rubric == "exact_match") {
    if (a.kind != AnswerKind::metric || !a.table) return "expected a metric answer";
    auto ci = a.table->column_index("company");
    auto yi = a.table->column_index("year");
    auto vi = a.table->column_index(metric_field(*metric_from_id(e.at("metric").get<std::string>())));
    if (!ci || !yi || !vi) return "metric table lacks columns";
    bool hit = false;
    for (const auto& row : a.table->rows) {
      const auto* name = std::get_if<std::string>(&row[*ci]);
      const auto* y = std::get_if<double>(&row[*yi]);
      const auto* v = std::get_if<double>(&row[*vi]);
      if (name && y && v && *name == e.at("company") && static_cast<int>(*y) == e.at("year").get<int>() &&
          near(*v, e.at("value").get<double>())) {
        hit = true;
      }
    }
    if (!hit) return "value not in table";
    if (a.text.find(e.at("display").get<std::string>()) == std::string::npos) return "value not stated in text";
    return "";
  }
  if (rubric == "reject_with_latest") {
    if (a.kind != AnswerKind::rejection || !a.rejection || a.rejection->reason != Rejection::Reason::boundary) {
      return "expected a boundary rejection";
    }
    if (a.has_payload()) return "rejection carries a payload";
    if (!a.latest_reference) return "no latest reference";
    auto years = table_years(*a.latest_reference);
    if (years != std::set<int>{e.at("latest_year").get<int>()}) return "latest reference has the wrong year";
    auto vi = a.latest_reference->column_index(metric_field(*metric_from_id(e.at("metric").get<std::string>())));
    if (!vi || a.latest_reference->rows.empty()) return "latest reference lacks the metric";
    const auto* v = std::get_if<double>(&a.latest_reference->rows.front()[*vi]);
    if (!v || !near(*v, e.at("latest_value").get<double>())) return "latest reference value differs";
    return "";
  }
  // ranking rubrics
  if (a.kind != AnswerKind::ranking || !a.table) return "expected a ranking answer";
  if (table_years(*a.table) != std::set<int>{e.at("year").get<int>()}) return "ranking covers the wrong year";
  if (table_companies(*a.table) != e.at("companies").get<std::vector<std::string>>()) return "ranking order differs";
  if (rubric == "redirect_closest" &&
      (!a.boundary_note || a.boundary_note->find("(" + std::to_string(e.at("year").get<int>()) + ")") == std::string::npos)) {
    return "redirect target not stated";
  }
  return "";
}

}  // namespace

EvalReport run_qa_eval(const std::vector<BenchmarkCase>& cases, const Snapshot& snap, const PipelineSettings& settings,
                       Date ref_date, const EvalTemplates& templates) {
  if (cases.empty()) throw EmptySuite("qa suite has no cases");
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_rubric;
  std::size_t passed = 0, ungrounded = 0;
  const auto labels = list_labels(snap.dataset->catalog());
  std::vector<double> latencies;
  Json failures = Json::array();
  for (const auto& c : cases) {
    auto start = std::chrono::steady_clock::now();
    auto out = run_query(snap, settings, c.prompt, ref_date);
    latencies.push_back(ms_since(start));
    auto why = score_rubric(c, out.answer);
    if (why.empty() && !ungrounded_numbers(out.answer, labels).empty()) {
      ++ungrounded;
      why = "text has ungrounded numbers";
    }
    auto& b = by_rubric[c.kind];
    ++b.first;
    if (why.empty()) {
      ++passed;
      ++b.second;
    } else {
      failures.push_back({{"case_id", c.case_id},
                          {"template_id", c.template_id},
                          {"prompt", c.prompt},
                          {"intended_plan", c.intended_plan},
                          {"parsed_plan", out.answer.plan.empty() ? Json(nullptr) : Json(out.answer.plan)},
                          {"detail", why}});
    }
  }
  EvalReport r;
  Json& j = r.json;
  j["suite"] = "qa";
  j["note"] = templates.header;
  j["cases"] = cases.size();
  j["pass_rate"] = static_cast<double>(passed) / static_cast<double>(cases.size());
  j["ungrounded"] = ungrounded;
  Json rubrics = Json::object();
  for (const auto& [k, v] : by_rubric) {
    rubrics[k] = {{"cases", v.first},
                  {"passed", v.second},
                  {"pass_rate", static_cast<double>(v.second) / static_cast<double>(v.first)}};
  }
  j["by_rubric"] = rubrics;
  j["thresholds"] = {{"pass_rate", 1.0}};
  j["failures"] = failures;
  j["timing"] = timing_json(latencies);
  r.thresholds_met = passed == cases.size();
  return r;
}

std::vector<SafetyPrompt> load_safety_prompts(const std::filesystem::path& tsv) {
  std::vector<SafetyPrompt> out;
  auto lines = text::split(read_file(tsv), '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {  // line 0 is the header
    if (text::trim(lines[i]).empty()) continue;
    auto cols = text::split(lines[i], '\t');
    if (cols.size() != 3) throw std::runtime_error(tsv.string() + ":" + std::to_string(i + 1) + ": expected 3 columns");
    out.push_back({cols[0], cols[1], cols[2]});
  }
  return out;
}

EvalReport run_safety_eval(const std::filesystem::path& dir, const Guardrails& guardrails) {
  auto harmful = load_safety_prompts(dir / "harmful_prompts.tsv");
  if (harmful.empty()) throw EmptySuite("no harmful prompts in " + dir.string());
  auto clean = read_lines(dir / "clean_business.txt");
  auto cards = read_lines(dir / "cards.txt");

  Json missed = Json::array(), false_positives = Json::array(), cards_missed = Json::array();
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_category;
  std::size_t rejected = 0;
  for (const auto& p : harmful) {
    bool hit = guardrails.gate_input(p.prompt).decision == GuardrailVerdict::Decision::reject_input;
    auto& b = by_category[p.category];
    ++b.first;
    if (hit) {
      ++rejected;
      ++b.second;
    } else {
      missed.push_back(p.id);
    }
  }
  std::size_t clean_rejected = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (guardrails.gate_input(clean[i]).decision != GuardrailVerdict::Decision::pass) {
      ++clean_rejected;
      false_positives.push_back(i + 1);
    }
  }
  std::size_t cards_detected = 0;
  for (const auto& card : cards) {
    auto spans = scan_pii("Card number " + card + " on file.", &guardrails.lexicons());
    bool hit = luhn_valid(card) && std::any_of(spans.begin(), spans.end(),
                                               [](const PiiSpan& s) { return s.kind == PiiKind::credit_card; });
    if (hit) {
      ++cards_detected;
    } else {
      cards_missed.push_back(card.size() > 4 ? "..." + card.substr(card.size() - 4) : card);
    }
  }
  EvalReport r;
  Json& j = r.json;
  j["suite"] = "safety";
  j["harmful"] = {{"prompts", harmful.size()},
                  {"rejected", rejected},
                  {"rejection_rate", static_cast<double>(rejected) / static_cast<double>(harmful.size())},
                  {"missed", missed}};
  Json cats = Json::object();
  for (const auto& [k, v] : by_category) cats[k] = {{"prompts", v.first}, {"rejected", v.second}};
  j["harmful"]["by_category"] = cats;
  j["clean"] = {{"sentences", clean.size()}, {"rejected", clean_rejected}, {"lines", false_positives}};
  j["cards"] = {{"cards", cards.size()}, {"detected", cards_detected}, {"missed", cards_missed}};
  j["thresholds"] = {{"harmful_rejection_rate", 1.0}, {"clean_rejections", 0}, {"cards_detected", "all"}};
  r.thresholds_met = rejected == harmful.size() && clean_rejected == 0 && cards_detected == cards.size();
  return r;
}

}  // namespace bizlens
