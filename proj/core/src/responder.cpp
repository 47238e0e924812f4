#include "bizlens/responder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>

#include "bizlens/text.hpp"

namespace bizlens {

std::string_view answer_kind_name(AnswerKind k) {
  switch (k) {
    case AnswerKind::metric: return "metric";
    case AnswerKind::ranking: return "ranking";
    case AnswerKind::chart: return "chart";
    case AnswerKind::trend: return "trend";
    case AnswerKind::persona: return "persona";
    case AnswerKind::rejection: return "rejection";
  }
  return "rejection";
}

std::string_view rejection_reason_name(Rejection::Reason r) {
  using R = Rejection::Reason;
  switch (r) {
    case R::out_of_grammar: return "out_of_grammar";
    case R::unknown_entity: return "unknown_entity";
    case R::out_of_domain: return "out_of_domain";
    case R::boundary: return "boundary";
    case R::false_premise: return "false_premise";
    case R::runtime: return "runtime";
    case R::safety_input: return "safety_input";
    case R::safety_output: return "safety_output";
  }
  return "out_of_grammar";
}

namespace {

std::string join_human(const std::vector<std::string>& items) {
  if (items.empty()) return "";
  if (items.size() == 1) return items.front();
  std::vector<std::string> head(items.begin(), items.end() - 1);
  return text::join(head, ", ") + " and " + items.back();
}

// Required templates; a config missing any of them fails at load.
constexpr std::string_view kRequired[] = {
    "metric.value",        "metric.missing",       "ranking.by_value",   "ranking.by_rank",
    "ranking.item_value",  "ranking.item_rank",    "chart.caption",      "trend.summary",
    "trend.single",        "trend.rising",         "trend.falling",      "trend.flat",
    "boundary.redirect",   "boundary.partial",     "boundary.defaulted", "boundary.reject_metric",
    "boundary.reject",     "rejection.out_of_domain", "rejection.out_of_grammar", "rejection.unknown_entity",
    "rejection.unknown_entity_suggest", "rejection.boundary", "rejection.boundary_metric",
    "rejection.false_premise", "rejection.runtime", "rejection.safety_input", "rejection.safety_output",
};

Json pii_json(const std::vector<PiiSpan>& spans) {
  Json arr = Json::array();
  for (const auto& s : spans) {
    arr.push_back({{"kind", std::string(pii_kind_name(s.kind))},
                   {"start", s.start},
                   {"end", s.end},
                   {"hash", s.matched_text_hash}});
  }
  return arr;
}

std::string cell_text(const Cell& c) {
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  if (std::holds_alternative<double>(c)) return text::shortest_double(std::get<double>(c));
  return "";
}

}  // namespace

Json answer_to_json(const Answer& a) {
  Json j;
  j["version"] = 1;
  j["kind"] = std::string(answer_kind_name(a.kind));
  j["text"] = a.text;
  j["boundary_note"] = a.boundary_note ? Json(*a.boundary_note) : Json(nullptr);
  if (a.has_payload()) {
    Json p;
    p["table"] = a.table ? table_to_json(*a.table) : Json(nullptr);
    p["chart_spec"] = a.chart_spec ? *a.chart_spec : Json(nullptr);
    if (a.trend) {
      p["trend"] = {{"series", trend_to_json(*a.trend)},
                    {"summary", a.trend_summary ? summary_to_json(*a.trend_summary) : Json(nullptr)}};
    } else {
      p["trend"] = nullptr;
    }
    j["payload"] = std::move(p);
  } else {
    j["payload"] = nullptr;
  }
  j["latest_reference"] = a.latest_reference ? table_to_json(*a.latest_reference) : Json(nullptr);
  if (a.rejection) {
    Json r;
    r["reason"] = std::string(rejection_reason_name(a.rejection->reason));
    r["categories"] = Json::array();
    for (auto c : a.rejection->categories) r["categories"].push_back(std::string(harm_category_name(c)));
    r["pii"] = pii_json(a.rejection->spans);
    r["suggestions"] = a.rejection->suggestions;
    j["rejection"] = std::move(r);
  } else {
    j["rejection"] = nullptr;
  }
  j["citations"] = Json::array();
  for (const auto& h : a.citations) j["citations"].push_back(hit_to_json(h));
  j["provenance"] = {{"plan", a.plan.empty() ? Json(nullptr) : Json(a.plan)},
                     {"dataset_fingerprint", a.dataset_fingerprint},
                     {"index_fingerprint", a.index_fingerprint}};
  return j;
}

ResponseTemplates ResponseTemplates::from_config(const ConfigFile& config) {
  ResponseTemplates t;
  for (const auto& sec : config.sections()) {
    for (const auto& e : sec.entries) {
      if (e.key.empty()) throw TemplateError(config.source() + ":" + std::to_string(e.line) + ": expected key = value");
      t.templates_[sec.name + "." + e.key] = e.value;
    }
  }
  for (auto key : kRequired) {
    if (!t.templates_.count(key)) throw TemplateError(config.source() + ": missing template " + std::string(key));
  }
  return t;
}

ResponseTemplates ResponseTemplates::load(const std::filesystem::path& path) {
  return from_config(ConfigFile::load(path));
}

std::string ResponseTemplates::render(std::string_view section, std::string_view key,
                                      const std::map<std::string, std::string>& vars) const {
  std::string name = std::string(section) + "." + std::string(key);
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("no template " + name);
  const auto& tpl = it->second;
  std::string out;
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] != '{') {
      out += tpl[i];
      continue;
    }
    auto close = tpl.find('}', i);
    if (close == std::string::npos) throw TemplateError(name + ": unterminated placeholder");
    auto var = tpl.substr(i + 1, close - i - 1);
    auto v = vars.find(var);
    if (v == vars.end()) throw TemplateError(name + ": no value for {" + var + "}");
    out += v->second;
    i = close;
  }
  return out;
}

const std::string& ResponseTemplates::label(std::string_view key) const {
  auto it = templates_.find("labels." + std::string(key));
  if (it == templates_.end()) throw TemplateError("no label " + std::string(key));
  return it->second;
}

std::string format_metric_value(Metric m, double v) {
  std::string sign = v < 0 ? "-" : "";
  double a = std::abs(v);
  switch (m) {
    case Metric::revenue:
    case Metric::profits:
    case Metric::assets:
    case Metric::market_value: return sign + "$" + text::format_grouped(a, 1) + " million";
    case Metric::employees: return sign + text::format_grouped(a, 0);
    case Metric::revenue_change_pct: return sign + text::format_grouped(a, 1) + "%";
    case Metric::eps: return sign + "$" + text::format_grouped(a, 2);
    case Metric::rank: return sign + text::format_grouped(a, 0);
  }
  return text::shortest_double(v);
}

std::string Responder::metric_sentence(const std::string& company, Metric m, const Cell& year, const Cell& value,
                                       const std::string& list) const {
  std::map<std::string, std::string> vars = {
      {"company", company}, {"metric", t_.label(metric_id(m))}, {"year", cell_text(year)}, {"list", list}};
  if (!std::holds_alternative<double>(value)) return t_.render("metric", "missing", vars);
  vars["value"] = format_metric_value(m, std::get<double>(value));
  return t_.render("metric", "value", vars);
}

std::optional<std::string> Responder::boundary_note(const QueryPlan& plan, const Dataset& ds) const {
  const auto& b = plan.boundary;
  std::string list = ds.catalog().display_name(plan.list_id);
  if (b.kind == BoundaryOutcome::Kind::redirect) {
    return t_.render("boundary", "redirect",
                     {{"requested", format_years(plan.time.years)}, {"target", format_years(b.effective_years)}});
  }
  if (b.kind == BoundaryOutcome::Kind::in_range && b.effective_years != plan.time.years) {
    return t_.render("boundary", "partial",
                     {{"list", list},
                      {"effective", format_years(b.effective_years)},
                      {"requested", format_years(plan.time.years)}});
  }
  if (plan.time.basis == ResolvedTime::Basis::defaulted_to_latest) {
    return t_.render("boundary", "defaulted", {{"year", format_years(b.effective_years)}});
  }
  return std::nullopt;
}

Answer Responder::render_answer(const QueryPlan& plan, const ExecutionResult& result, const Dataset& ds) const {
  Answer a;
  a.plan = canonical_form(plan);
  a.dataset_fingerprint = ds.fingerprint();
  a.table = result.table;
  a.chart_spec = result.chart_spec;
  a.boundary_note = boundary_note(plan, ds);
  std::string list = ds.catalog().display_name(plan.list_id);
  const auto& t = result.table;

  if (plan.intent == Intent::metric_qa) {
    a.kind = AnswerKind::metric;
    std::vector<std::string> sentences;
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < plan.metrics.size(); ++i) {
        sentences.push_back(
            metric_sentence(std::get<std::string>(row[0]), plan.metrics[i], row[1], row[2 + i], list));
      }
    }
    a.text = text::join(sentences, " ");
    return a;
  }

  if (plan.intent == Intent::ranking_qa) {
    a.kind = AnswerKind::ranking;
    Metric m = plan.metrics.front();
    bool by_rank = m == Metric::rank;
    std::vector<std::string> sentences;
    std::size_t i = 0;
    while (i < t.rows.size()) {
      const auto year = t.rows[i][2];
      std::vector<std::string> items;
      for (; i < t.rows.size() && t.rows[i][2] == year; ++i) {
        const auto& row = t.rows[i];
        if (by_rank) {
          items.push_back(t_.render("ranking", "item_rank",
                                    {{"rank", cell_text(row[0])}, {"company", std::get<std::string>(row[1])}}));
        } else {
          std::string value = std::holds_alternative<double>(row[3])
                                  ? format_metric_value(m, std::get<double>(row[3]))
                                  : std::string("no figure");
          items.push_back(
              t_.render("ranking", "item_value", {{"company", std::get<std::string>(row[1])}, {"value", value}}));
        }
      }
      sentences.push_back(t_.render("ranking", by_rank ? "by_rank" : "by_value",
                                    {{"list", list},
                                     {"year", cell_text(year)},
                                     {"metric", t_.label(metric_id(m))},
                                     {"items", text::join(items, "; ")}}));
    }
    a.text = text::join(sentences, " ");
    return a;
  }

  a.kind = AnswerKind::chart;
  std::string title = result.chart_spec ? result.chart_spec->at("title").get<std::string>() : std::string();
  a.text = t_.render("chart", "caption", {{"chart", t_.label(chart_type_name(*plan.chart_type))}, {"title", title}});
  return a;
}

Answer Responder::render_trend(const QueryPlan& plan, const TrendSeries& series) const {
  Answer a;
  a.kind = AnswerKind::trend;
  a.plan = canonical_form(plan);
  a.trend = series;
  std::map<std::string, std::string> vars = {{"topics", join_human(series.topic_terms)},
                                             {"scale", t_.label(trend_scale_name(series.scale))},
                                             {"from", format_iso_date(series.from)},
                                             {"to", format_iso_date(series.to)}};
  if (series.buckets.size() >= 2) {
    a.trend_summary = summarize_trend(series);
    vars["direction"] = t_.render("trend", direction_name(a.trend_summary->direction));
    vars["peak"] = format_iso_date(a.trend_summary->peak_bucket);
    a.text = t_.render("trend", "summary", vars);
  } else {
    vars["count"] = series.buckets.empty() ? "0" : std::to_string(series.buckets.front().count);
    a.text = t_.render("trend", "single", vars);
  }
  return a;
}

Answer Responder::render_persona(const std::string& text) const {
  Answer a;
  a.kind = AnswerKind::persona;
  a.plan = "persona";
  a.text = text;
  return a;
}

Answer Responder::render_rejection(const ParseDiagnostics& diag, bool false_premise) const {
  using K = ParseDiagnostics::Kind;
  Answer a;
  a.kind = AnswerKind::rejection;
  Rejection r;
  r.suggestions = diag.suggestions;
  a.boundary_note = diag.message;
  if (false_premise) {
    r.reason = Rejection::Reason::false_premise;
    a.text = t_.render("rejection", "false_premise");
  } else {
    switch (diag.kind) {
      case K::out_of_domain:
        r.reason = Rejection::Reason::out_of_domain;
        a.text = t_.render("rejection", "out_of_domain", {{"detail", diag.message}});
        a.boundary_note.reset();
        break;
      case K::unknown_entity:
        r.reason = Rejection::Reason::unknown_entity;
        a.text = diag.suggestions.empty()
                     ? t_.render("rejection", "unknown_entity")
                     : t_.render("rejection", "unknown_entity_suggest", {{"suggestions", join_human(diag.suggestions)}});
        break;
      case K::boundary_reject:
        r.reason = Rejection::Reason::boundary;
        a.text = t_.render("rejection", "boundary");
        break;
      case K::out_of_grammar:
        r.reason = Rejection::Reason::out_of_grammar;
        a.text = t_.render("rejection", "out_of_grammar");
        break;
    }
  }
  a.rejection = std::move(r);
  return a;
}

Answer Responder::render_rejection(const QueryPlan& plan, const Dataset& ds, const SandboxLimits& limits) const {
  Answer a;
  a.kind = AnswerKind::rejection;
  a.plan = canonical_form(plan);
  a.dataset_fingerprint = ds.fingerprint();
  a.rejection = Rejection{Rejection::Reason::boundary, {}, {}, {}};
  std::string list = ds.catalog().display_name(plan.list_id);
  std::string requested = format_years(plan.time.years);

  if (plan.intent == Intent::metric_qa && plan.companies.size() == 1) {
    const auto& company = plan.companies.front();
    auto info = ds.catalog().companies.find(company);
    if (info != ds.catalog().companies.end() && info->second.coverage.count(plan.list_id)) {
      int latest = *info->second.coverage.at(plan.list_id).rbegin();
      QueryPlan ref = plan;
      ref.time = {{latest}, ResolvedTime::Basis::explicit_years};
      ref.boundary = BoundaryOutcome{BoundaryOutcome::Kind::in_range, {latest}, std::nullopt, plan.boundary.latest_available};
      try {
        auto res = execute(ref, ds, limits);
        const auto& row = res.table.rows.front();
        std::vector<std::string> parts;
        for (std::size_t i = 0; i < plan.metrics.size(); ++i) {
          parts.push_back(metric_sentence(company, plan.metrics[i], row[1], row[2 + i], list));
        }
        a.latest_reference = std::move(res.table);
        a.text = t_.render("rejection", "boundary_metric", {{"reference", text::join(parts, " ")}});
        a.boundary_note = t_.render(
            "boundary", "reject_metric",
            {{"list", list}, {"company", company}, {"requested", requested}, {"latest", std::to_string(latest)}});
        return a;
      } catch (const ExecError&) {
        // fall through to the plain rejection
      }
    }
  }
  std::string covered;
  if (auto it = ds.catalog().lists.find(plan.list_id); it != ds.catalog().lists.end()) {
    covered = format_years(std::vector<int>(it->second.years.begin(), it->second.years.end()));
  }
  a.text = t_.render("rejection", "boundary");
  a.boundary_note = t_.render("boundary", "reject", {{"list", list}, {"coverage", covered}, {"requested", requested}});
  return a;
}

Answer Responder::render_rejection(const GuardrailVerdict& v) const {
  Answer a;
  a.kind = AnswerKind::rejection;
  Rejection r;
  r.categories = v.categories;
  r.spans = v.spans;
  if (v.decision == GuardrailVerdict::Decision::block_output) {
    r.reason = Rejection::Reason::safety_output;
    a.text = t_.render("rejection", "safety_output");
  } else {
    r.reason = Rejection::Reason::safety_input;
    std::vector<std::string> labels;
    for (auto c : v.categories) labels.push_back(t_.label(harm_category_name(c)));
    a.text = t_.render("rejection", "safety_input", {{"categories", join_human(labels)}});
  }
  a.rejection = std::move(r);
  return a;
}

Answer Responder::render_exec_error(const QueryPlan& plan, const ExecError& error) const {
  Answer a;
  a.kind = AnswerKind::rejection;
  a.plan = canonical_form(plan);
  a.rejection = Rejection{Rejection::Reason::runtime, {}, {}, {}};
  a.text = t_.render("rejection", "runtime");
  a.boundary_note = std::string(exec_error_name(error.kind())) + ": " + error.what();
  return a;
}

void attach_references(Answer& answer, const std::vector<ReferenceHit>& hits, double threshold,
                       std::size_t max_citations) {
  answer.citations.clear();
  if (answer.kind == AnswerKind::persona || answer.kind == AnswerKind::rejection) return;
  for (const auto& h : hits) {
    if (answer.citations.size() >= max_citations) break;
    if (h.score >= threshold) answer.citations.push_back(h);
  }
}

namespace {

const std::regex& number_pattern() {
  // Thousands groups are exactly three digits, so "2022,2024" is two numbers.
  static const std::regex re(R"(\d{1,3}(?:,\d{3})+(?!\d)(?:\.\d+)?|\d+(?:\.\d+)?)");
  return re;
}

std::string strip_commas(std::string s) {
  std::erase(s, ',');
  while (!s.empty() && s.back() == ',') s.pop_back();
  return s;
}

void allow_number(double v, std::set<std::string>& allowed) {
  double a = std::abs(v);
  allowed.insert(text::shortest_double(a));
  for (int d = 0; d <= 3; ++d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", d, a);
    allowed.insert(buf);
  }
}

void allow_string(const std::string& s, std::set<std::string>& allowed) {
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_pattern()); it != std::sregex_iterator(); ++it) {
    allowed.insert(strip_commas(it->str()));
  }
  // individual digit runs too, so "2024-04-01" grounds "2024" and "04"
  for (std::size_t i = 0; i < s.size();) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    allowed.insert(s.substr(i, j - i));
    i = j;
  }
}

void allow_json(const Json& j, std::set<std::string>& allowed) {
  if (j.is_number()) {
    allow_number(j.get<double>(), allowed);
  } else if (j.is_string()) {
    allow_string(j.get<std::string>(), allowed);
  } else if (j.is_structured()) {
    for (const auto& v : j) allow_json(v, allowed);
  }
}

}  // namespace

std::vector<std::string> ungrounded_numbers(const Answer& a, const std::vector<std::string>& labels) {
  std::set<std::string> allowed;
  if (a.table) allow_json(table_to_json(*a.table)["rows"], allowed);
  if (a.chart_spec) allow_json((*a.chart_spec)["rows"], allowed);
  if (a.trend) allow_json(trend_to_json(*a.trend), allowed);
  if (a.trend_summary) allow_json(summary_to_json(*a.trend_summary), allowed);
  if (a.latest_reference) allow_json(table_to_json(*a.latest_reference)["rows"], allowed);
  std::vector<std::string> bad;
  std::string s = a.text;
  for (const auto& label : labels) {
    if (label.empty()) continue;
    for (auto pos = s.find(label); pos != std::string::npos; pos = s.find(label, pos + label.size())) {
      std::fill(s.begin() + static_cast<std::ptrdiff_t>(pos),
                s.begin() + static_cast<std::ptrdiff_t>(pos + label.size()), ' ');
    }
  }
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_pattern()); it != std::sregex_iterator(); ++it) {
    auto tok = strip_commas(it->str());
    if (!allowed.count(tok)) bad.push_back(it->str());
  }
  return bad;
}

std::vector<std::string> list_labels(const MetricsCatalog& catalog) {
  std::vector<std::string> out;
  for (const auto& [id, info] : catalog.lists) out.push_back(info.display_name.empty() ? id : info.display_name);
  return out;
}

}  // namespace bizlens
