#include "bizlens/query.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "bizlens/text.hpp"

namespace bizlens {

std::string_view intent_name(Intent i) {
  switch (i) {
    case Intent::metric_qa: return "metric";
    case Intent::ranking_qa: return "ranking";
    case Intent::chart: return "chart";
    case Intent::trend: return "trend";
    case Intent::persona: return "persona";
  }
  return "metric";
}

std::string_view chart_type_name(ChartType t) {
  switch (t) {
    case ChartType::bar: return "bar";
    case ChartType::line: return "line";
    case ChartType::scatter: return "scatter";
  }
  return "bar";
}

std::string_view group_field_name(GroupField f) { return f == GroupField::sector ? "sector" : "country"; }

std::string_view aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::sum: return "sum";
    case Aggregation::avg: return "avg";
    case Aggregation::count: return "count";
    case Aggregation::min: return "min";
    case Aggregation::max: return "max";
  }
  return "sum";
}

std::string_view trend_scale_name(TrendScale s) {
  switch (s) {
    case TrendScale::month: return "month";
    case TrendScale::quarter: return "quarter";
    case TrendScale::year: return "year";
    case TrendScale::multi_year: return "multi_year";
  }
  return "year";
}

std::optional<ChartType> chart_type_from_name(std::string_view s) {
  for (auto t : {ChartType::bar, ChartType::line, ChartType::scatter}) {
    if (chart_type_name(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<GroupField> group_field_from_name(std::string_view s) {
  for (auto f : {GroupField::sector, GroupField::country}) {
    if (group_field_name(f) == s) return f;
  }
  return std::nullopt;
}

std::optional<Aggregation> aggregation_from_name(std::string_view s) {
  for (auto a : {Aggregation::sum, Aggregation::avg, Aggregation::count, Aggregation::min, Aggregation::max}) {
    if (aggregation_name(a) == s) return a;
  }
  return std::nullopt;
}

std::optional<TrendScale> trend_scale_from_name(std::string_view s) {
  for (auto t : {TrendScale::month, TrendScale::quarter, TrendScale::year, TrendScale::multi_year}) {
    if (trend_scale_name(t) == s) return t;
  }
  return std::nullopt;
}

std::string_view diagnostics_kind_name(ParseDiagnostics::Kind k) {
  switch (k) {
    case ParseDiagnostics::Kind::out_of_grammar: return "out_of_grammar";
    case ParseDiagnostics::Kind::unknown_entity: return "unknown_entity";
    case ParseDiagnostics::Kind::out_of_domain: return "out_of_domain";
    case ParseDiagnostics::Kind::boundary_reject: return "boundary_reject";
  }
  return "out_of_grammar";
}

bool QueryPlan::operator==(const QueryPlan& o) const {
  return intent == o.intent && companies == o.companies && list_id == o.list_id && metrics == o.metrics &&
         time.years == o.time.years && boundary == o.boundary && chart_type == o.chart_type && top_k == o.top_k &&
         group == o.group && filter == o.filter && trend == o.trend;
}

std::optional<std::string> validate_plan(const QueryPlan& p) {
  if (p.top_k && (*p.top_k < 1 || *p.top_k > 100)) return "top_k must be within 1..100";
  if (p.intent == Intent::persona) return std::nullopt;
  if (p.intent == Intent::trend) {
    if (!p.trend) return "trend plan without a trend request";
    if (p.trend->topic_terms.empty()) return "trend plan without topic terms";
    if (p.trend->from > p.trend->to) return "trend range is reversed";
    return std::nullopt;
  }
  if (p.list_id.empty()) return "plan without a list";
  if (p.time.years.empty()) return "plan without years";
  if (!std::is_sorted(p.time.years.begin(), p.time.years.end()) ||
      std::adjacent_find(p.time.years.begin(), p.time.years.end()) != p.time.years.end()) {
    return "years must be sorted and unique";
  }
  if (p.metrics.empty() || p.metrics.size() > 2) return "plans carry one or two metrics";
  if (!std::is_sorted(p.companies.begin(), p.companies.end())) return "companies must be sorted";
  bool rejected = p.boundary.kind == BoundaryOutcome::Kind::reject;
  if (rejected != p.boundary.effective_years.empty()) return "effective years must be empty exactly when rejected";
  switch (p.intent) {
    case Intent::metric_qa:
      if (p.companies.size() != 1) return "metric plans name exactly one company";
      if (p.chart_type || p.group) return "metric plans carry no chart or grouping";
      break;
    case Intent::ranking_qa:
      if (!p.top_k) return "ranking plans need top_k";
      if (!p.companies.empty()) return "ranking plans do not name companies";
      if (p.metrics.size() != 1) return "ranking plans rank by one metric";
      if (p.chart_type || p.group) return "ranking plans carry no chart or grouping";
      break;
    case Intent::chart:
      if (!p.chart_type) return "chart plans need a chart type";
      if (*p.chart_type == ChartType::scatter && p.metrics.size() != 2) return "scatter plots need exactly two metrics";
      if (*p.chart_type != ChartType::scatter && p.metrics.size() != 1) return "bar and line charts show one metric";
      if (!p.companies.empty() && p.top_k) return "name companies or ask for a top-k, not both";
      if (p.companies.empty() && !p.top_k && !p.group) return "chart plans select companies, a top-k, or a grouping";
      if (p.group && *p.chart_type == ChartType::scatter) return "grouped scatter plots are not supported";
      break;
    default:
      break;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Grammar loading

namespace {

using Phrase = Grammar::Phrase;

Phrase phrase_of(std::string_view s) { return text::words(s); }

std::vector<Phrase> phrases_of(const std::string& value) {
  std::vector<Phrase> out;
  for (const auto& part : text::split(value, '|')) {
    auto p = phrase_of(part);
    if (!p.empty()) out.push_back(std::move(p));
  }
  return out;
}

template <class Enum, class FromName>
void load_enum_table(const ConfigFile& cfg, std::string_view section, std::map<Enum, std::vector<Phrase>>& out,
                     FromName from_name) {
  const auto& sec = cfg.require(section);
  for (const auto& e : sec.entries) {
    auto key = from_name(e.key);
    if (!key) throw ConfigError(sec.source, e.line, "unknown key '" + e.key + "' in [" + std::string(section) + "]");
    auto ps = phrases_of(e.value);
    auto& dst = out[*key];
    dst.insert(dst.end(), ps.begin(), ps.end());
  }
}

std::optional<Intent> intent_from_name(std::string_view s) {
  for (auto i : {Intent::metric_qa, Intent::ranking_qa, Intent::chart, Intent::trend, Intent::persona}) {
    if (intent_name(i) == s) return i;
  }
  return std::nullopt;
}

int int_setting(const ConfigSection& sec, std::string_view key, int fallback) {
  auto v = sec.get(key);
  if (!v) return fallback;
  try {
    return std::stoi(*v);
  } catch (const std::exception&) {
    throw ConfigError(sec.source, sec.line, "'" + std::string(key) + "' must be an integer");
  }
}

}  // namespace

Grammar Grammar::from_config(const ConfigFile& cfg) {
  Grammar g;
  if (const auto* gen = cfg.find("general")) {
    g.default_list = gen->get("default_list").value_or(g.default_list);
    g.fallback_list = gen->get("fallback_list").value_or(g.fallback_list);
    g.default_top_k = int_setting(*gen, "default_top_k", g.default_top_k);
    g.max_chart_companies = int_setting(*gen, "max_chart_companies", g.max_chart_companies);
    g.default_trend_years = int_setting(*gen, "default_trend_years", g.default_trend_years);
  }
  load_enum_table(cfg, "metrics", g.metric_phrases, metric_from_id);
  load_enum_table(cfg, "chart_types", g.chart_phrases, chart_type_from_name);
  load_enum_table(cfg, "group_by", g.group_phrases, group_field_from_name);
  load_enum_table(cfg, "aggregations", g.aggregation_phrases, aggregation_from_name);
  load_enum_table(cfg, "trend_scales", g.trend_scale_phrases, trend_scale_from_name);

  const auto& intents = cfg.require("intents");
  for (const auto& e : intents.entries) {
    if (e.key == "chart_weak") {
      auto ps = phrases_of(e.value);
      g.chart_weak_phrases.insert(g.chart_weak_phrases.end(), ps.begin(), ps.end());
      continue;
    }
    auto key = intent_from_name(e.key);
    if (!key) throw ConfigError(intents.source, e.line, "unknown intent '" + e.key + "'");
    auto ps = phrases_of(e.value);
    auto& dst = g.intent_phrases[*key];
    dst.insert(dst.end(), ps.begin(), ps.end());
  }

  for (const auto& e : cfg.require("out_of_domain").entries) {
    for (auto& p : phrases_of(e.value)) g.out_of_domain.emplace_back(e.key, std::move(p));
  }
  for (const auto& e : cfg.require("lists").entries) {
    auto ps = phrases_of(e.value);
    auto& dst = g.list_phrases[e.key];
    dst.insert(dst.end(), ps.begin(), ps.end());
  }
  if (const auto* pr = cfg.find("premise")) {
    for (const auto& v : pr->get_all("rank_one")) {
      auto ps = phrases_of(v);
      g.premise_rank_one.insert(g.premise_rank_one.end(), ps.begin(), ps.end());
    }
  }
  for (const auto& v : cfg.require("stopwords").get_all("words")) {
    for (auto& p : phrases_of(v)) g.stopwords.insert(p.begin(), p.end());
  }
  if (const auto* tn = cfg.find("topic_noise")) {
    for (const auto& v : tn->get_all("words")) {
      for (auto& p : phrases_of(v)) g.topic_noise.insert(p.begin(), p.end());
    }
  }

  const auto& persona = cfg.require("persona");
  g.persona_version = int_setting(persona, "version", 1);
  g.persona_default = persona.require("default");
  for (const auto& sec : cfg.sections()) {
    if (sec.name.rfind("persona.", 0) != 0) continue;
    g.persona_answers.emplace_back(phrases_of(sec.require("match")), sec.require("text"));
  }

  auto add_words = [&](const std::vector<Phrase>& ps) {
    for (const auto& p : ps) g.keywords.insert(p.begin(), p.end());
  };
  for (const auto& [k, ps] : g.metric_phrases) add_words(ps);
  for (const auto& [k, ps] : g.intent_phrases) add_words(ps);
  for (const auto& [k, ps] : g.chart_phrases) add_words(ps);
  for (const auto& [k, ps] : g.list_phrases) add_words(ps);
  for (const auto& [k, ps] : g.group_phrases) add_words(ps);
  for (const auto& [k, ps] : g.aggregation_phrases) add_words(ps);
  for (const auto& [k, ps] : g.trend_scale_phrases) add_words(ps);
  add_words(g.chart_weak_phrases);
  add_words(g.premise_rank_one);
  for (const auto& [name, p] : g.out_of_domain) g.keywords.insert(p.begin(), p.end());
  g.keywords.insert(g.stopwords.begin(), g.stopwords.end());
  return g;
}

Grammar Grammar::load(const std::filesystem::path& path) { return from_config(ConfigFile::load(path)); }

// ---------------------------------------------------------------------------
// Token-level matching

namespace {

struct Token {
  std::string w;     // lowercase
  std::string orig;  // as typed
  std::size_t begin = 0;
  std::size_t end = 0;
  bool used = false;
};

bool is_month_word(std::string_view w) {
  static const std::set<std::string, std::less<>> kMonths = {
      "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
      "november", "december", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec"};
  return kMonths.count(w) > 0;
}

bool all_digits(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// Alphanumeric runs; a lone "s" after an apostrophe (possessive) is dropped.
std::vector<Token> query_tokens(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!text::is_alnum(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && text::is_alnum(s[j])) ++j;
    auto orig = s.substr(i, j - i);
    bool possessive = (orig == "s" || orig == "S") && i > 0 &&
                      (s[i - 1] == '\'' || (i >= 3 && s.substr(i - 3, 3) == "\xe2\x80\x99"));
    if (!possessive) out.push_back({text::lower(orig), std::string(orig), i, j});
    i = j;
  }
  return out;
}

bool matches_at(const std::vector<Token>& toks, std::size_t i, const Phrase& p, bool skip_used) {
  if (i + p.size() > toks.size()) return false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (toks[i + k].w != p[k]) return false;
    if (skip_used && toks[i + k].used) return false;
  }
  return true;
}

bool contains_any(const std::vector<Token>& toks, const std::vector<Phrase>& phrases) {
  for (std::size_t i = 0; i < toks.size(); ++i) {
    for (const auto& p : phrases) {
      if (matches_at(toks, i, p, false)) return true;
    }
  }
  return false;
}

template <class L>
struct Hit {
  L label;
  std::size_t pos;
  std::size_t len;
};

/// Leftmost-longest scan over unused tokens. Matched tokens are marked used.
template <class L>
std::vector<Hit<L>> scan_table(std::vector<Token>& toks, std::vector<std::pair<Phrase, L>> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  std::vector<Hit<L>> hits;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].used) continue;
    for (const auto& [p, label] : rows) {
      if (!matches_at(toks, i, p, true)) continue;
      hits.push_back({label, i, p.size()});
      for (std::size_t k = 0; k < p.size(); ++k) toks[i + k].used = true;
      i += p.size() - 1;
      break;
    }
  }
  return hits;
}

template <class K>
std::vector<std::pair<Phrase, K>> rows_of(const std::map<K, std::vector<Phrase>>& table) {
  std::vector<std::pair<Phrase, K>> rows;
  for (const auto& [k, ps] : table) {
    for (const auto& p : ps) rows.emplace_back(p, k);
  }
  return rows;
}

bool has_metric_phrase(const std::vector<Token>& toks, const Grammar& g) {
  for (const auto& [m, ps] : g.metric_phrases) {
    if (contains_any(toks, ps)) return true;
  }
  return false;
}

Intent classify_tokens(const std::vector<Token>& toks, const Grammar& g) {
  auto has = [&](Intent i) {
    auto it = g.intent_phrases.find(i);
    return it != g.intent_phrases.end() && contains_any(toks, it->second);
  };
  if (has(Intent::persona)) return Intent::persona;
  bool metric = has_metric_phrase(toks, g);
  if (has(Intent::chart) || (metric && contains_any(toks, g.chart_weak_phrases))) return Intent::chart;
  if (has(Intent::ranking_qa)) return Intent::ranking_qa;
  if (has(Intent::trend) && !metric) return Intent::trend;
  return Intent::metric_qa;
}

ParseDiagnostics diag(ParseDiagnostics::Kind kind, std::string message, std::vector<std::string> suggestions = {}) {
  return ParseDiagnostics{kind, std::move(message), std::move(suggestions)};
}

std::vector<int> set_years(const std::set<int>& s) { return {s.begin(), s.end()}; }

const std::set<int>* company_years(const MetricsCatalog& catalog, const std::string& company, const std::string& list) {
  auto it = catalog.companies.find(company);
  if (it == catalog.companies.end()) return nullptr;
  auto jt = it->second.coverage.find(list);
  if (jt == it->second.coverage.end() || jt->second.empty()) return nullptr;
  return &jt->second;
}

/// Coverage and policy the boundary is computed against. Metric questions are
/// bounded by the years the company itself appears on the list.
std::optional<std::pair<YearCoverage, BoundaryPolicy>> scope_for(const QueryPlan& plan, const MetricsCatalog& catalog) {
  if (!catalog.lists.count(plan.list_id)) return std::nullopt;
  if (plan.intent == Intent::metric_qa) {
    if (plan.companies.size() != 1) return std::nullopt;
    const auto* ys = company_years(catalog, plan.companies.front(), plan.list_id);
    if (!ys) return std::nullopt;
    YearCoverage cov{set_years(*ys), *ys->rbegin()};
    return std::make_pair(cov, BoundaryPolicy::metric);
  }
  auto cov = coverage(catalog, plan.list_id);
  return std::make_pair(cov, plan.intent == Intent::ranking_qa ? BoundaryPolicy::ranking : BoundaryPolicy::metric);
}

bool on_list_in(const MetricsCatalog& catalog, const std::string& company, const std::string& list,
                const std::vector<int>* years) {
  const auto* ys = company_years(catalog, company, list);
  if (!ys) return false;
  if (!years) return true;
  return std::any_of(years->begin(), years->end(), [&](int y) { return ys->count(y) > 0; });
}

/// Default list: the configured default if every company is on it in the
/// requested years, then the fallback list, then the list with the widest
/// coverage that holds every company at all, then the widest list.
std::string choose_list(const MetricsCatalog& catalog, const Grammar& g, const std::vector<std::string>& companies,
                        const TemporalExpr& expr, Date ref_date) {
  auto ok = [&](const std::string& list) {
    if (!catalog.lists.count(list)) return false;
    if (companies.empty()) return true;
    std::optional<std::vector<int>> years;
    if (expr.kind != TemporalExpr::Kind::unspecified) {
      years = resolve(expr, ref_date, *catalog.cutoff_year(list)).years;
    }
    return std::all_of(companies.begin(), companies.end(),
                       [&](const auto& c) { return on_list_in(catalog, c, list, years ? &*years : nullptr); });
  };
  if (ok(g.default_list)) return g.default_list;
  if (ok(g.fallback_list)) return g.fallback_list;
  std::string best, best_any;
  std::size_t best_n = 0, best_any_n = 0;
  for (const auto& [id, info] : catalog.lists) {
    if (info.years.size() > best_any_n) best_any = id, best_any_n = info.years.size();
    bool holds_all = std::all_of(companies.begin(), companies.end(),
                                 [&](const auto& c) { return on_list_in(catalog, c, id, nullptr); });
    if (holds_all && info.years.size() > best_n) best = id, best_n = info.years.size();
  }
  return best.empty() ? best_any : best;
}

struct CompanyIndex {
  std::unordered_map<std::string, std::string> by_words;  // "walmart inc" -> canonical
  std::unordered_map<std::string, std::string> by_key;    // company_key -> canonical

  explicit CompanyIndex(const MetricsCatalog& catalog) {
    for (const auto& [canonical, info] : catalog.companies) {
      by_words.emplace(text::join(text::words(canonical), " "), canonical);
      for (const auto& a : info.aliases) by_words.emplace(text::join(text::words(a), " "), canonical);
      auto k = company_key(canonical);
      if (!k.empty()) by_key.emplace(k, canonical);
    }
  }
};

bool capitalized(const Token& t) { return !t.orig.empty() && t.orig[0] >= 'A' && t.orig[0] <= 'Z'; }

/// Greedy longest n-gram company matching over unused tokens.
std::vector<std::string> match_companies(std::vector<Token>& toks, const CompanyIndex& idx, const Grammar& g) {
  std::vector<std::string> found;
  constexpr std::size_t kMaxLen = 8;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].used) continue;
    for (std::size_t len = std::min(kMaxLen, toks.size() - i); len >= 1; --len) {
      bool free = true;
      std::vector<std::string> ws;
      for (std::size_t k = 0; k < len; ++k) {
        free = free && !toks[i + k].used;
        ws.push_back(toks[i + k].w);
      }
      if (!free) continue;
      // A lowercase grammar word on its own is never a company.
      if (len == 1 && g.keywords.count(ws[0]) && !capitalized(toks[i])) continue;
      auto phrase = text::join(ws, " ");
      std::string canonical;
      if (auto it = idx.by_words.find(phrase); it != idx.by_words.end()) {
        canonical = it->second;
      } else if (auto key = company_key(phrase); !key.empty()) {
        if (auto kt = idx.by_key.find(key); kt != idx.by_key.end() && (len > 1 || capitalized(toks[i]))) {
          canonical = kt->second;
        }
      }
      if (canonical.empty()) continue;
      found.push_back(canonical);
      for (std::size_t k = 0; k < len; ++k) toks[i + k].used = true;
      i += len - 1;
      break;
    }
  }
  return found;
}

struct Unknown {
  std::string text;
  std::vector<std::string> suggestions;
};

/// Capitalized runs that no table claimed are company candidates; they are
/// fuzzy-resolved or reported.
std::optional<Unknown> resolve_leftover_names(std::vector<Token>& toks, std::string_view input,
                                              const MetricsCatalog& catalog, const Grammar& g,
                                              std::vector<std::string>& companies) {
  auto candidate = [&](const Token& t) {
    return !t.used && capitalized(t) && !g.keywords.count(t.w) && !is_month_word(t.w) && !all_digits(t.w);
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!candidate(toks[i])) continue;
    std::size_t j = i + 1;
    while (j < toks.size()) {
      if (candidate(toks[j])) {
        ++j;
      } else if (toks[j].w == "of" && j + 1 < toks.size() && candidate(toks[j + 1])) {
        j += 2;
      } else {
        break;
      }
    }
    if (i == 0 && j == 1) {
      // Sentence-initial capital on a lone word says nothing.
      continue;
    }
    auto run = std::string(input.substr(toks[i].begin, toks[j - 1].end - toks[i].begin));
    auto r = resolve_company(catalog, run);
    if (auto* m = std::get_if<CompanyMatch>(&r)) {
      companies.push_back(m->canonical);
      for (std::size_t k = i; k < j; ++k) toks[k].used = true;
    } else {
      return Unknown{run, std::get<NoMatch>(r).suggestions};
    }
    i = j - 1;
  }
  return std::nullopt;
}

std::string list_display(const MetricsCatalog& catalog, const std::string& id) { return catalog.display_name(id); }

std::string join_human(const std::vector<std::string>& items) {
  if (items.empty()) return {};
  if (items.size() == 1) return items[0];
  std::string out;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out + " and " + items.back();
}

std::vector<std::string> supported_metric_labels() {
  std::vector<std::string> out;
  for (auto m : kAllMetrics) out.emplace_back(metric_label(m));
  return out;
}

/// Top-k mentions: "top 5", "top five", "5 largest", "largest 5", "which 5
/// companies". A bare "top" returns 0, meaning "use the default".
std::optional<int> find_top_k(std::vector<Token>& toks, std::string& residual) {
  auto blank = [&](const Token& t) { std::fill(residual.begin() + t.begin, residual.begin() + t.end, ' '); };
  static const std::set<std::string, std::less<>> kLead = {"top", "largest", "biggest", "leading", "first"};
  static const std::set<std::string, std::less<>> kTrail = {"largest", "biggest", "leading", "top", "highest"};
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].used) continue;
    if (kLead.count(toks[i].w) && i + 1 < toks.size() && !toks[i + 1].used) {
      if (auto k = text::count_word(toks[i + 1].w)) {
        toks[i + 1].used = true;
        blank(toks[i + 1]);
        return *k;
      }
    }
    if (auto k = text::count_word(toks[i].w); k && i + 1 < toks.size() && kTrail.count(toks[i + 1].w)) {
      toks[i].used = true;
      blank(toks[i]);
      return *k;
    }
    // "which 5 companies", "which five Fortune 1000 firms"
    auto names_companies = [&](std::size_t from) {
      for (std::size_t j = from; j < toks.size() && j < from + 4; ++j) {
        if (toks[j].w == "companies" || toks[j].w == "firms") return true;
      }
      return false;
    };
    if (toks[i].w == "which" && i + 2 < toks.size() && !toks[i + 1].used && names_companies(i + 2)) {
      if (auto k = text::count_word(toks[i + 1].w)) {
        toks[i + 1].used = true;
        blank(toks[i + 1]);
        return *k;
      }
    }
  }
  for (const auto& t : toks) {
    if (t.w == "top") return 0;
  }
  return std::nullopt;
}

Date last_day_of(int year, unsigned month) {
  using namespace std::chrono;
  year_month_day_last l{std::chrono::year{year} / std::chrono::month{month} / last};
  return Date{l};
}

}  // namespace

Intent classify_intent(std::string_view text, const Grammar& grammar) {
  auto toks = query_tokens(text);
  if (toks.empty()) return Intent::metric_qa;
  return classify_tokens(toks, grammar);
}

const std::string& Grammar::persona_text(std::string_view query) const {
  auto toks = query_tokens(query);
  for (const auto& [phrases, body] : persona_answers) {
    if (contains_any(toks, phrases)) return body;
  }
  return persona_default;
}

ParseResult parse_query(std::string_view text, const MetricsCatalog& catalog, Date ref_date, const Grammar& g) {
  using K = ParseDiagnostics::Kind;
  auto toks = query_tokens(text);
  if (toks.empty()) return diag(K::out_of_grammar, "Please ask a question about companies, rankings or trends.");

  Intent intent = classify_tokens(toks, g);
  QueryPlan plan;
  plan.intent = intent;
  if (intent == Intent::persona) return plan;

  std::string residual(text);
  auto blank = [&](std::size_t pos, std::size_t len) {
    for (std::size_t k = pos; k < pos + len; ++k) {
      std::fill(residual.begin() + toks[k].begin, residual.begin() + toks[k].end, ' ');
    }
  };

  // Lists.
  std::vector<std::pair<Phrase, std::string>> list_rows;
  for (const auto& [id, ps] : g.list_phrases) {
    for (const auto& p : ps) list_rows.emplace_back(p, id);
  }
  std::optional<std::string> explicit_list;
  for (const auto& h : scan_table(toks, list_rows)) {
    blank(h.pos, h.len);
    if (!explicit_list) explicit_list = h.label;
  }
  if (explicit_list && !catalog.lists.count(*explicit_list)) {
    std::vector<std::string> available;
    for (const auto& [id, info] : catalog.lists) available.push_back(info.display_name);
    return diag(K::boundary_reject, "The " + catalog.display_name(*explicit_list) + " list is not in the dataset.",
                available);
  }

  // Companies (trend topics may name companies; they stay topic terms).
  std::vector<std::string> companies;
  if (intent != Intent::trend) {
    CompanyIndex idx(catalog);
    auto before = toks;
    companies = match_companies(toks, idx, g);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].used && !before[i].used) blank(i, 1);
    }
  }

  // Metrics and unsupported measures in one leftmost-longest pass.
  std::vector<std::pair<Phrase, std::string>> measure_rows;
  for (const auto& [m, ps] : g.metric_phrases) {
    for (const auto& p : ps) measure_rows.emplace_back(p, "m:" + std::string(metric_id(m)));
  }
  for (const auto& [name, p] : g.out_of_domain) measure_rows.emplace_back(p, "o:" + name);
  std::vector<Metric> metrics;
  std::vector<std::string> unsupported;
  for (const auto& h : scan_table(toks, measure_rows)) {
    if (h.label[0] == 'm') {
      auto m = *metric_from_id(std::string_view(h.label).substr(2));
      if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
    } else if (std::find(unsupported.begin(), unsupported.end(), h.label.substr(2)) == unsupported.end()) {
      unsupported.push_back(h.label.substr(2));
    }
  }

  // Grouping, aggregation, filters, chart type.
  std::optional<GroupSpec> group;
  if (auto gh = scan_table(toks, rows_of(g.group_phrases)); !gh.empty()) {
    group = GroupSpec{gh.front().label, Aggregation::sum};
    if (auto ah = scan_table(toks, rows_of(g.aggregation_phrases)); !ah.empty()) group->agg = ah.front().label;
  }
  std::optional<FilterSpec> filter;
  if (intent != Intent::trend) {
    std::vector<std::pair<Phrase, FilterSpec>> rows;
    for (const auto& s : catalog.sectors) rows.emplace_back(phrase_of(s), FilterSpec{GroupField::sector, s});
    for (const auto& c : catalog.countries) rows.emplace_back(phrase_of(c), FilterSpec{GroupField::country, c});
    std::erase_if(rows, [](const auto& r) { return r.first.empty(); });
    auto fh = scan_table(toks, rows);
    for (const auto& h : fh) blank(h.pos, h.len);
    if (!fh.empty() && !(group && group->field == fh.front().label.field)) filter = fh.front().label;
  }
  std::optional<ChartType> explicit_chart;
  if (auto ch = scan_table(toks, rows_of(g.chart_phrases)); !ch.empty()) explicit_chart = ch.front().label;
  scan_table(toks, [&] {
    std::vector<std::pair<Phrase, int>> rows;
    for (const auto& p : g.premise_rank_one) rows.emplace_back(p, 0);
    return rows;
  }());
  std::optional<int> top_k = find_top_k(toks, residual);

  if (intent != Intent::trend) {
    if (auto unknown = resolve_leftover_names(toks, text, catalog, g, companies)) {
      return diag(K::unknown_entity, "No company named '" + unknown->text + "' is in the dataset.",
                  unknown->suggestions);
    }
  }
  std::sort(companies.begin(), companies.end());
  companies.erase(std::unique(companies.begin(), companies.end()), companies.end());

  if (!unsupported.empty()) {
    return diag(K::out_of_domain,
                "The dataset has no " + join_human(unsupported) + "; supported metrics are " +
                    join_human(supported_metric_labels()) + ".",
                supported_metric_labels());
  }

  TemporalExpr expr;
  try {
    expr = parse_temporal(residual, ref_date);
  } catch (const MalformedRange& e) {
    return diag(K::out_of_grammar, std::string("The time range is reversed: ") + e.what() + ".");
  }

  if (top_k && *top_k != 0 && (*top_k < 1 || *top_k > 100)) {
    return diag(K::out_of_grammar, "Top-k must be between 1 and 100.");
  }

  // ---- Trend ----
  if (intent == Intent::trend) {
    TrendRequest tr;
    std::vector<std::string> run;
    auto flush = [&] {
      if (!run.empty()) tr.topic_terms.push_back(text::join(run, " "));
      run.clear();
    };
    std::vector<std::pair<Phrase, TrendScale>> scale_rows = rows_of(g.trend_scale_phrases);
    auto sh = scan_table(toks, scale_rows);
    for (const auto& t : toks) {
      bool topical = !t.used && t.w.size() >= 2 && !g.keywords.count(t.w) && !g.topic_noise.count(t.w) &&
                     !is_month_word(t.w) && !all_digits(t.w);
      if (topical) {
        run.push_back(t.w);
      } else {
        flush();
      }
    }
    flush();
    std::sort(tr.topic_terms.begin(), tr.topic_terms.end());
    tr.topic_terms.erase(std::unique(tr.topic_terms.begin(), tr.topic_terms.end()), tr.topic_terms.end());
    if (tr.topic_terms.empty()) return diag(K::out_of_grammar, "Which topic should the trend cover?");

    int ref_year = year_of(ref_date);
    if (auto mm = find_month_mention(residual)) {
      tr.scale = TrendScale::month;
      tr.from = make_date(mm->year, mm->month, 1);
      tr.to = last_day_of(mm->year, mm->month);
    } else {
      if (expr.kind == TemporalExpr::Kind::unspecified) {
        expr = TemporalExpr{};
        expr.kind = TemporalExpr::Kind::last_n_years;
        expr.count = g.default_trend_years;
      }
      auto years = resolve(expr, ref_date, ref_year).years;
      tr.scale = TrendScale::year;
      tr.from = make_date(years.front(), 1, 1);
      tr.to = std::min(make_date(years.back(), 12, 31), std::max(ref_date, make_date(years.back(), 1, 1)));
    }
    if (!sh.empty()) tr.scale = sh.front().label;
    plan.trend = tr;
    return plan;
  }

  // ---- Data intents ----
  if (intent == Intent::ranking_qa && !companies.empty()) {
    if (companies.size() > 1) {
      return diag(K::out_of_grammar, "Ask about one company's rank at a time, or chart several companies together.");
    }
    intent = Intent::metric_qa;
    metrics = {Metric::rank};
  }
  if (intent == Intent::ranking_qa && group) {
    return diag(K::out_of_grammar, "Grouped totals are available as charts, for example 'plot total revenue by sector'.");
  }
  plan.intent = intent;
  plan.companies = companies;
  plan.list_id = explicit_list ? *explicit_list : choose_list(catalog, g, companies, expr, ref_date);
  if (plan.list_id.empty()) return diag(K::boundary_reject, "No ranking lists are loaded.");

  switch (intent) {
    case Intent::metric_qa: {
      if (companies.empty()) {
        if (metrics.empty()) {
          return diag(K::out_of_domain,
                      "That question is outside the ranking data. Ask about a company's " +
                          join_human(supported_metric_labels()) + ", a ranking, or a coverage trend.",
                      supported_metric_labels());
        }
        return diag(K::out_of_grammar, "Which company do you mean?");
      }
      if (companies.size() > 1) {
        return diag(K::out_of_grammar,
                    "Ask about one company at a time, or compare " + join_human(companies) + " in a chart.");
      }
      if (metrics.empty()) {
        return diag(K::out_of_grammar, "Which metric do you need for " + companies.front() + "?",
                    supported_metric_labels());
      }
      if (!company_years(catalog, companies.front(), plan.list_id)) {
        std::vector<std::string> lists;
        for (const auto& [id, ys] : catalog.companies.at(companies.front()).coverage) {
          lists.push_back(list_display(catalog, id));
        }
        return diag(K::boundary_reject,
                    companies.front() + " does not appear on the " + list_display(catalog, plan.list_id) + ".", lists);
      }
      plan.metrics = metrics;
      break;
    }
    case Intent::ranking_qa:
      plan.metrics = {metrics.empty() ? Metric::rank : metrics.front()};
      plan.top_k = (top_k && *top_k > 0) ? *top_k : g.default_top_k;
      plan.filter = filter;
      break;
    case Intent::chart: {
      if (metrics.empty()) {
        if (group && group->agg == Aggregation::count) {
          metrics = {Metric::rank};
        } else {
          return diag(K::out_of_grammar, "Which metric should the chart show?", supported_metric_labels());
        }
      }
      if (metrics.size() > 2) return diag(K::out_of_grammar, "A chart can relate at most two metrics.");
      if (static_cast<int>(companies.size()) > g.max_chart_companies) {
        return diag(K::out_of_grammar,
                    "Charts are limited to " + std::to_string(g.max_chart_companies) +
                        " companies; ask for the top companies instead.",
                    {"top " + std::to_string(g.max_chart_companies)});
      }
      if (!companies.empty() && top_k) {
        return diag(K::out_of_grammar, "Name the companies or ask for the top companies, not both.");
      }
      if (companies.empty() && !group) plan.top_k = (top_k && *top_k > 0) ? *top_k : g.default_top_k;
      if (group && top_k) return diag(K::out_of_grammar, "Grouped charts cover every company on the list.");
      plan.metrics = metrics;
      plan.group = group;
      plan.filter = filter;
      break;
    }
    default:
      break;
  }

  // Time, then the knowledge boundary.
  auto scope = scope_for(plan, catalog);
  if (!scope) return diag(K::boundary_reject, "Nothing in the dataset covers that request.");
  auto& [cov, policy] = *scope;
  if (intent == Intent::chart && expr.kind == TemporalExpr::Kind::unspecified && explicit_chart == ChartType::line) {
    plan.time = ResolvedTime{cov.years, ResolvedTime::Basis::defaulted_to_latest};
  } else {
    plan.time = resolve(expr, ref_date, cov.cutoff_year);
  }
  plan.boundary = clamp_to_coverage(plan.time, cov, policy);

  if (intent == Intent::chart) {
    ChartType inferred = plan.metrics.size() == 2 ? ChartType::scatter
                         : plan.time.years.size() > 1 ? ChartType::line
                                                      : ChartType::bar;
    ChartType t = explicit_chart.value_or(inferred);
    if (t == ChartType::scatter && plan.metrics.size() != 2) {
      return diag(K::out_of_grammar, "A scatter plot relates two metrics; name a second one.");
    }
    if (t != ChartType::scatter && plan.metrics.size() == 2) {
      return diag(K::out_of_grammar, "A " + std::string(chart_type_name(t)) +
                                         " chart shows one metric; use a scatter plot to relate two.");
    }
    if (t == ChartType::scatter && plan.group) {
      return diag(K::out_of_grammar, "Grouped totals can be shown as bar or line charts.");
    }
    plan.chart_type = t;
  }

  if (auto bad = validate_plan(plan)) return diag(K::out_of_grammar, *bad);
  return plan;
}

std::optional<ParseDiagnostics> check_premise(std::string_view text, const QueryPlan& plan, const Dataset& dataset,
                                              const Grammar& g) {
  if (plan.intent != Intent::metric_qa || plan.companies.size() != 1) return std::nullopt;
  if (plan.boundary.kind != BoundaryOutcome::Kind::in_range || plan.boundary.effective_years.size() != 1) {
    return std::nullopt;
  }
  auto toks = query_tokens(text);
  if (!contains_any(toks, g.premise_rank_one)) return std::nullopt;
  int year = plan.boundary.effective_years.front();
  const auto* rec = dataset.find(plan.list_id, year, plan.companies.front());
  if (!rec || rec->rank == 1) return std::nullopt;
  const auto& cat = dataset.catalog();
  std::string leader;
  for (const auto& r : dataset.records()) {
    if (r.list_id == plan.list_id && r.year == year && r.rank == 1) leader = dataset.canonical_name(r);
  }
  ParseDiagnostics d;
  d.kind = ParseDiagnostics::Kind::boundary_reject;
  d.message = plan.companies.front() + " was not first on the " + cat.display_name(plan.list_id) + " in " +
              std::to_string(year) + "; it ranked " + std::to_string(rec->rank) + "." +
              (leader.empty() ? "" : " " + leader + " ranked first.");
  if (!leader.empty()) d.suggestions.push_back(leader);
  return d;
}

// ---------------------------------------------------------------------------
// Canonical form

std::string format_years(const std::vector<int>& years) {
  std::string out;
  for (std::size_t i = 0; i < years.size();) {
    std::size_t j = i;
    while (j + 1 < years.size() && years[j + 1] == years[j] + 1) ++j;
    if (!out.empty()) out += ',';
    out += std::to_string(years[i]);
    if (j > i) out += "-" + std::to_string(years[j]);
    i = j + 1;
  }
  return out;
}

std::vector<int> parse_years(std::string_view s) {
  std::vector<int> out;
  auto num = [](std::string_view p) {
    if (!all_digits(p) || p.size() > 4) throw std::invalid_argument("bad year '" + std::string(p) + "'");
    return std::stoi(std::string(p));
  };
  for (const auto& part : text::split(s, ',')) {
    auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(num(part));
      continue;
    }
    int a = num(std::string_view(part).substr(0, dash)), b = num(std::string_view(part).substr(dash + 1));
    if (a >= b) throw std::invalid_argument("bad year run '" + part + "'");
    for (int y = a; y <= b; ++y) out.push_back(y);
  }
  if (out.empty() || !std::is_sorted(out.begin(), out.end()) ||
      std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw std::invalid_argument("years must be ascending and unique");
  }
  return out;
}

namespace {

std::string escape_value(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '%': out += "%25"; break;
      case ',': out += "%2C"; break;
      case '=': out += "%3D"; break;
      case ':': out += "%3A"; break;
      case '+': out += "%2B"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_value(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      auto code = s.substr(i + 1, 2);
      char c = code == "25" ? '%' : code == "2C" ? ',' : code == "3D" ? '=' : code == "3A" ? ':' : code == "2B" ? '+' : 0;
      if (!c) throw std::invalid_argument("bad escape in '" + std::string(s) + "'");
      out += c;
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string metrics_field(const std::vector<Metric>& ms) {
  std::string out;
  for (auto m : ms) out += (out.empty() ? "" : ",") + std::string(metric_id(m));
  return out;
}

std::string boundary_suffix(const QueryPlan& p) {
  switch (p.boundary.kind) {
    case BoundaryOutcome::Kind::in_range:
      return p.boundary.effective_years == p.time.years ? "" : " effective=" + format_years(p.boundary.effective_years);
    case BoundaryOutcome::Kind::redirect:
      return " redirect=" + format_years(p.boundary.effective_years);
    case BoundaryOutcome::Kind::reject:
      return " reject=latest:" + std::to_string(p.boundary.latest_available);
  }
  return "";
}

std::string filter_field(const FilterSpec& f) {
  return " filter=" + std::string(group_field_name(f.field)) + ":" + escape_value(f.value);
}

}  // namespace

std::string canonical_form(const QueryPlan& p) {
  std::string out;
  switch (p.intent) {
    case Intent::persona:
      return "persona";
    case Intent::trend: {
      out = "trend topics=";
      for (std::size_t i = 0; i < p.trend->topic_terms.size(); ++i) {
        if (i) out += ',';
        auto t = escape_value(p.trend->topic_terms[i]);
        std::replace(t.begin(), t.end(), ' ', '+');
        out += t;
      }
      out += " scale=" + std::string(trend_scale_name(p.trend->scale));
      out += " from=" + format_iso_date(p.trend->from) + " to=" + format_iso_date(p.trend->to);
      return out;
    }
    case Intent::metric_qa:
      out = "metric company=" + escape_value(p.companies.empty() ? "" : p.companies.front());
      out += " metric=" + metrics_field(p.metrics);
      if (p.list_id != "g500") out += " list=" + p.list_id;
      break;
    case Intent::ranking_qa:
      out = "ranking list=" + p.list_id + " top=" + std::to_string(p.top_k.value_or(0));
      out += " metric=" + metrics_field(p.metrics);
      if (p.filter) out += filter_field(*p.filter);
      break;
    case Intent::chart:
      out = "chart " + std::string(chart_type_name(p.chart_type.value_or(ChartType::bar)));
      out += " list=" + p.list_id + " metrics=" + metrics_field(p.metrics);
      if (!p.companies.empty()) {
        out += " companies=";
        for (std::size_t i = 0; i < p.companies.size(); ++i) out += (i ? "," : "") + escape_value(p.companies[i]);
      }
      if (p.top_k) out += " top=" + std::to_string(*p.top_k);
      if (p.filter) out += filter_field(*p.filter);
      if (p.group) {
        out += " group=" + std::string(group_field_name(p.group->field)) + ":" + std::string(aggregation_name(p.group->agg));
      }
      break;
  }
  out += " years=" + format_years(p.time.years);
  out += boundary_suffix(p);
  return out;
}

QueryPlan parse_canonical(std::string_view s, const MetricsCatalog& catalog) {
  auto fail = [&](const std::string& why) -> std::invalid_argument {
    return std::invalid_argument("plan '" + std::string(s) + "': " + why);
  };
  auto parts = text::split(s, ' ');
  if (parts.empty() || parts[0].empty()) throw fail("empty");
  QueryPlan p;
  std::size_t i = 1;
  if (parts[0] == "persona") {
    p.intent = Intent::persona;
  } else if (parts[0] == "trend") {
    p.intent = Intent::trend;
  } else if (parts[0] == "metric") {
    p.intent = Intent::metric_qa;
  } else if (parts[0] == "ranking") {
    p.intent = Intent::ranking_qa;
  } else if (parts[0] == "chart") {
    p.intent = Intent::chart;
    if (parts.size() < 2 || !chart_type_from_name(parts[1])) throw fail("unknown chart type");
    p.chart_type = chart_type_from_name(parts[1]);
    i = 2;
  } else {
    throw fail("unknown plan kind '" + parts[0] + "'");
  }

  std::vector<std::pair<std::string, std::string>> kv;
  for (; i < parts.size(); ++i) {
    auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      if (kv.empty()) throw fail("value without key");
      kv.back().second += " " + parts[i];
    } else {
      kv.emplace_back(parts[i].substr(0, eq), parts[i].substr(eq + 1));
    }
  }
  std::map<std::string, std::string> f;
  for (auto& [k, v] : kv) {
    if (!f.emplace(k, v).second) throw fail("duplicate key '" + k + "'");
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = f.find(key);
    if (it == f.end()) return std::nullopt;
    auto v = it->second;
    f.erase(it);
    return v;
  };
  auto need = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw fail("missing '" + key + "'");
    return *v;
  };
  auto parse_metrics = [&](const std::string& v) {
    std::vector<Metric> ms;
    for (const auto& id : text::split(v, ',')) {
      auto m = metric_from_id(id);
      if (!m) throw fail("unknown metric '" + id + "'");
      ms.push_back(*m);
    }
    return ms;
  };
  auto parse_int = [&](const std::string& v) {
    if (!all_digits(v) || v.size() > 3) throw fail("bad integer '" + v + "'");
    return std::stoi(v);
  };
  auto parse_filter = [&](const std::string& v) {
    auto c = v.find(':');
    if (c == std::string::npos) throw fail("bad filter");
    auto field = group_field_from_name(v.substr(0, c));
    if (!field) throw fail("bad filter field");
    return FilterSpec{*field, unescape_value(v.substr(c + 1))};
  };

  if (p.intent == Intent::trend) {
    TrendRequest tr;
    for (const auto& t : text::split(need("topics"), ',')) {
      auto term = t;
      std::replace(term.begin(), term.end(), '+', ' ');
      tr.topic_terms.push_back(unescape_value(term));
    }
    auto scale = trend_scale_from_name(need("scale"));
    if (!scale) throw fail("unknown scale");
    tr.scale = *scale;
    auto from = parse_iso_date(need("from"));
    auto to = parse_iso_date(need("to"));
    if (!from || !to) throw fail("bad date");
    tr.from = *from;
    tr.to = *to;
    p.trend = tr;
  } else if (p.intent != Intent::persona) {
    if (p.intent == Intent::metric_qa) {
      p.companies = {unescape_value(need("company"))};
      p.metrics = parse_metrics(need("metric"));
      p.list_id = take("list").value_or("g500");
    } else if (p.intent == Intent::ranking_qa) {
      p.list_id = need("list");
      p.top_k = parse_int(need("top"));
      p.metrics = parse_metrics(need("metric"));
      if (auto v = take("filter")) p.filter = parse_filter(*v);
    } else {
      p.list_id = need("list");
      p.metrics = parse_metrics(need("metrics"));
      if (auto v = take("companies")) {
        for (const auto& c : text::split(*v, ',')) p.companies.push_back(unescape_value(c));
      }
      if (auto v = take("top")) p.top_k = parse_int(*v);
      if (auto v = take("filter")) p.filter = parse_filter(*v);
      if (auto v = take("group")) {
        auto c = v->find(':');
        if (c == std::string::npos) throw fail("bad group");
        auto field = group_field_from_name(v->substr(0, c));
        auto agg = aggregation_from_name(v->substr(c + 1));
        if (!field || !agg) throw fail("bad group");
        p.group = GroupSpec{*field, *agg};
      }
    }
    for (const auto& c : p.companies) {
      if (!catalog.companies.count(c)) throw fail("unknown company '" + c + "'");
    }
    try {
      p.time.years = parse_years(need("years"));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
    take("effective");
    take("redirect");
    take("reject");
    auto scope = scope_for(p, catalog);
    if (!scope) throw fail("list or company outside the catalog");
    p.boundary = clamp_to_coverage(p.time, scope->first, scope->second);
  }
  if (!f.empty()) throw fail("unexpected key '" + f.begin()->first + "'");
  if (auto bad = validate_plan(p)) throw fail(*bad);
  if (canonical_form(p) != s) throw fail("not in canonical form (expected '" + canonical_form(p) + "')");
  return p;
}

}  // namespace bizlens
