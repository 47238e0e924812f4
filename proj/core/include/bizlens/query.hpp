#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bizlens/config_file.hpp"
#include "bizlens/metrics_store.hpp"
#include "bizlens/temporal.hpp"

namespace bizlens {

enum class Intent { metric_qa, ranking_qa, chart, trend, persona };
enum class ChartType { bar, line, scatter };
enum class GroupField { sector, country };
enum class Aggregation { sum, avg, count, min, max };
enum class TrendScale { month, quarter, year, multi_year };

std::string_view intent_name(Intent i);
std::string_view chart_type_name(ChartType t);
std::string_view group_field_name(GroupField f);
std::string_view aggregation_name(Aggregation a);
std::string_view trend_scale_name(TrendScale s);
std::optional<ChartType> chart_type_from_name(std::string_view s);
std::optional<GroupField> group_field_from_name(std::string_view s);
std::optional<Aggregation> aggregation_from_name(std::string_view s);
std::optional<TrendScale> trend_scale_from_name(std::string_view s);

struct GroupSpec {
  GroupField field = GroupField::sector;
  Aggregation agg = Aggregation::sum;
  bool operator==(const GroupSpec&) const = default;
};

struct FilterSpec {
  GroupField field = GroupField::sector;
  std::string value;
  bool operator==(const FilterSpec&) const = default;
};

struct TrendRequest {
  std::vector<std::string> topic_terms;  // lowercase; multi-word terms keep single spaces
  TrendScale scale = TrendScale::year;
  Date from{};
  Date to{};
  bool operator==(const TrendRequest&) const = default;
};

/// Structured intent produced by the front end. Data intents (metric,
/// ranking, chart) carry a resolved time and its boundary outcome; persona
/// and trend plans leave both empty.
struct QueryPlan {
  Intent intent = Intent::metric_qa;
  std::vector<std::string> companies;  // canonical names, sorted
  std::string list_id;
  std::vector<Metric> metrics;  // one or two, in mention order
  ResolvedTime time;
  BoundaryOutcome boundary;
  std::optional<ChartType> chart_type;
  std::optional<int> top_k;
  std::optional<GroupSpec> group;
  std::optional<FilterSpec> filter;
  std::optional<TrendRequest> trend;

  /// Equality over everything canonical_form() prints; the time basis is
  /// informational and not compared.
  bool operator==(const QueryPlan& o) const;
};

/// Structural invariants (chart type present for charts, scatter has two
/// metrics, 1 <= top_k <= 100, ...). Returns a message when violated.
std::optional<std::string> validate_plan(const QueryPlan& plan);

struct ParseDiagnostics {
  enum class Kind { out_of_grammar, unknown_entity, out_of_domain, boundary_reject };
  Kind kind = Kind::out_of_grammar;
  std::string message;
  std::vector<std::string> suggestions;
};
std::string_view diagnostics_kind_name(ParseDiagnostics::Kind k);

using ParseResult = std::variant<QueryPlan, ParseDiagnostics>;

/// Phrase tables and persona text driving the rule-based front end. Loaded
/// from a key/value config file; see data/grammar.conf.
struct Grammar {
  using Phrase = std::vector<std::string>;  // token sequence

  std::map<Metric, std::vector<Phrase>> metric_phrases;
  std::vector<std::pair<std::string, Phrase>> out_of_domain;  // (display name, phrase)
  std::map<Intent, std::vector<Phrase>> intent_phrases;
  std::vector<Phrase> chart_weak_phrases;  // chart only when a metric is also named
  std::map<ChartType, std::vector<Phrase>> chart_phrases;
  std::map<std::string, std::vector<Phrase>> list_phrases;  // list_id -> phrases
  std::map<GroupField, std::vector<Phrase>> group_phrases;
  std::map<Aggregation, std::vector<Phrase>> aggregation_phrases;
  std::map<TrendScale, std::vector<Phrase>> trend_scale_phrases;
  std::vector<Phrase> premise_rank_one;
  std::set<std::string> stopwords;
  std::set<std::string> topic_noise;
  std::set<std::string> keywords;  // every word of every phrase table, plus stopwords

  int persona_version = 1;
  std::string persona_default;
  std::vector<std::pair<std::vector<Phrase>, std::string>> persona_answers;

  std::string default_list = "g500";
  std::string fallback_list = "f1000";
  int default_top_k = 10;
  int max_chart_companies = 10;
  int default_trend_years = 5;

  static Grammar from_config(const ConfigFile& config);
  static Grammar load(const std::filesystem::path& path);

  /// Persona answer text for a persona query.
  const std::string& persona_text(std::string_view query) const;
};

/// Deterministic intent priority: persona > chart > ranking > trend > metric.
/// Empty text yields metric_qa (parse_query rejects it before classifying).
Intent classify_intent(std::string_view text, const Grammar& grammar);

ParseResult parse_query(std::string_view text, const MetricsCatalog& catalog, Date ref_date, const Grammar& grammar);

/// False-premise check for claims the catalog alone cannot verify, such as
/// "Why did Apple top the Global 500 in 2020?". Returns a boundary_reject
/// correction when the stated rank contradicts the data.
std::optional<ParseDiagnostics> check_premise(std::string_view text, const QueryPlan& plan, const Dataset& dataset,
                                              const Grammar& grammar);

/// Single-line serialization, e.g.
///   chart bar list=g500 metrics=revenue companies=Apple,Google,Nvidia years=2024
///   metric company=Walmart metric=revenue years=2024
std::string canonical_form(const QueryPlan& plan);

/// Inverse of canonical_form. The boundary is recomputed against the
/// catalog, so `effective=`, `redirect=` and `reject=` suffixes are checked
/// for consistency rather than trusted. Throws std::invalid_argument.
QueryPlan parse_canonical(std::string_view text, const MetricsCatalog& catalog);

/// Compact year list: contiguous runs become "a-b", e.g. "2012,2015-2017".
std::string format_years(const std::vector<int>& years);
std::vector<int> parse_years(std::string_view s);

}  // namespace bizlens
