#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bizlens/config_file.hpp"
#include "bizlens/executor.hpp"
#include "bizlens/guardrails.hpp"
#include "bizlens/query.hpp"
#include "bizlens/reference.hpp"
#include "bizlens/trends.hpp"

namespace bizlens {

enum class AnswerKind { metric, ranking, chart, trend, persona, rejection };
std::string_view answer_kind_name(AnswerKind k);

struct Rejection {
  enum class Reason {
    out_of_grammar,
    unknown_entity,
    out_of_domain,
    boundary,
    false_premise,
    runtime,
    safety_input,
    safety_output
  };
  Reason reason = Reason::out_of_grammar;
  std::set<HarmCategory> categories;
  std::vector<PiiSpan> spans;  // kinds, offsets and hashes only
  std::vector<std::string> suggestions;
};
std::string_view rejection_reason_name(Rejection::Reason r);

/// A rendered response. A rejection carries no payload; a metric boundary
/// rejection carries the latest available row in latest_reference instead.
struct Answer {
  AnswerKind kind = AnswerKind::rejection;
  std::string text;
  std::optional<ResultTable> table;
  std::optional<Json> chart_spec;
  std::optional<TrendSeries> trend;
  std::optional<TrendSummary> trend_summary;
  std::optional<ResultTable> latest_reference;
  std::vector<ReferenceHit> citations;
  std::optional<std::string> boundary_note;
  std::optional<Rejection> rejection;
  std::string plan;  // canonical form; empty when no plan was built
  std::string dataset_fingerprint;
  std::string index_fingerprint;

  bool has_payload() const { return table || chart_spec || trend; }
};

/// Answer JSON, version 1. See docs/schemas.md.
Json answer_to_json(const Answer& a);

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Placeholder templates loaded from data/responses.conf.
class ResponseTemplates {
 public:
  static ResponseTemplates from_config(const ConfigFile& config);
  static ResponseTemplates load(const std::filesystem::path& path);

  /// Fills `section.key`. Throws TemplateError for a missing template or an
  /// unfilled placeholder.
  std::string render(std::string_view section, std::string_view key,
                     const std::map<std::string, std::string>& vars = {}) const;
  const std::string& label(std::string_view key) const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;  // "section.key" -> text
};

/// Display formats: monetary millions "$648,125.0 million", employees
/// "2,100,000", growth "6.0%", EPS "$6.65", rank "3".
std::string format_metric_value(Metric m, double v);

class Responder {
 public:
  explicit Responder(ResponseTemplates templates) : t_(std::move(templates)) {}

  Answer render_answer(const QueryPlan& plan, const ExecutionResult& result, const Dataset& dataset) const;
  Answer render_trend(const QueryPlan& plan, const TrendSeries& series) const;
  Answer render_persona(const std::string& text) const;

  Answer render_rejection(const ParseDiagnostics& diag, bool false_premise = false) const;
  /// Boundary rejection of a data plan. Metric plans get the latest covered
  /// year of the company as a reference row.
  Answer render_rejection(const QueryPlan& plan, const Dataset& dataset, const SandboxLimits& limits = {}) const;
  Answer render_rejection(const GuardrailVerdict& verdict) const;
  Answer render_exec_error(const QueryPlan& plan, const ExecError& error) const;

  const ResponseTemplates& templates() const { return t_; }

 private:
  std::string metric_sentence(const std::string& company, Metric m, const Cell& year, const Cell& value,
                              const std::string& list) const;
  std::optional<std::string> boundary_note(const QueryPlan& plan, const Dataset& dataset) const;

  ResponseTemplates t_;
};

/// Keeps hits scoring at least `threshold`, at most `max_citations` of them.
/// Persona answers and rejections never carry citations.
void attach_references(Answer& answer, const std::vector<ReferenceHit>& hits, double threshold = 0.2,
                       std::size_t max_citations = 3);

/// Numbers printed in answer.text that match no payload value (or
/// latest_reference value) under any display format. Occurrences of
/// `labels` (list names such as "Global 500") are skipped. Empty when grounded.
std::vector<std::string> ungrounded_numbers(const Answer& answer, const std::vector<std::string>& labels = {});
/// Display names of every list in the catalog, for ungrounded_numbers.
std::vector<std::string> list_labels(const MetricsCatalog& catalog);

}  // namespace bizlens
