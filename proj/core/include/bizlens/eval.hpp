#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bizlens/config_file.hpp"
#include "bizlens/executor.hpp"
#include "bizlens/guardrails.hpp"
#include "bizlens/pipeline.hpp"

namespace bizlens {

class EvalTemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySuite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prompt templates for the evaluation suites, authored separately from the
/// parser's phrase tables. See data/eval/templates.conf.
struct EvalTemplate {
  std::string id;
  std::string suite;  // viz | qa
  std::string kind;   // viz: bar | line | scatter | table; qa: rubric name
  std::string list = "g500";
  std::vector<std::string> metrics;   // pool for {metric}
  std::vector<std::string> metrics2;  // pool for {metric2}
  std::vector<std::string> aggs;      // pool for {agg}
  std::vector<std::string> groups;    // pool for {group}
  std::string plan;                   // canonical plan with slots
  std::vector<std::string> prompts;   // paraphrases
};

struct EvalTemplates {
  std::map<std::string, std::vector<std::string>> wording;  // slot value -> prompt phrasings
  std::vector<EvalTemplate> templates;
  std::string header;  // note printed at the top of every report

  static EvalTemplates from_config(const ConfigFile& config);
  static EvalTemplates load(const std::filesystem::path& path);
  std::vector<const EvalTemplate*> suite(const std::string& name) const;
};

/// Rubric kinds for QA cases.
inline constexpr const char* kRubrics[] = {"exact_match", "reject_with_latest", "redirect_closest", "top5", "top10"};

struct BenchmarkCase {
  std::string case_id;
  std::string template_id;
  std::string suite;
  std::string kind;
  std::string prompt;
  std::string intended_plan;
  std::optional<ResultTable> expected_table;  // viz
  std::optional<Json> expected_chart;         // viz charts
  Json expected;                              // qa: oracle facts for the rubric
};
Json case_to_json(const BenchmarkCase& c);

/// Deterministic under `seed`. Case i uses template i mod T of the suite;
/// slots are drawn from the dataset catalog. Throws EvalTemplateError for an
/// unknown slot or a plan the catalog cannot satisfy.
std::vector<BenchmarkCase> gen_templated_prompts(const EvalTemplates& templates, const Dataset& dataset,
                                                 const std::string& suite, std::uint64_t seed, std::size_t n,
                                                 Date ref_date);

struct EvalOptions {
  std::uint64_t seed = 42;
  std::size_t n = 500;
  Date ref_date{};
  std::filesystem::path templates;
};

struct EvalReport {
  Json json;  // everything except "timing" is deterministic
  bool thresholds_met = false;
};

/// Relative tolerance for value comparison.
inline constexpr double kValueRelTol = 1e-9;

/// Parse, execute and compare each case against its oracle expectation.
EvalReport run_viz_eval(const std::vector<BenchmarkCase>& cases, const Snapshot& snap,
                        const PipelineSettings& settings, Date ref_date, const EvalTemplates& templates);

/// Full pipeline per case, scored by rubric.
EvalReport run_qa_eval(const std::vector<BenchmarkCase>& cases, const Snapshot& snap, const PipelineSettings& settings,
                       Date ref_date, const EvalTemplates& templates);

/// Reads harmful_prompts.tsv, clean_business.txt and cards.txt from `dir`.
/// Throws EmptySuite when the harmful suite has no prompts.
EvalReport run_safety_eval(const std::filesystem::path& dir, const Guardrails& guardrails);

struct SafetyPrompt {
  std::string id;
  std::string category;
  std::string prompt;
};
std::vector<SafetyPrompt> load_safety_prompts(const std::filesystem::path& tsv);

/// Nearest-rank percentile of `values` (copied and sorted); 0 when empty.
double percentile(std::vector<double> values, double p);

/// Chart specs agree on axes: x.field, y.field and series_field.
bool axes_match(const Json& actual, const Json& expected);
/// Row multisets agree, numbers within kValueRelTol relative.
bool values_match(const Json& actual_rows, const Json& expected_rows);

}  // namespace bizlens
