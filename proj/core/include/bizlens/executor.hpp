#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bizlens/metrics_store.hpp"
#include "bizlens/query.hpp"
#include "bizlens/util.hpp"

namespace bizlens {

enum class ColumnKind { categorical, temporal, quantitative };
std::string_view column_kind_name(ColumnKind k);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  std::string unit;  // empty for categorical/temporal
  bool operator==(const Column&) const = default;
};

/// A missing quantitative value is std::monostate; it is never imputed.
using Cell = std::variant<std::monostate, double, std::string>;

struct Provenance {
  std::string plan;                 // canonical_form of the executed plan
  std::string dataset_fingerprint;
  bool operator==(const Provenance&) const = default;
};

/// Plan output. Row order is part of the result:
///   metric   by year
///   ranking  by year, then list position
///   chart    bar: y descending; line: (series, year); scatter: (year, rank)
///   grouped  bar: value descending; line: (group, year)
/// Ties fall back to lower stored rank, then company name.
struct ResultTable {
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
  Provenance provenance;

  std::optional<std::size_t> column_index(std::string_view name) const;
  bool operator==(const ResultTable&) const = default;
};

Json table_to_json(const ResultTable& t);

struct SandboxLimits {
  std::size_t max_rows_scanned = 1'000'000;
  std::size_t max_output_rows = 10'000;
  std::chrono::milliseconds wall_clock_budget{2000};
};

class ExecError : public std::runtime_error {
 public:
  enum class Kind { budget_exceeded, empty_result, column_absent, invalid_plan };
  ExecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};
std::string_view exec_error_name(ExecError::Kind k);

struct ExecutionResult {
  ResultTable table;
  std::optional<Json> chart_spec;  // chart intents only
};

/// Runs a data plan (metric, ranking or chart) under the sandbox limits.
/// Throws ExecError; a failed execution never yields a partial table.
ExecutionResult execute(const QueryPlan& plan, const Dataset& dataset, const SandboxLimits& limits = {});

/// Chart description built from a result table. Key order: version,
/// chart_type, title, x, y, series_field, rows. Rows with a missing x or y
/// value are left out. Throws ExecError(invalid_plan) when the plan cannot be
/// drawn (for example a scatter plot with one metric).
Json emit_chart_spec(const ResultTable& table, const QueryPlan& plan);

/// Independent reference implementation of execute(): a naive full scan with
/// its own filtering, selection and ordering. Used by tests and evaluation.
/// Raises the same ExecError kinds, except budget_exceeded.
ResultTable oracle_execute(const QueryPlan& plan, const Dataset& dataset);

/// Column name used for a metric in result tables and chart specs.
std::string metric_field(Metric m);
/// Column name for a grouped aggregate, e.g. "revenue_musd_sum" or "company_count".
std::string aggregate_field(Metric m, Aggregation agg);

}  // namespace bizlens
