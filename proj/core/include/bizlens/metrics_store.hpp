#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace bizlens {

/// The closed set of company metrics answerable from ranking lists.
enum class Metric { revenue, profits, assets, market_value, employees, revenue_change_pct, eps, rank };

inline constexpr std::array<Metric, 8> kAllMetrics = {
    Metric::revenue,   Metric::profits,            Metric::assets, Metric::market_value,
    Metric::employees, Metric::revenue_change_pct, Metric::eps,    Metric::rank};

std::string_view metric_id(Metric m);           // "market_value"
std::string_view metric_column(Metric m);       // "market_value_musd"
std::string_view metric_label(Metric m);        // "market value"
std::string_view metric_unit(Metric m);         // "USD millions"
std::optional<Metric> metric_from_id(std::string_view id);
bool metric_is_monetary(Metric m);

struct CompanyRecord {
  std::string list_id;
  int year = 0;
  int rank = 0;
  std::string company;
  std::optional<int> founded;
  std::string sector;
  std::string industry;
  std::string country;
  std::string region;
  std::optional<double> revenue;
  std::optional<double> revenue_change_pct;
  std::optional<double> profits;
  std::optional<double> assets;
  std::optional<double> market_value;
  std::optional<std::int64_t> employees;
  std::optional<double> eps;

  /// Metric value as a double; rank and employees are converted exactly.
  std::optional<double> value(Metric m) const;

  bool operator==(const CompanyRecord&) const = default;
};

struct ListInfo {
  std::set<int> years;
  std::string display_name;
  bool operator==(const ListInfo&) const = default;
};

struct CompanyInfo {
  std::set<std::string> aliases;                  // earlier spellings, excludes the canonical name
  std::map<std::string, std::set<int>> coverage;  // list_id -> years present
  bool operator==(const CompanyInfo&) const = default;
};

/// Machine-checkable knowledge boundary, derived from the records alone.
struct MetricsCatalog {
  std::map<std::string, ListInfo> lists;
  std::map<std::string, CompanyInfo> companies;  // canonical name -> info
  std::set<std::string> sectors;
  std::set<std::string> countries;

  std::optional<int> cutoff_year(std::string_view list_id) const;
  std::string display_name(std::string_view list_id) const;

  bool operator==(const MetricsCatalog&) const = default;
};

/// Identity key that links spellings of the same company: lowercase
/// alphanumerics with a trailing legal suffix (inc, corp, co, ltd, plc, ...)
/// removed. "Walmart Inc." and "WALMART" share a key.
std::string company_key(std::string_view name);

class Dataset;
using DatasetPtr = std::shared_ptr<const Dataset>;

/// Immutable, validated set of ranking-list rows. Rows are held sorted by
/// (list_id, year, rank).
class Dataset {
 public:
  const std::vector<CompanyRecord>& records() const { return records_; }
  const MetricsCatalog& catalog() const { return catalog_; }
  const std::string& fingerprint() const { return fingerprint_; }

  /// Canonical name for a record's spelling.
  const std::string& canonical_name(const CompanyRecord& r) const;
  /// Record for (list, year, canonical company), if present.
  const CompanyRecord* find(std::string_view list_id, int year, std::string_view canonical) const;

  bool operator==(const Dataset& o) const { return records_ == o.records_ && catalog_ == o.catalog_; }

 private:
  friend DatasetPtr build_dataset(std::vector<CompanyRecord> rows);
  std::vector<CompanyRecord> records_;
  MetricsCatalog catalog_;
  std::string fingerprint_;
  std::vector<std::string> canonical_;  // parallel to records_
  std::unordered_map<std::string, std::size_t> row_index_;
  static std::string row_key(std::string_view list_id, int year, std::string_view key);
};

class IngestError : public std::runtime_error {
 public:
  enum class Kind { header_mismatch, row_error, duplicate_key, io };
  IngestError(Kind kind, std::string source, std::size_t line, const std::string& message);
  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  Kind kind_;
  std::string source_;
  std::size_t line_;
};

inline constexpr std::string_view kCsvHeader =
    "list_id,year,rank,company,founded,sector,industry,country,region,revenue_musd,revenue_change_pct,"
    "profits_musd,assets_musd,market_value_musd,employees,eps";

struct CsvSource {
  std::string content;
  std::string name;
};

/// Parses and validates one CSV. All-or-nothing: throws IngestError and
/// produces no dataset on the first structural problem.
DatasetPtr ingest_csv(std::string_view content, std::string_view source_name);
/// Ingests several CSV files as one dataset (keys must be unique across all).
DatasetPtr ingest_csv_sources(const std::vector<CsvSource>& sources);
/// Every *.csv file in `dir`, in filename order.
DatasetPtr load_dataset_dir(const std::filesystem::path& dir);

/// Builds a dataset from already-parsed rows (validates keys, derives catalog).
DatasetPtr build_dataset(std::vector<CompanyRecord> rows);
MetricsCatalog derive_catalog(const std::vector<CompanyRecord>& rows);

/// Canonical CSV: exact header, rows sorted by (list_id, year, rank),
/// shortest round-trip numbers, RFC-4180 quoting, LF endings.
std::string to_csv(const Dataset& dataset);
std::string to_csv(const std::vector<CompanyRecord>& rows);

struct MetricValue {
  double value = 0;
  std::string unit;
  std::string list_id;
  bool operator==(const MetricValue&) const = default;
};

struct NotFound {
  enum class Reason { unknown_company, year_outside_coverage, value_missing };
  Reason reason;
  std::optional<int> latest_year;  // set for year_outside_coverage
  bool operator==(const NotFound&) const = default;
};

using LookupResult = std::variant<MetricValue, NotFound>;

/// Exact stored value. With an empty list_id the first list (by id) that
/// holds the company in that year is used.
LookupResult lookup_metric(const Dataset& dataset, std::string_view company, Metric metric, int year,
                           std::string_view list_id = {});

struct CompanyMatch {
  enum class Kind { exact, alias, fuzzy };
  std::string canonical;
  Kind kind;
};
struct NoMatch {
  std::vector<std::string> suggestions;  // at most 3, nearest first
};
using ResolveResult = std::variant<CompanyMatch, NoMatch>;

/// Case-insensitive exact or alias match; otherwise a fuzzy match when the
/// best normalized edit distance is <= 0.2 and unique.
ResolveResult resolve_company(const MetricsCatalog& catalog, std::string_view text);
/// Normalized Levenshtein: distance / max(len(a), len(b)) over case-folded input.
double normalized_distance(std::string_view a, std::string_view b);

struct YearCoverage {
  std::vector<int> years;
  int cutoff_year = 0;
  bool operator==(const YearCoverage&) const = default;
};

class UnknownListError : public std::out_of_range {
 public:
  explicit UnknownListError(const std::string& list_id) : std::out_of_range("unknown list: " + list_id) {}
};

YearCoverage coverage(const Dataset& dataset, std::string_view list_id);
YearCoverage coverage(const MetricsCatalog& catalog, std::string_view list_id);

}  // namespace bizlens
