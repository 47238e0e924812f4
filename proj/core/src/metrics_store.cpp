#include "bizlens/metrics_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <tuple>

#include "bizlens/config_file.hpp"
#include "bizlens/text.hpp"
#include "bizlens/util.hpp"

namespace bizlens {

namespace {

struct MetricDef {
  Metric metric;
  std::string_view id;
  std::string_view column;
  std::string_view label;
  std::string_view unit;
};

constexpr std::array<MetricDef, 8> kMetricDefs = {{
    {Metric::revenue, "revenue", "revenue_musd", "revenue", "USD millions"},
    {Metric::profits, "profits", "profits_musd", "profits", "USD millions"},
    {Metric::assets, "assets", "assets_musd", "assets", "USD millions"},
    {Metric::market_value, "market_value", "market_value_musd", "market value", "USD millions"},
    {Metric::employees, "employees", "employees", "employees", "employees"},
    {Metric::revenue_change_pct, "revenue_change_pct", "revenue_change_pct", "revenue change", "percent"},
    {Metric::eps, "eps", "eps", "earnings per share", "USD per share"},
    {Metric::rank, "rank", "rank", "rank", "rank"},
}};

const MetricDef& def(Metric m) {
  for (const auto& d : kMetricDefs) {
    if (d.metric == m) return d;
  }
  throw std::logic_error("unknown metric");
}

constexpr std::size_t kColumns = 16;

// RFC-4180 reader. Returns false at end of input.
bool read_csv_record(std::string_view in, std::size_t& pos, std::size_t& line, std::vector<std::string>& fields,
                     const std::string& source) {
  fields.clear();
  if (pos >= in.size()) return false;
  std::string cur;
  bool quoted = false;
  bool field_started_quoted = false;
  while (true) {
    if (pos >= in.size()) {
      if (quoted) throw IngestError(IngestError::Kind::row_error, source, line, "unterminated quoted field");
      fields.push_back(std::move(cur));
      return true;
    }
    char c = in[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < in.size() && in[pos] == '"') {
          cur.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cur.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!cur.empty() || field_started_quoted)
        throw IngestError(IngestError::Kind::row_error, source, line, "stray quote inside field");
      quoted = true;
      field_started_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      field_started_quoted = false;
    } else if (c == '\n') {
      fields.push_back(std::move(cur));
      ++line;
      return true;
    } else {
      if (field_started_quoted)
        throw IngestError(IngestError::Kind::row_error, source, line, "characters after closing quote");
      cur.push_back(c);
    }
  }
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0;
  if (s.empty()) return std::nullopt;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool valid_list_id(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

std::vector<CompanyRecord> parse_rows(std::string_view content, const std::string& source) {
  std::size_t pos = 0;
  auto nl = content.find('\n');
  std::string_view header = content.substr(0, nl);
  if (header != kCsvHeader) {
    throw IngestError(IngestError::Kind::header_mismatch, source, 1, "header does not match the expected columns");
  }
  pos = nl == std::string_view::npos ? content.size() : nl + 1;
  std::size_t line = 2;

  std::vector<CompanyRecord> rows;
  std::vector<std::string> f;
  while (true) {
    std::size_t row_line = line;
    if (!read_csv_record(content, pos, line, f, source)) break;
    if (f.size() == 1 && f[0].empty()) {
      // Blank line: only tolerated as the very end of the file.
      if (pos >= content.size()) break;
      throw IngestError(IngestError::Kind::row_error, source, row_line, "blank line");
    }
    auto fail = [&](const std::string& what) {
      return IngestError(IngestError::Kind::row_error, source, row_line, what);
    };
    if (f.size() != kColumns) {
      throw fail("expected " + std::to_string(kColumns) + " fields, found " + std::to_string(f.size()));
    }
    CompanyRecord r;
    r.list_id = f[0];
    if (!valid_list_id(r.list_id)) throw fail("invalid list_id '" + f[0] + "'");
    auto year = parse_int(f[1]);
    if (!year || *year < 1900 || *year > 2100) throw fail("year out of range or non-numeric");
    r.year = static_cast<int>(*year);
    auto rank = parse_int(f[2]);
    if (!rank || *rank < 1 || *rank > 1000000) throw fail("rank must be a positive integer");
    r.rank = static_cast<int>(*rank);
    r.company = std::string(text::trim(f[3]));
    if (r.company.empty() || r.company != f[3]) throw fail("company name is empty or padded");
    if (!f[4].empty()) {
      auto founded = parse_int(f[4]);
      if (!founded || *founded < 1000 || *founded > r.year) throw fail("founded must be a year not after the list year");
      r.founded = static_cast<int>(*founded);
    }
    r.sector = f[5];
    r.industry = f[6];
    r.country = f[7];
    r.region = f[8];
    auto number = [&](std::size_t idx, const char* name) -> std::optional<double> {
      if (f[idx].empty()) return std::nullopt;
      auto v = parse_number(f[idx]);
      if (!v) throw fail(std::string(name) + " is not a finite number");
      return v;
    };
    r.revenue = number(9, "revenue_musd");
    r.revenue_change_pct = number(10, "revenue_change_pct");
    r.profits = number(11, "profits_musd");
    r.assets = number(12, "assets_musd");
    r.market_value = number(13, "market_value_musd");
    if (!f[14].empty()) {
      auto e = parse_int(f[14]);
      if (!e || *e < 0) throw fail("employees must be a non-negative integer");
      r.employees = *e;
    }
    r.eps = number(15, "eps");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string quote_csv(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? text::shortest_double(*v) : std::string(); }

void sort_rows(std::vector<CompanyRecord>& rows) {
  std::sort(rows.begin(), rows.end(), [](const CompanyRecord& a, const CompanyRecord& b) {
    return std::tie(a.list_id, a.year, a.rank) < std::tie(b.list_id, b.year, b.rank);
  });
}

std::string list_display_name(std::string_view list_id) {
  if (list_id == "g500") return "Global 500";
  if (list_id == "f1000") return "Fortune 1000";
  if (list_id == "f500") return "Fortune 500";
  return std::string(list_id);
}

}  // namespace

std::string_view metric_id(Metric m) { return def(m).id; }
std::string_view metric_column(Metric m) { return def(m).column; }
std::string_view metric_label(Metric m) { return def(m).label; }
std::string_view metric_unit(Metric m) { return def(m).unit; }
bool metric_is_monetary(Metric m) {
  return m == Metric::revenue || m == Metric::profits || m == Metric::assets || m == Metric::market_value;
}

std::optional<Metric> metric_from_id(std::string_view id) {
  for (const auto& d : kMetricDefs) {
    if (d.id == id) return d.metric;
  }
  return std::nullopt;
}

std::optional<double> CompanyRecord::value(Metric m) const {
  switch (m) {
    case Metric::revenue: return revenue;
    case Metric::profits: return profits;
    case Metric::assets: return assets;
    case Metric::market_value: return market_value;
    case Metric::employees:
      return employees ? std::optional<double>(static_cast<double>(*employees)) : std::nullopt;
    case Metric::revenue_change_pct: return revenue_change_pct;
    case Metric::eps: return eps;
    case Metric::rank: return static_cast<double>(rank);
  }
  return std::nullopt;
}

std::optional<int> MetricsCatalog::cutoff_year(std::string_view list_id) const {
  auto it = lists.find(std::string(list_id));
  if (it == lists.end() || it->second.years.empty()) return std::nullopt;
  return *it->second.years.rbegin();
}

std::string MetricsCatalog::display_name(std::string_view list_id) const {
  auto it = lists.find(std::string(list_id));
  return it == lists.end() ? std::string(list_id) : it->second.display_name;
}

std::string company_key(std::string_view name) {
  static const std::set<std::string, std::less<>> kSuffixes = {
      "inc", "incorporated", "corp", "corporation", "co", "company", "ltd", "limited", "plc", "llc", "sa", "ag", "nv"};
  auto w = text::words(name);
  while (w.size() > 1 && kSuffixes.contains(w.back())) w.pop_back();
  return text::join(w, "");
}

IngestError::IngestError(Kind kind, std::string source, std::size_t line, const std::string& message)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
      kind_(kind),
      source_(std::move(source)),
      line_(line) {}

const std::string& Dataset::canonical_name(const CompanyRecord& r) const {
  return canonical_[static_cast<std::size_t>(&r - records_.data())];
}

std::string Dataset::row_key(std::string_view list_id, int year, std::string_view key) {
  std::string k(list_id);
  k.push_back('\x1f');
  k += std::to_string(year);
  k.push_back('\x1f');
  k += key;
  return k;
}

const CompanyRecord* Dataset::find(std::string_view list_id, int year, std::string_view canonical) const {
  auto it = row_index_.find(row_key(list_id, year, company_key(canonical)));
  return it == row_index_.end() ? nullptr : &records_[it->second];
}

MetricsCatalog derive_catalog(const std::vector<CompanyRecord>& input) {
  std::vector<const CompanyRecord*> rows;
  rows.reserve(input.size());
  for (const auto& r : input) rows.push_back(&r);
  std::sort(rows.begin(), rows.end(), [](const CompanyRecord* a, const CompanyRecord* b) {
    return std::tie(a->list_id, a->year, a->rank) < std::tie(b->list_id, b->year, b->rank);
  });

  MetricsCatalog cat;
  // key -> (year, spelling) of the most recent appearance; ties keep the first list by id.
  std::map<std::string, std::pair<int, std::string>> latest;
  std::map<std::string, std::set<std::string>> spellings;
  for (const auto* r : rows) {
    auto& li = cat.lists[r->list_id];
    li.years.insert(r->year);
    li.display_name = list_display_name(r->list_id);
    auto key = company_key(r->company);
    auto [it, inserted] = latest.try_emplace(key, r->year, r->company);
    if (!inserted && r->year > it->second.first) it->second = {r->year, r->company};
    spellings[key].insert(r->company);
    if (!r->sector.empty()) cat.sectors.insert(r->sector);
    if (!r->country.empty()) cat.countries.insert(r->country);
  }
  for (const auto* r : rows) {
    const auto& canonical = latest[company_key(r->company)].second;
    cat.companies[canonical].coverage[r->list_id].insert(r->year);
  }
  for (auto& [key, names] : spellings) {
    const auto& canonical = latest[key].second;
    for (const auto& n : names) {
      if (n != canonical) cat.companies[canonical].aliases.insert(n);
    }
  }
  return cat;
}

DatasetPtr build_dataset(std::vector<CompanyRecord> rows) {
  sort_rows(rows);
  std::set<std::tuple<std::string, int, int>> rank_keys;
  std::set<std::tuple<std::string, int, std::string>> company_keys;
  for (const auto& r : rows) {
    if (!rank_keys.emplace(r.list_id, r.year, r.rank).second) {
      throw IngestError(IngestError::Kind::duplicate_key, "dataset", 0,
                        "duplicate (list_id, year, rank) = (" + r.list_id + ", " + std::to_string(r.year) + ", " +
                            std::to_string(r.rank) + ")");
    }
    if (!company_keys.emplace(r.list_id, r.year, company_key(r.company)).second) {
      throw IngestError(IngestError::Kind::duplicate_key, "dataset", 0,
                        "duplicate (list_id, year, company) = (" + r.list_id + ", " + std::to_string(r.year) + ", " +
                            r.company + ")");
    }
  }
  auto ds = std::shared_ptr<Dataset>(new Dataset());
  ds->catalog_ = derive_catalog(rows);
  ds->records_ = std::move(rows);
  ds->fingerprint_ = sha256_hex(to_csv(ds->records_));
  std::map<std::string, std::string> key_to_canonical;
  for (const auto& [canonical, info] : ds->catalog_.companies) key_to_canonical.emplace(company_key(canonical), canonical);
  ds->canonical_.reserve(ds->records_.size());
  for (std::size_t i = 0; i < ds->records_.size(); ++i) {
    const auto& r = ds->records_[i];
    auto key = company_key(r.company);
    ds->canonical_.push_back(key_to_canonical.at(key));
    ds->row_index_.emplace(Dataset::row_key(r.list_id, r.year, key), i);
  }
  return ds;
}

DatasetPtr ingest_csv_sources(const std::vector<CsvSource>& sources) {
  std::vector<CompanyRecord> rows;
  for (const auto& s : sources) {
    auto part = parse_rows(s.content, s.name);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return build_dataset(std::move(rows));
}

DatasetPtr ingest_csv(std::string_view content, std::string_view source_name) {
  return ingest_csv_sources({CsvSource{std::string(content), std::string(source_name)}});
}

DatasetPtr load_dataset_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  if (ec) throw IngestError(IngestError::Kind::io, dir.string(), 0, "cannot read directory: " + ec.message());
  std::sort(files.begin(), files.end());
  std::vector<CsvSource> sources;
  for (const auto& f : files) sources.push_back({read_file(f), f.filename().string()});
  return ingest_csv_sources(sources);
}

std::string to_csv(const std::vector<CompanyRecord>& input) {
  auto rows = input;
  sort_rows(rows);
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const auto& r : rows) {
    std::vector<std::string> f = {
        quote_csv(r.list_id),
        std::to_string(r.year),
        std::to_string(r.rank),
        quote_csv(r.company),
        r.founded ? std::to_string(*r.founded) : "",
        quote_csv(r.sector),
        quote_csv(r.industry),
        quote_csv(r.country),
        quote_csv(r.region),
        fmt_opt(r.revenue),
        fmt_opt(r.revenue_change_pct),
        fmt_opt(r.profits),
        fmt_opt(r.assets),
        fmt_opt(r.market_value),
        r.employees ? std::to_string(*r.employees) : "",
        fmt_opt(r.eps),
    };
    out += text::join(f, ",");
    out.push_back('\n');
  }
  return out;
}

std::string to_csv(const Dataset& dataset) { return to_csv(dataset.records()); }

LookupResult lookup_metric(const Dataset& dataset, std::string_view company, Metric metric, int year,
                           std::string_view list_id) {
  const auto& cat = dataset.catalog();
  auto it = cat.companies.find(std::string(company));
  if (it == cat.companies.end()) return NotFound{NotFound::Reason::unknown_company, std::nullopt};
  const auto& info = it->second;

  std::optional<int> latest;
  for (const auto& [l, years] : info.coverage) {
    if (!list_id.empty() && l != list_id) continue;
    if (!years.empty()) latest = std::max(latest.value_or(*years.rbegin()), *years.rbegin());
    if (!years.contains(year)) continue;
    const auto* rec = dataset.find(l, year, company);
    if (!rec) continue;
    auto v = rec->value(metric);
    if (!v) return NotFound{NotFound::Reason::value_missing, std::nullopt};
    return MetricValue{*v, std::string(metric_unit(metric)), l};
  }
  if (!latest) return NotFound{NotFound::Reason::unknown_company, std::nullopt};
  return NotFound{NotFound::Reason::year_outside_coverage, latest};
}

double normalized_distance(std::string_view a, std::string_view b) {
  auto la = text::lower(text::trim(a));
  auto lb = text::lower(text::trim(b));
  auto n = std::max(la.size(), lb.size());
  if (n == 0) return 0.0;
  return static_cast<double>(text::edit_distance(la, lb)) / static_cast<double>(n);
}

ResolveResult resolve_company(const MetricsCatalog& catalog, std::string_view input) {
  auto needle = text::lower(text::trim(input));
  if (needle.empty()) return NoMatch{};
  for (const auto& [canonical, info] : catalog.companies) {
    if (text::lower(canonical) == needle) return CompanyMatch{canonical, CompanyMatch::Kind::exact};
  }
  auto key = company_key(needle);
  for (const auto& [canonical, info] : catalog.companies) {
    for (const auto& alias : info.aliases) {
      if (text::lower(alias) == needle) return CompanyMatch{canonical, CompanyMatch::Kind::alias};
    }
  }
  if (!key.empty()) {
    for (const auto& [canonical, info] : catalog.companies) {
      if (company_key(canonical) == key) return CompanyMatch{canonical, CompanyMatch::Kind::alias};
    }
  }

  std::vector<std::pair<double, std::string>> scored;
  for (const auto& [canonical, info] : catalog.companies) {
    double best = normalized_distance(needle, canonical);
    for (const auto& alias : info.aliases) best = std::min(best, normalized_distance(needle, alias));
    scored.emplace_back(best, canonical);
  }
  std::sort(scored.begin(), scored.end());
  if (!scored.empty() && scored[0].first <= 0.2 && (scored.size() == 1 || scored[1].first > scored[0].first)) {
    return CompanyMatch{scored[0].second, CompanyMatch::Kind::fuzzy};
  }
  NoMatch nm;
  for (std::size_t i = 0; i < scored.size() && i < 3; ++i) nm.suggestions.push_back(scored[i].second);
  return nm;
}

YearCoverage coverage(const MetricsCatalog& catalog, std::string_view list_id) {
  auto it = catalog.lists.find(std::string(list_id));
  if (it == catalog.lists.end() || it->second.years.empty()) throw UnknownListError(std::string(list_id));
  YearCoverage cov;
  cov.years.assign(it->second.years.begin(), it->second.years.end());
  cov.cutoff_year = cov.years.back();
  return cov;
}

YearCoverage coverage(const Dataset& dataset, std::string_view list_id) {
  return coverage(dataset.catalog(), list_id);
}

}  // namespace bizlens
