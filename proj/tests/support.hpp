// Shared fixtures and generators for the test binaries.
#pragma once

#include <algorithm>
#include <filesystem>
#include <string>

#include "bizlens/pipeline.hpp"
#include "bizlens/util.hpp"

namespace bizlens::testing {

inline std::filesystem::path data_dir() { return BIZLENS_TEST_DATA_DIR; }
inline std::filesystem::path lists_dir() { return data_dir() / "fixtures" / "lists"; }
inline std::filesystem::path corpus_dir() { return data_dir() / "fixtures" / "corpus"; }
inline std::filesystem::path micro_corpus_dir() { return data_dir() / "fixtures" / "corpus_micro"; }
inline std::filesystem::path safety_dir() { return data_dir() / "safety"; }

/// Reference date pinned for every date-dependent test.
inline Date ref_date() { return make_date(2025, 6, 1); }

inline ServiceConfig fixture_config() {
  auto cfg = ServiceConfig::defaults(data_dir());
  cfg.ref_date = ref_date();
  return cfg;
}

/// Loaded once per process; snapshots are immutable.
inline const Snapshot& fixture_snapshot() {
  static const Snapshot snap = load_snapshot(fixture_config());
  return snap;
}

inline const Dataset& fixture_dataset() { return *fixture_snapshot().dataset; }

/// A random plan that passes validate_plan, built through its canonical form
/// so the catalog checks in parse_canonical apply. Years always lie inside
/// the list's coverage; companies may be absent from some of them.
inline QueryPlan random_plan(Rng& rng, const Dataset& ds) {
  const auto& cat = ds.catalog();
  std::vector<std::string> lists;
  for (const auto& [id, info] : cat.lists) lists.push_back(id);
  for (;;) {
    const std::string list = lists[rng.below(lists.size())];
    const auto& years = cat.lists.at(list).years;
    std::vector<int> ys(years.begin(), years.end());
    std::vector<std::string> companies;
    for (const auto& [name, info] : cat.companies) {
      if (info.coverage.count(list)) companies.push_back(name);
    }
    auto metric = [&] { return std::string(metric_id(kAllMetrics[rng.below(kAllMetrics.size())])); };
    auto year_field = [&]() -> std::string {
      if (rng.below(2) == 0) return std::to_string(ys[rng.below(ys.size())]);
      std::vector<int> pick;
      for (int y : ys) {
        if (rng.below(2) == 0) pick.push_back(y);
      }
      if (pick.empty()) pick.push_back(ys.front());
      return format_years(pick);
    };
    auto escape = [](std::string s) {
      std::string out;
      for (char c : s) out += c == ',' ? std::string("%2C") : std::string(1, c);
      return out;
    };
    auto some_companies = [&](std::size_t max) {
      std::vector<std::string> pick;
      std::size_t n = 1 + rng.below(max);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = companies[rng.below(companies.size())];
        if (std::find(pick.begin(), pick.end(), c) == pick.end()) pick.push_back(c);
      }
      std::sort(pick.begin(), pick.end());
      std::string out;
      for (const auto& c : pick) out += (out.empty() ? "" : ",") + escape(c);
      return out;
    };
    auto filter = [&]() -> std::string {
      switch (rng.below(4)) {
        case 0: {
          std::vector<std::string> v(cat.sectors.begin(), cat.sectors.end());
          return " filter=sector:" + v[rng.below(v.size())];
        }
        case 1: {
          std::vector<std::string> v(cat.countries.begin(), cat.countries.end());
          return " filter=country:" + v[rng.below(v.size())];
        }
        default:
          return "";
      }
    };
    std::string s;
    switch (rng.below(3)) {
      case 0:
        s = "metric company=" + escape(companies[rng.below(companies.size())]) + " metric=" + metric();
        if (list != "g500") s += " list=" + list;
        break;
      case 1:
        s = "ranking list=" + list + " top=" + std::to_string(rng.between(1, 20)) + " metric=" + metric() + filter();
        break;
      default: {
        static const char* kTypes[] = {"bar", "line", "scatter"};
        std::string type = kTypes[rng.below(3)];
        std::string m1 = metric();
        s = "chart " + type + " list=" + list + " metrics=" + m1;
        if (type == "scatter") {
          std::string m2 = metric();
          if (m2 == m1) continue;
          s += "," + m2;
        }
        switch (rng.below(3)) {
          case 0:
            s += " companies=" + some_companies(5);
            break;
          case 1:
            s += " top=" + std::to_string(rng.between(1, 15)) + filter();
            break;
          default: {
            if (type == "scatter") continue;
            static const char* kAggs[] = {"sum", "avg", "count", "min", "max"};
            s += filter() + " group=" + std::string(rng.below(2) ? "sector" : "country") + ":" + kAggs[rng.below(5)];
          }
        }
      }
    }
    s += " years=" + year_field();
    QueryPlan plan;
    try {
      plan = parse_canonical(s, cat);
    } catch (const std::invalid_argument& e) {
      // Plans whose years only partly overlap coverage need a boundary
      // suffix; the error names the exact canonical form.
      std::string what = e.what();
      auto at = what.find("(expected '");
      if (at == std::string::npos) continue;
      auto text = what.substr(at + 11, what.size() - at - 11 - 2);
      plan = parse_canonical(text, cat);
    }
    if (plan.boundary.kind == BoundaryOutcome::Kind::reject) continue;
    return plan;
  }
}

}  // namespace bizlens::testing
