// Temporal phrases with today = 2025-06-01 and latest covered year 2024.
#pragma once

#include <string>
#include <vector>

#include "bizlens/temporal.hpp"

namespace bizlens::testing {

inline std::vector<int> span(int a, int b) {
  std::vector<int> v;
  for (int y = a; y <= b; ++y) v.push_back(y);
  return v;
}

inline std::vector<int> resolve_text(const std::string& text, Date today, int latest) {
  return resolve(parse_temporal(text, today), today, latest).years;
}

struct TemporalCase {
  const char* text;
  std::vector<int> years;
};

inline const std::vector<TemporalCase>& temporal_table() {
  static const std::vector<TemporalCase> table = {
      {"in 2019", {2019}},
      {"2024", {2024}},
      {"for 2012", {2012}},
      {"from 2016 to 2018", span(2016, 2018)},
      {"between 2015 and 2020", span(2015, 2020)},
      {"from 2020 to 2020", {2020}},
      {"since 2021", span(2021, 2024)},
      {"since 2024", {2024}},
      {"since 2027", {2027}},
      {"last year", {2024}},
      {"this year", {2025}},
      {"two years ago", {2023}},
      {"3 years ago", {2022}},
      {"last 3 years", span(2022, 2024)},
      {"over the past 5 years", span(2020, 2024)},
      {"the past two years", span(2023, 2024)},
      {"last decade", span(2015, 2024)},
      {"2012, 2015 and 2020", {2012, 2015, 2020}},
      {"in 2018 and 2016", {2016, 2018}},
      {"in '19", {2019}},
      {"from '16 to '18", span(2016, 2018)},
      {"what was the revenue", {2024}},
      {"2019-2021", span(2019, 2021)},
      {"in 2030", {2030}},
      {"between 2010 and 2012", span(2010, 2012)},
  };
  return table;
}

}  // namespace bizlens::testing
