#include "bizlens/temporal.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <set>

#include "bizlens/text.hpp"

namespace bizlens {

namespace {

struct Tok {
  std::string w;  // lowercase
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Tok> scan_tokens(std::string_view s) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!text::is_alnum(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && text::is_alnum(s[j])) ++j;
    out.push_back({text::lower(s.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

bool all_digits(std::string_view w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; });
}

class Scanner {
 public:
  Scanner(std::string_view text, Date today) : text_(text), toks_(scan_tokens(text)), today_(today) {}

  /// Year value of token i, when it stands as a calendar year.
  std::optional<int> year_at(std::size_t i) const {
    if (i >= toks_.size()) return std::nullopt;
    const auto& t = toks_[i];
    auto before = t.begin > 0 ? text_[t.begin - 1] : ' ';
    auto after = t.end < text_.size() ? text_[t.end] : ' ';
    auto after2 = t.end + 1 < text_.size() ? text_[t.end + 1] : ' ';
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    if (before == '$' || ((after == '.' || after == ',') && is_digit(after2))) return std::nullopt;
    if (t.w.size() == 4 && all_digits(t.w)) {
      int y = std::atoi(t.w.c_str());
      if (y >= 1900 && y <= 2100) return y;
      return std::nullopt;
    }
    // Two-digit years need a leading apostrophe: '19 or the UTF-8 right single quote.
    bool apostrophe = before == '\'' || (t.begin >= 3 && text_.substr(t.begin - 3, 3) == "\xe2\x80\x99");
    if (t.w.size() == 2 && all_digits(t.w) && apostrophe) {
      int century = (year_of(today_) / 100) * 100;
      return century + std::atoi(t.w.c_str());
    }
    return std::nullopt;
  }

  bool word(std::size_t i, std::string_view w) const { return i < toks_.size() && toks_[i].w == w; }

  std::string_view gap(std::size_t i) const {
    // Raw text between token i and i+1.
    if (i + 1 >= toks_.size()) return {};
    return text_.substr(toks_[i].end, toks_[i + 1].begin - toks_[i].end);
  }

  std::size_t size() const { return toks_.size(); }

 private:
  std::string_view text_;
  std::vector<Tok> toks_;
  Date today_;
};

TemporalExpr mk(TemporalExpr::Kind kind, int start = 0) {
  TemporalExpr e;
  e.kind = kind;
  e.start = start;
  return e;
}

TemporalExpr make_range(int a, int b) {
  if (a > b) throw MalformedRange(a, b);
  if (a == b) return mk(TemporalExpr::Kind::absolute_year, a);
  TemporalExpr e;
  e.kind = TemporalExpr::Kind::absolute_range;
  e.start = a;
  e.end = b;
  return e;
}

}  // namespace

TemporalExpr parse_temporal(std::string_view input, Date today) {
  Scanner sc(input, today);
  const std::size_t n = sc.size();

  // Explicit ranges.
  for (std::size_t i = 0; i < n; ++i) {
    if ((sc.word(i, "from") || sc.word(i, "between")) && sc.year_at(i + 1)) {
      const char* joiner = sc.word(i, "from") ? "to" : "and";
      if ((sc.word(i + 2, joiner) || sc.word(i + 2, "through") || sc.word(i + 2, "until")) && sc.year_at(i + 3)) {
        return make_range(*sc.year_at(i + 1), *sc.year_at(i + 3));
      }
    }
    if (auto a = sc.year_at(i)) {
      if ((sc.word(i + 1, "to") || sc.word(i + 1, "through")) && sc.year_at(i + 2)) return make_range(*a, *sc.year_at(i + 2));
      auto g = sc.gap(i);
      if (sc.year_at(i + 1) && (g == "-" || g == "\xe2\x80\x93" || g == " - " || g == " \xe2\x80\x93 ")) {
        return make_range(*a, *sc.year_at(i + 1));
      }
    }
  }

  // Open-ended starts.
  for (std::size_t i = 0; i < n; ++i) {
    if ((sc.word(i, "since") || sc.word(i, "from") || sc.word(i, "starting")) && sc.year_at(i + 1)) {
      return mk(TemporalExpr::Kind::since_year, *sc.year_at(i + 1));
    }
    if (sc.word(i, "starting") && sc.word(i + 1, "in") && sc.year_at(i + 2)) {
      return mk(TemporalExpr::Kind::since_year, *sc.year_at(i + 2));
    }
  }

  // Trailing windows: "last N years", "past decade", "N years ago", "last year".
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if ((sc.word(i, "last") || sc.word(i, "past") || sc.word(i, "previous")) && sc.word(i + 1, "decade")) {
      TemporalExpr e = mk(TemporalExpr::Kind::last_n_years);
      e.count = 10;
      return e;
    }
  }
  {
    auto toks = scan_tokens(input);
    for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
      const auto& w = toks[i].w;
      if ((w == "last" || w == "past" || w == "previous") && (toks[i + 2].w == "years" || toks[i + 2].w == "year")) {
        if (auto k = text::count_word(toks[i + 1].w); k && *k >= 1) {
          TemporalExpr e = mk(TemporalExpr::Kind::last_n_years);
          e.count = *k;
          return e;
        }
      }
    }
    for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
      if ((toks[i + 1].w == "years" || toks[i + 1].w == "year") && toks[i + 2].w == "ago") {
        if (auto k = text::count_word(toks[i].w); k && *k >= 1) {
          TemporalExpr e = mk(TemporalExpr::Kind::relative_year_offset);
          e.offset = -*k;
          return e;
        }
      }
    }
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      const auto& w = toks[i].w;
      if (toks[i + 1].w != "year") continue;
      if (w == "last" || w == "past" || w == "previous" || w == "prior") {
        TemporalExpr e = mk(TemporalExpr::Kind::relative_year_offset);
        e.offset = -1;
        return e;
      }
      if (w == "this" || w == "current") {
        TemporalExpr e = mk(TemporalExpr::Kind::relative_year_offset);
        e.offset = 0;
        return e;
      }
      if (w == "next") {
        TemporalExpr e = mk(TemporalExpr::Kind::relative_year_offset);
        e.offset = 1;
        return e;
      }
    }
  }

  // Bare years: one is a point, several form a set.
  std::set<int> years;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto y = sc.year_at(i)) years.insert(*y);
  }
  if (years.size() == 1) return mk(TemporalExpr::Kind::absolute_year, *years.begin());
  if (years.size() > 1) {
    TemporalExpr e = mk(TemporalExpr::Kind::year_set);
    e.years.assign(years.begin(), years.end());
    return e;
  }
  return TemporalExpr{};
}

std::optional<MonthMention> find_month_mention(std::string_view input) {
  static constexpr std::array<std::string_view, 12> kFull = {"january", "february", "march",     "april",
                                                             "may",     "june",     "july",      "august",
                                                             "september", "october", "november", "december"};
  auto toks = scan_tokens(input);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    const auto& w = toks[i].w;
    for (unsigned m = 0; m < 12; ++m) {
      bool hit = w == kFull[m] || (w.size() == 3 && kFull[m].substr(0, 3) == w && w != "may") ||
                 (w == "sept" && m == 8);
      if (!hit) continue;
      const auto& y = toks[i + 1].w;
      if (y.size() == 4 && all_digits(y)) {
        int year = std::atoi(y.c_str());
        if (year >= 1900 && year <= 2100) return MonthMention{year, m + 1};
      }
    }
  }
  return std::nullopt;
}

ResolvedTime resolve(const TemporalExpr& expr, Date anchor, int latest_year, AnchorSource source) {
  using K = TemporalExpr::Kind;
  ResolvedTime out;
  auto span = [&](int a, int b) {
    out.years.clear();
    for (int y = a; y <= b; ++y) out.years.push_back(y);
  };
  switch (expr.kind) {
    case K::absolute_year:
      out.years = {expr.start};
      break;
    case K::absolute_range:
      span(expr.start, expr.end);
      break;
    case K::year_set:
      out.years = expr.years;
      break;
    case K::relative_year_offset:
      out.years = {year_of(anchor) + expr.offset};
      if (source == AnchorSource::document) out.basis = ResolvedTime::Basis::document_anchored;
      break;
    case K::since_year:
      if (expr.start <= latest_year) span(expr.start, latest_year);
      else out.years = {expr.start};
      break;
    case K::last_n_years:
      span(latest_year - std::max(expr.count, 1) + 1, latest_year);
      break;
    case K::unspecified:
      out.years = {latest_year};
      out.basis = ResolvedTime::Basis::defaulted_to_latest;
      break;
  }
  return out;
}

int nearest_year(const std::vector<int>& covered, int year) {
  int best = covered.front();
  for (int y : covered) {
    int d = std::abs(y - year), bd = std::abs(best - year);
    if (d < bd || (d == bd && y > best)) best = y;
  }
  return best;
}

BoundaryOutcome clamp_to_coverage(const ResolvedTime& resolved, const YearCoverage& cov, BoundaryPolicy policy) {
  BoundaryOutcome out;
  out.latest_available = cov.cutoff_year;
  std::vector<int> inside;
  for (int y : resolved.years) {
    if (std::binary_search(cov.years.begin(), cov.years.end(), y)) inside.push_back(y);
  }
  if (inside.size() == resolved.years.size()) {
    out.kind = BoundaryOutcome::Kind::in_range;
    out.effective_years = std::move(inside);
    return out;
  }
  if (resolved.years.size() == 1) {
    int target = nearest_year(cov.years, resolved.years.front());
    out.nearest_available = target;
    if (policy == BoundaryPolicy::ranking) {
      out.kind = BoundaryOutcome::Kind::redirect;
      out.effective_years = {target};
    } else {
      out.kind = BoundaryOutcome::Kind::reject;
    }
    return out;
  }
  if (inside.empty()) {
    out.kind = BoundaryOutcome::Kind::reject;
    out.nearest_available = nearest_year(cov.years, resolved.years.back());
    return out;
  }
  out.kind = BoundaryOutcome::Kind::in_range;
  out.effective_years = std::move(inside);
  return out;
}

std::string_view basis_name(ResolvedTime::Basis b) {
  switch (b) {
    case ResolvedTime::Basis::explicit_years: return "explicit";
    case ResolvedTime::Basis::defaulted_to_latest: return "defaulted_to_latest";
    case ResolvedTime::Basis::document_anchored: return "document_anchored";
  }
  return "explicit";
}

std::string_view boundary_kind_name(BoundaryOutcome::Kind k) {
  switch (k) {
    case BoundaryOutcome::Kind::in_range: return "in_range";
    case BoundaryOutcome::Kind::redirect: return "redirect";
    case BoundaryOutcome::Kind::reject: return "reject";
  }
  return "in_range";
}

}  // namespace bizlens
