#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bizlens/metrics_store.hpp"
#include "bizlens/util.hpp"

namespace bizlens {

/// A temporal phrase as written, before anchoring.
struct TemporalExpr {
  enum class Kind { absolute_year, absolute_range, year_set, relative_year_offset, since_year, last_n_years, unspecified };
  Kind kind = Kind::unspecified;
  int start = 0;            // absolute_year, absolute_range start, since_year
  int end = 0;              // absolute_range end
  int offset = 0;           // relative_year_offset (e.g. -1 for "last year")
  int count = 0;            // last_n_years
  std::vector<int> years;   // year_set, sorted unique

  bool operator==(const TemporalExpr&) const = default;
};

class MalformedRange : public std::invalid_argument {
 public:
  MalformedRange(int start, int end)
      : std::invalid_argument("range start " + std::to_string(start) + " is after end " + std::to_string(end)) {}
};

/// Recognizes 4-digit years, "in YYYY", "from YYYY to YYYY", "between YYYY
/// and YYYY", "since YYYY", "last year", "this year", "N years ago", "last N
/// years", "over the past N years", "last decade", lists such as "2012, 2015
/// and 2020", and two-digit years written as '19 (expanded with the century
/// of `today`). Throws MalformedRange when a range is reversed.
TemporalExpr parse_temporal(std::string_view text, Date today);

struct MonthMention {
  int year = 0;
  unsigned month = 0;
};
/// "April 2024", "Apr 2024" and similar; the first occurrence wins.
std::optional<MonthMention> find_month_mention(std::string_view text);

struct ResolvedTime {
  enum class Basis { explicit_years, defaulted_to_latest, document_anchored };
  std::vector<int> years;  // non-empty, sorted ascending, unique
  Basis basis = Basis::explicit_years;

  bool operator==(const ResolvedTime&) const = default;
};

enum class AnchorSource { query, document };

/// Anchors an expression. Relative kinds use the anchor's year; with a
/// document anchor the basis is document_anchored and nothing else is
/// consulted.
ResolvedTime resolve(const TemporalExpr& expr, Date anchor, int latest_year,
                     AnchorSource source = AnchorSource::query);

struct BoundaryOutcome {
  enum class Kind { in_range, redirect, reject };
  Kind kind = Kind::in_range;
  std::vector<int> effective_years;  // empty iff reject
  std::optional<int> nearest_available;
  int latest_available = 0;

  bool operator==(const BoundaryOutcome&) const = default;
};

enum class BoundaryPolicy { metric, ranking };

/// Nearest covered year to `year`; equidistant candidates resolve to the
/// later year. `covered` must be non-empty and sorted.
int nearest_year(const std::vector<int>& covered, int year);

BoundaryOutcome clamp_to_coverage(const ResolvedTime& resolved, const YearCoverage& coverage, BoundaryPolicy policy);

std::string_view basis_name(ResolvedTime::Basis b);
std::string_view boundary_kind_name(BoundaryOutcome::Kind k);

}  // namespace bizlens
