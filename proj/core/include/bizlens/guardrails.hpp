#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bizlens/config_file.hpp"

namespace bizlens {

enum class PiiKind { email, phone, ssn, credit_card, govt_id, street_address, bank_account };
std::string_view pii_kind_name(PiiKind k);
std::optional<PiiKind> pii_kind_from_name(std::string_view s);

/// Location of a detected identifier. The matched text itself is never kept.
struct PiiSpan {
  PiiKind kind = PiiKind::email;
  std::size_t start = 0;  // byte offsets, [start, end)
  std::size_t end = 0;
  std::string matched_text_hash;  // sha256 of the matched bytes

  bool operator==(const PiiSpan&) const = default;
};

enum class HarmCategory { hate_speech, insults_sexual, threats_misconduct, pii };
std::string_view harm_category_name(HarmCategory c);
std::optional<HarmCategory> harm_category_from_name(std::string_view s);

struct GuardrailVerdict {
  enum class Decision { pass, reject_input, block_output, redact_output };
  Decision decision = Decision::pass;
  std::set<HarmCategory> categories;  // empty iff decision == pass
  std::vector<PiiSpan> spans;
  std::optional<std::string> redacted_text;  // redact_output only
};
std::string_view decision_name(GuardrailVerdict::Decision d);

class LexiconLoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Category phrase lists plus named PII patterns, loaded from one config
/// file (see data/lexicons.conf).
class Lexicons {
 public:
  struct Phrase {
    HarmCategory category;
    std::string domain;
    std::vector<std::string> tokens;
  };
  struct Pattern {
    PiiKind kind;
    std::string source;
    std::regex regex;
  };

  static Lexicons from_config(const ConfigFile& config);
  static Lexicons load(const std::filesystem::path& path);

  const std::vector<Phrase>& phrases() const { return phrases_; }
  const std::vector<Pattern>& patterns() const { return patterns_; }

 private:
  std::vector<Phrase> phrases_;
  std::vector<Pattern> patterns_;
};

/// Luhn checksum over the digits of `s`; other characters are ignored.
bool luhn_valid(std::string_view s);

/// Built-in detectors (email, phone, SSN, payment card) plus the configured
/// patterns. Overlapping spans are merged; the merged span takes the kind of
/// its longest member. Result is sorted by start.
std::vector<PiiSpan> scan_pii(std::string_view text, const Lexicons* lexicons = nullptr);

/// Categories whose phrases occur as contiguous, case-insensitive token
/// sequences inside a single sentence.
std::set<HarmCategory> classify_harmful(std::string_view text, const Lexicons& lexicons);

/// Replaces every span with "[REDACTED:<kind>]". Spans must be sorted and
/// non-overlapping.
std::string redact(std::string_view text, const std::vector<PiiSpan>& spans);

class Guardrails {
 public:
  explicit Guardrails(Lexicons lexicons) : lexicons_(std::move(lexicons)) {}

  /// Any PII span or harmful category rejects the input.
  GuardrailVerdict gate_input(std::string_view text) const;
  /// Harmful categories block the output; PII alone is redacted.
  GuardrailVerdict gate_output(std::string_view text) const;

  const Lexicons& lexicons() const { return lexicons_; }

 private:
  Lexicons lexicons_;
};

}  // namespace bizlens
