#include "bizlens/guardrails.hpp"

#include <algorithm>
#include <array>

#include "bizlens/text.hpp"
#include "bizlens/util.hpp"

namespace bizlens {

namespace {

constexpr std::array<std::pair<PiiKind, std::string_view>, 7> kPiiNames = {{
    {PiiKind::email, "email"},
    {PiiKind::phone, "phone"},
    {PiiKind::ssn, "ssn"},
    {PiiKind::credit_card, "credit_card"},
    {PiiKind::govt_id, "govt_id"},
    {PiiKind::street_address, "street_address"},
    {PiiKind::bank_account, "bank_account"},
}};

constexpr std::array<std::pair<HarmCategory, std::string_view>, 4> kCategoryNames = {{
    {HarmCategory::hate_speech, "hate_speech"},
    {HarmCategory::insults_sexual, "insults_sexual"},
    {HarmCategory::threats_misconduct, "threats_misconduct"},
    {HarmCategory::pii, "pii"},
}};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool alnum_at(std::string_view s, std::size_t i) { return i < s.size() && text::is_alnum(s[i]); }

/// True when [start, end) is not glued to neighbouring letters or digits.
bool bounded(std::string_view s, std::size_t start, std::size_t end) {
  return (start == 0 || !text::is_alnum(s[start - 1])) && !alnum_at(s, end);
}

PiiSpan make_span(std::string_view text, PiiKind kind, std::size_t start, std::size_t end) {
  return {kind, start, end, sha256_hex(text.substr(start, end - start))};
}

// local@domain.tld
void scan_email(std::string_view s, std::vector<PiiSpan>& out) {
  auto local_char = [](char c) { return text::is_alnum(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-'; };
  auto domain_char = [](char c) { return text::is_alnum(c) || c == '-' || c == '.'; };
  for (std::size_t at = s.find('@'); at != std::string_view::npos; at = s.find('@', at + 1)) {
    std::size_t start = at;
    while (start > 0 && local_char(s[start - 1])) --start;
    while (start < at && (s[start] == '.' || s[start] == '-')) ++start;
    std::size_t end = at + 1;
    while (end < s.size() && domain_char(s[end])) ++end;
    while (end > at + 1 && (s[end - 1] == '.' || s[end - 1] == '-')) --end;
    if (start == at || end == at + 1) continue;
    auto domain = s.substr(at + 1, end - at - 1);
    auto dot = domain.rfind('.');
    if (dot == std::string_view::npos || dot == 0) continue;
    auto tld = domain.substr(dot + 1);
    if (tld.size() < 2 || !std::all_of(tld.begin(), tld.end(), [](char c) { return text::is_alnum(c) && !is_digit(c); })) {
      continue;
    }
    out.push_back(make_span(s, PiiKind::email, start, end));
  }
}

/// A run of digit groups joined by single separators from `seps`.
struct DigitRun {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string digits;
  std::vector<std::size_t> groups;  // digits per group
};

std::vector<DigitRun> digit_runs(std::string_view s, std::string_view seps) {
  std::vector<DigitRun> runs;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i]) || (i > 0 && text::is_alnum(s[i - 1]))) {
      ++i;
      continue;
    }
    DigitRun r;
    r.start = i;
    std::size_t j = i;
    while (true) {
      std::size_t g = j;
      while (j < s.size() && is_digit(s[j])) r.digits.push_back(s[j++]);
      r.groups.push_back(j - g);
      if (j + 1 < s.size() && seps.find(s[j]) != std::string_view::npos && is_digit(s[j + 1])) {
        ++j;
        continue;
      }
      break;
    }
    r.end = j;
    runs.push_back(r);
    i = j;
  }
  return runs;
}

/// Followed by a decimal or thousands continuation such as "4111.55".
bool numeric_context(std::string_view s, const DigitRun& r) {
  if (alnum_at(s, r.end)) return true;
  if (r.end + 1 < s.size() && (s[r.end] == '.' || s[r.end] == ',') && is_digit(s[r.end + 1])) return true;
  if (r.start >= 2 && (s[r.start - 1] == '.' || s[r.start - 1] == ',') && is_digit(s[r.start - 2])) return true;
  return false;
}

void scan_cards(std::string_view s, std::vector<PiiSpan>& out) {
  for (const auto& r : digit_runs(s, " -")) {
    if (r.digits.size() < 13 || r.digits.size() > 19 || numeric_context(s, r)) continue;
    if (luhn_valid(r.digits)) out.push_back(make_span(s, PiiKind::credit_card, r.start, r.end));
  }
}

void scan_ssn(std::string_view s, std::vector<PiiSpan>& out) {
  for (const auto& r : digit_runs(s, "-")) {
    if (r.groups != std::vector<std::size_t>{3, 2, 4} || numeric_context(s, r)) continue;
    auto area = r.digits.substr(0, 3);
    if (area == "000" || area == "666" || area[0] == '9') continue;
    if (r.digits.substr(3, 2) == "00" || r.digits.substr(5) == "0000") continue;
    out.push_back(make_span(s, PiiKind::ssn, r.start, r.end));
  }
}

// E.164 ("+" then 10-15 digits, separators allowed) or NANP with
// separators: 555-123-4567, 555.123.4567, (555) 123-4567, 1 555 123 4567.
void scan_phone(std::string_view s, std::vector<PiiSpan>& out) {
  for (const auto& r : digit_runs(s, " -.")) {
    if (numeric_context(s, r)) continue;
    std::size_t start = r.start;
    if (start > 0 && s[start - 1] == '+') {
      if (r.digits.size() >= 10 && r.digits.size() <= 15) out.push_back(make_span(s, PiiKind::phone, start - 1, r.end));
      continue;
    }
    const auto& g = r.groups;
    bool nanp = g == std::vector<std::size_t>{3, 3, 4} || g == std::vector<std::size_t>{1, 3, 3, 4};
    if (nanp && g.size() == 4 && r.digits[0] != '1') nanp = false;
    if (nanp) out.push_back(make_span(s, PiiKind::phone, start, r.end));
  }
  // "(415) 555-0132"
  for (std::size_t p = s.find('('); p != std::string_view::npos; p = s.find('(', p + 1)) {
    if (p + 5 > s.size() || !is_digit(s[p + 1]) || !is_digit(s[p + 2]) || !is_digit(s[p + 3]) || s[p + 4] != ')') continue;
    std::size_t q = p + 5;
    if (q < s.size() && s[q] == ' ') ++q;
    auto rest = digit_runs(s.substr(q), " -.");
    if (rest.empty() || rest.front().start != 0) continue;
    if (rest.front().groups != std::vector<std::size_t>{3, 4}) continue;
    std::size_t end = q + rest.front().end;
    if (alnum_at(s, end)) continue;
    out.push_back(make_span(s, PiiKind::phone, p, end));
  }
}

void scan_patterns(std::string_view s, const Lexicons& lex, std::vector<PiiSpan>& out) {
  std::string owned(s);
  for (const auto& p : lex.patterns()) {
    for (auto it = std::sregex_iterator(owned.begin(), owned.end(), p.regex); it != std::sregex_iterator(); ++it) {
      auto start = static_cast<std::size_t>(it->position(0));
      auto end = start + static_cast<std::size_t>(it->length(0));
      while (end > start && (owned[end - 1] == ' ' || owned[end - 1] == '.')) --end;
      if (end > start) out.push_back(make_span(s, p.kind, start, end));
    }
  }
}

std::vector<PiiSpan> merge(std::string_view s, std::vector<PiiSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const PiiSpan& a, const PiiSpan& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end > b.end;
  });
  std::vector<PiiSpan> out;
  std::vector<std::size_t> best_len;
  for (const auto& sp : spans) {
    std::size_t len = sp.end - sp.start;
    if (!out.empty() && sp.start < out.back().end) {
      auto& m = out.back();
      if (len > best_len.back()) {
        m.kind = sp.kind;
        best_len.back() = len;
      }
      m.end = std::max(m.end, sp.end);
      continue;
    }
    out.push_back(sp);
    best_len.push_back(len);
  }
  for (auto& m : out) m.matched_text_hash = sha256_hex(s.substr(m.start, m.end - m.start));
  return out;
}

std::vector<std::vector<std::string>> sentences(std::string_view s) {
  std::vector<std::vector<std::string>> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '.' || s[i] == '!' || s[i] == '?' || s[i] == ';' || s[i] == '\n') {
      auto w = text::words(s.substr(begin, i - begin));
      if (!w.empty()) out.push_back(std::move(w));
      begin = i + 1;
    }
  }
  return out;
}

bool contains_sequence(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

std::string_view pii_kind_name(PiiKind k) {
  for (const auto& [kind, name] : kPiiNames) {
    if (kind == k) return name;
  }
  return "email";
}

std::optional<PiiKind> pii_kind_from_name(std::string_view s) {
  for (const auto& [kind, name] : kPiiNames) {
    if (name == s) return kind;
  }
  return std::nullopt;
}

std::string_view harm_category_name(HarmCategory c) {
  for (const auto& [cat, name] : kCategoryNames) {
    if (cat == c) return name;
  }
  return "pii";
}

std::optional<HarmCategory> harm_category_from_name(std::string_view s) {
  for (const auto& [cat, name] : kCategoryNames) {
    if (name == s) return cat;
  }
  return std::nullopt;
}

std::string_view decision_name(GuardrailVerdict::Decision d) {
  switch (d) {
    case GuardrailVerdict::Decision::pass: return "pass";
    case GuardrailVerdict::Decision::reject_input: return "reject_input";
    case GuardrailVerdict::Decision::block_output: return "block_output";
    case GuardrailVerdict::Decision::redact_output: return "redact_output";
  }
  return "pass";
}

Lexicons Lexicons::from_config(const ConfigFile& config) {
  Lexicons lex;
  for (const auto& sec : config.sections()) {
    if (sec.name.empty() && sec.entries.empty()) continue;  // leading comments
    if (sec.name == "patterns") {
      for (const auto& e : sec.entries) {
        auto kind = pii_kind_from_name(e.key);
        if (!kind || *kind == PiiKind::email || *kind == PiiKind::phone || *kind == PiiKind::ssn ||
            *kind == PiiKind::credit_card) {
          throw LexiconLoadError(config.source() + ":" + std::to_string(e.line) + ": no configurable pattern kind '" +
                                 e.key + "'");
        }
        try {
          lex.patterns_.push_back({*kind, e.value, std::regex(e.value, std::regex::ECMAScript | std::regex::optimize)});
        } catch (const std::regex_error& err) {
          throw LexiconLoadError(config.source() + ":" + std::to_string(e.line) + ": bad pattern: " + err.what());
        }
      }
      continue;
    }
    auto dot = sec.name.find('.');
    auto cat = harm_category_from_name(std::string_view(sec.name).substr(0, dot));
    if (!cat || *cat == HarmCategory::pii) {
      throw LexiconLoadError(config.source() + ":" + std::to_string(sec.line) + ": unknown category section [" +
                             sec.name + "]");
    }
    std::string domain = dot == std::string::npos ? "" : sec.name.substr(dot + 1);
    for (const auto& e : sec.entries) {
      if (!e.key.empty()) {
        throw LexiconLoadError(config.source() + ":" + std::to_string(e.line) + ": expected a bare phrase");
      }
      auto tokens = text::words(e.value);
      if (tokens.empty()) continue;
      lex.phrases_.push_back({*cat, domain, std::move(tokens)});
    }
  }
  if (lex.phrases_.empty()) throw LexiconLoadError(config.source() + ": no lexicon phrases");
  return lex;
}

Lexicons Lexicons::load(const std::filesystem::path& path) {
  try {
    return from_config(ConfigFile::load(path));
  } catch (const ConfigError& e) {
    throw LexiconLoadError(e.what());
  }
}

bool luhn_valid(std::string_view s) {
  int sum = 0;
  int n = 0;
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    if (!is_digit(*it)) continue;
    int d = *it - '0';
    if (n % 2 == 1) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    ++n;
  }
  return n > 0 && sum % 10 == 0;
}

std::vector<PiiSpan> scan_pii(std::string_view text, const Lexicons* lexicons) {
  std::vector<PiiSpan> spans;
  scan_email(text, spans);
  scan_cards(text, spans);
  scan_ssn(text, spans);
  scan_phone(text, spans);
  if (lexicons) scan_patterns(text, *lexicons, spans);
  std::erase_if(spans, [&](const PiiSpan& sp) { return sp.end <= sp.start || !bounded(text, sp.start, sp.end); });
  return merge(text, std::move(spans));
}

std::set<HarmCategory> classify_harmful(std::string_view text, const Lexicons& lexicons) {
  std::set<HarmCategory> out;
  for (const auto& sent : sentences(text)) {
    for (const auto& p : lexicons.phrases()) {
      if (!out.count(p.category) && contains_sequence(sent, p.tokens)) out.insert(p.category);
    }
  }
  return out;
}

std::string redact(std::string_view text, const std::vector<PiiSpan>& spans) {
  std::string out;
  std::size_t at = 0;
  for (const auto& sp : spans) {
    out.append(text.substr(at, sp.start - at));
    out += "[REDACTED:";
    out += pii_kind_name(sp.kind);
    out += "]";
    at = sp.end;
  }
  out.append(text.substr(at));
  return out;
}

GuardrailVerdict Guardrails::gate_input(std::string_view text) const {
  GuardrailVerdict v;
  v.spans = scan_pii(text, &lexicons_);
  v.categories = classify_harmful(text, lexicons_);
  if (!v.spans.empty()) v.categories.insert(HarmCategory::pii);
  if (!v.categories.empty()) v.decision = GuardrailVerdict::Decision::reject_input;
  return v;
}

GuardrailVerdict Guardrails::gate_output(std::string_view text) const {
  GuardrailVerdict v;
  v.categories = classify_harmful(text, lexicons_);
  if (!v.categories.empty()) {
    v.decision = GuardrailVerdict::Decision::block_output;
    return v;
  }
  v.spans = scan_pii(text, &lexicons_);
  if (!v.spans.empty()) {
    v.categories.insert(HarmCategory::pii);
    v.decision = GuardrailVerdict::Decision::redact_output;
    v.redacted_text = redact(text, v.spans);
  }
  return v;
}

}  // namespace bizlens
