#include <gtest/gtest.h>

#include <fstream>

#include "bizlens/eval.hpp"
#include "bizlens/guardrails.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

const Guardrails& guards() { return *bt::fixture_snapshot().guardrails; }

// Luhn by hand: double every second digit from the right.
bool luhn_oracle(const std::string& s) {
  std::vector<int> d;
  for (char c : s) {
    if (c >= '0' && c <= '9') d.push_back(c - '0');
  }
  if (d.empty()) return false;
  int sum = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    int v = d[d.size() - 1 - i];
    if (i % 2 == 1) {
      v *= 2;
      if (v > 9) v -= 9;
    }
    sum += v;
  }
  return sum % 10 == 0;
}

std::vector<std::string> lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string l;
  while (std::getline(in, l)) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

std::vector<PiiSpan> of_kind(const std::vector<PiiSpan>& spans, PiiKind k) {
  std::vector<PiiSpan> out;
  for (const auto& s : spans) {
    if (s.kind == k) out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Guardrails, LuhnAgreesWithOracle) {
  EXPECT_TRUE(luhn_valid("4111 1111 1111 1111"));
  EXPECT_FALSE(luhn_valid("4111 1111 1111 1112"));
  Rng rng(12);
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    auto n = 1 + rng.below(19);
    for (std::size_t k = 0; k < n; ++k) s += static_cast<char>('0' + rng.below(10));
    ASSERT_EQ(luhn_valid(s), luhn_oracle(s)) << s;
  }
}

TEST(Guardrails, DetectorExamples) {
  auto card = scan_pii("my card is 4111 1111 1111 1111", &guards().lexicons());
  ASSERT_EQ(of_kind(card, PiiKind::credit_card).size(), 1u);
  EXPECT_EQ(card[0].start, 11u);
  EXPECT_EQ(card[0].end, 30u);
  EXPECT_EQ(card[0].matched_text_hash, sha256_hex("4111 1111 1111 1111"));
  EXPECT_TRUE(of_kind(scan_pii("revenue rose 4111.55 million", &guards().lexicons()), PiiKind::credit_card).empty());
  auto email = scan_pii("contact jane.doe@example.com", &guards().lexicons());
  ASSERT_EQ(email.size(), 1u);
  EXPECT_EQ(email[0].kind, PiiKind::email);
  EXPECT_EQ(scan_pii("SSN 123-45-6789").size(), 1u);
  EXPECT_TRUE(scan_pii("SSN 666-45-6789").empty());
  EXPECT_TRUE(scan_pii("SSN 900-45-6789").empty());
  EXPECT_EQ(scan_pii("call +1 415-555-0100 today")[0].kind, PiiKind::phone);
  EXPECT_EQ(scan_pii("lives at 12 Market Street", &guards().lexicons())[0].kind, PiiKind::street_address);
}

TEST(Guardrails, SpansAreSortedDisjointAndInBounds) {
  Rng rng(6);
  const std::vector<std::string> parts = {"call 415-555-0100", "4111 1111 1111 1111", "a@b.co", "123-45-6789",
                                          " and ", "revenue 2024", "12 Main Street", "x"};
  for (int i = 0; i < 500; ++i) {
    std::string t;
    for (int k = 0; k < 6; ++k) t += parts[rng.below(parts.size())];
    auto spans = scan_pii(t, &guards().lexicons());
    for (std::size_t k = 0; k < spans.size(); ++k) {
      ASSERT_LT(spans[k].start, spans[k].end);
      ASSERT_LE(spans[k].end, t.size());
      if (k) {
        ASSERT_LE(spans[k - 1].end, spans[k].start);
      }
      if (spans[k].kind == PiiKind::credit_card) {
        ASSERT_TRUE(luhn_oracle(t.substr(spans[k].start, spans[k].end - spans[k].start)));
      }
    }
  }
}

TEST(Guardrails, ClassifyHarmful) {
  EXPECT_EQ(classify_harmful("I will KILL YOU if the deal fails", guards().lexicons()),
            std::set<HarmCategory>{HarmCategory::threats_misconduct});
  EXPECT_TRUE(classify_harmful("We will kill. You know the plan.", guards().lexicons()).empty());
  EXPECT_TRUE(classify_harmful("Quarterly revenue rose on strong demand.", guards().lexicons()).empty());
}

TEST(Guardrails, GateInput) {
  auto ssn = guards().gate_input("My SSN is 123-45-6789, what was Apple's revenue?");
  EXPECT_EQ(ssn.decision, GuardrailVerdict::Decision::reject_input);
  EXPECT_EQ(ssn.categories, std::set<HarmCategory>{HarmCategory::pii});
  auto ok = guards().gate_input("Plot the revenue for Apple");
  EXPECT_EQ(ok.decision, GuardrailVerdict::Decision::pass);
  EXPECT_TRUE(ok.categories.empty());
}

TEST(Guardrails, GateOutputRedactsAndIsIdempotent) {
  const std::string text = "Reach the desk at press@example.com or 415-555-0100.";
  auto v = guards().gate_output(text);
  ASSERT_EQ(v.decision, GuardrailVerdict::Decision::redact_output);
  ASSERT_TRUE(v.redacted_text);
  EXPECT_EQ(*v.redacted_text, "Reach the desk at [REDACTED:email] or [REDACTED:phone].");
  auto again = guards().gate_output(*v.redacted_text);
  EXPECT_EQ(again.decision, GuardrailVerdict::Decision::pass);
  EXPECT_TRUE(again.spans.empty());
  EXPECT_EQ(guards().gate_output("Walmart threatens to kill you").decision, GuardrailVerdict::Decision::block_output);
  EXPECT_EQ(guards().gate_output("Bar chart: revenue in 2024.").decision, GuardrailVerdict::Decision::pass);
}

TEST(Guardrails, HarmfulSuiteIsFullyRejected) {
  auto prompts = load_safety_prompts(bt::safety_dir() / "harmful_prompts.tsv");
  ASSERT_GE(prompts.size(), 100u);
  for (const auto& p : prompts) {
    auto v = guards().gate_input(p.prompt);
    EXPECT_EQ(v.decision, GuardrailVerdict::Decision::reject_input) << p.id;
    EXPECT_TRUE(v.categories.count(*harm_category_from_name(p.category))) << p.id;
  }
}

TEST(Guardrails, CleanBusinessTextPasses) {
  auto clean = lines(bt::safety_dir() / "clean_business.txt");
  ASSERT_EQ(clean.size(), 500u);
  for (const auto& s : clean) {
    EXPECT_EQ(guards().gate_input(s).decision, GuardrailVerdict::Decision::pass) << s;
  }
}

TEST(Guardrails, EverySeededCardIsFoundAndValid) {
  auto cards = lines(bt::safety_dir() / "cards.txt");
  ASSERT_EQ(cards.size(), 50u);
  for (const auto& c : cards) {
    ASSERT_TRUE(luhn_oracle(c)) << c;
    const std::string text = "Card number " + c + " on file.";
    auto spans = of_kind(scan_pii(text, &guards().lexicons()), PiiKind::credit_card);
    ASSERT_EQ(spans.size(), 1u) << c;
    EXPECT_EQ(text.substr(spans[0].start, spans[0].end - spans[0].start), c);
  }
}

TEST(Guardrails, LexiconLoadErrors) {
  EXPECT_THROW(Lexicons::from_config(ConfigFile::parse("[nonsense.domain]\nword\n", "l.conf")), LexiconLoadError);
  EXPECT_THROW(Lexicons::from_config(ConfigFile::parse("[patterns]\nemail = ([\n", "l.conf")), LexiconLoadError);
}

TEST(Guardrails, VerdictsCarryNoRawText) {
  auto v = guards().gate_input("card 4111 1111 1111 1111 and mail a@b.co");
  for (const auto& s : v.spans) EXPECT_EQ(s.matched_text_hash.size(), 64u);
  EXPECT_FALSE(v.redacted_text);
}
