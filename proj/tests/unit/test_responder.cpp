#include <gtest/gtest.h>

#include "bizlens/responder.hpp"
#include "bizlens/text.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

const Responder& responder() { return *bt::fixture_snapshot().responder; }
const Dataset& ds() { return bt::fixture_dataset(); }

Answer answer_for(const std::string& canonical) {
  auto p = parse_canonical(canonical, ds().catalog());
  return responder().render_answer(p, execute(p, ds()), ds());
}

}  // namespace

TEST(Responder, MetricSentenceUsesPayloadValue) {
  auto a = answer_for("metric company=Walmart metric=revenue years=2024");
  auto v = std::get<MetricValue>(lookup_metric(ds(), "Walmart", Metric::revenue, 2024, "g500")).value;
  EXPECT_EQ(a.kind, AnswerKind::metric);
  EXPECT_EQ(a.text, "Walmart's revenue in 2024 was $" + text::format_grouped(v, 1) + " million.");
  EXPECT_TRUE(ungrounded_numbers(a).empty());
}

TEST(Responder, FormatMetricValue) {
  EXPECT_EQ(format_metric_value(Metric::revenue, 648125.04), "$648,125.0 million");
  EXPECT_EQ(format_metric_value(Metric::employees, 2100000), "2,100,000");
  EXPECT_EQ(format_metric_value(Metric::revenue_change_pct, 6), "6.0%");
  EXPECT_EQ(format_metric_value(Metric::eps, 6.65), "$6.65");
  EXPECT_EQ(format_metric_value(Metric::rank, 3), "3");
}

TEST(Responder, RedirectNoteNamesBothYears) {
  auto p = parse_canonical("ranking list=f1000 top=5 metric=revenue years=2017 redirect=2018", ds().catalog());
  auto a = responder().render_answer(p, execute(p, ds()), ds());
  ASSERT_TRUE(a.boundary_note);
  EXPECT_EQ(*a.boundary_note, "No 2017 list is available; showing the closest available list (2018).");
  EXPECT_TRUE(ungrounded_numbers(a, list_labels(ds().catalog())).empty()) << a.text;
}

TEST(Responder, ChartCaptionCarriesSpec) {
  auto a = answer_for("chart bar list=g500 metrics=revenue companies=Apple,Google,Nvidia years=2024");
  EXPECT_EQ(a.kind, AnswerKind::chart);
  ASSERT_TRUE(a.chart_spec);
  EXPECT_EQ(a.text.rfind("Bar chart: ", 0), 0u);
  EXPECT_EQ(a.text.find('\n'), std::string::npos);
}

TEST(Responder, OutOfDomainNamesSupportedMetrics) {
  ParseDiagnostics d;
  d.kind = ParseDiagnostics::Kind::out_of_domain;
  auto r = parse_query("What was the average stock price of Apple in 2025?", ds().catalog(), bt::ref_date(),
                       *bt::fixture_snapshot().grammar);
  auto a = responder().render_rejection(std::get<ParseDiagnostics>(r));
  EXPECT_EQ(a.kind, AnswerKind::rejection);
  EXPECT_NE(a.text.find("revenue"), std::string::npos) << a.text;
  EXPECT_FALSE(a.has_payload());
}

TEST(Responder, MetricBoundaryRejectionCarriesLatestRow) {
  auto p = parse_canonical("metric company=Walmart metric=revenue years=2031 reject=latest:2024", ds().catalog());
  auto a = responder().render_rejection(p, ds());
  EXPECT_EQ(a.kind, AnswerKind::rejection);
  EXPECT_FALSE(a.has_payload());
  ASSERT_TRUE(a.latest_reference);
  ASSERT_EQ(a.latest_reference->rows.size(), 1u);
  auto yc = *a.latest_reference->column_index("year");
  EXPECT_EQ(std::get<double>(a.latest_reference->rows[0][yc]), 2024);
  EXPECT_TRUE(ungrounded_numbers(a, list_labels(ds().catalog())).empty()) << a.text;
}

TEST(Responder, SafetyRejectionDoesNotEcho) {
  const std::string input = "my email is someone@example.com";
  auto v = bt::fixture_snapshot().guardrails->gate_input(input);
  auto a = responder().render_rejection(v);
  EXPECT_EQ(a.rejection->reason, Rejection::Reason::safety_input);
  EXPECT_EQ(a.text.find("someone@example.com"), std::string::npos);
  EXPECT_EQ(answer_to_json(a).dump().find("someone@example.com"), std::string::npos);
}

TEST(Responder, HateSpeechRejection) {
  GuardrailVerdict v;
  v.decision = GuardrailVerdict::Decision::reject_input;
  v.categories = {HarmCategory::hate_speech};
  auto a = responder().render_rejection(v);
  EXPECT_NE(a.text.find("hate speech"), std::string::npos);
  EXPECT_FALSE(a.has_payload());
}

TEST(Responder, TemplatesAreDeterministicAndGrounded) {
  Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    auto p = bt::random_plan(rng, ds());
    ExecutionResult res;
    try {
      res = execute(p, ds());
    } catch (const ExecError&) {
      continue;
    }
    auto a = responder().render_answer(p, res, ds());
    auto b = responder().render_answer(p, res, ds());
    ASSERT_EQ(canonical_json(answer_to_json(a)), canonical_json(answer_to_json(b)));
    ASSERT_TRUE(ungrounded_numbers(a, list_labels(ds().catalog())).empty()) << canonical_form(p) << "\n" << a.text;
  }
}

TEST(Responder, UngroundedNumberIsFlagged) {
  auto a = answer_for("metric company=Walmart metric=revenue years=2024");
  a.text += " It grew 12345 times.";
  EXPECT_EQ(ungrounded_numbers(a), std::vector<std::string>{"12345"});
}

TEST(Responder, RenderChecksPlaceholders) {
  const auto& t = responder().templates();
  EXPECT_EQ(t.render("boundary", "defaulted", {{"year", "2024"}}),
            "No year was given, so the latest available list is shown (2024).");
  EXPECT_THROW(t.render("boundary", "defaulted"), TemplateError);
  EXPECT_THROW(t.render("boundary", "missing"), TemplateError);
  EXPECT_THROW(ResponseTemplates::from_config(ConfigFile::parse("[x]\ny = hello {name}\n", "t.conf")), TemplateError);
}

TEST(Responder, AttachReferencesThresholdAndCap) {
  auto a = answer_for("metric company=Walmart metric=revenue years=2024");
  std::vector<ReferenceHit> hits;
  for (double s : {0.9, 0.5, 0.3, 0.25, 0.19}) {
    ReferenceHit h;
    h.doc_id = "d" + std::to_string(hits.size());
    h.score = s;
    h.rank = static_cast<int>(hits.size()) + 1;
    hits.push_back(h);
  }
  attach_references(a, hits, 0.2, 3);
  ASSERT_EQ(a.citations.size(), 3u);
  EXPECT_EQ(a.citations.back().doc_id, "d2");
  auto rej = responder().render_rejection(ParseDiagnostics{});
  attach_references(rej, hits);
  EXPECT_TRUE(rej.citations.empty());
  auto persona = responder().render_persona("I answer questions about company rankings.");
  attach_references(persona, hits);
  EXPECT_TRUE(persona.citations.empty());
}
