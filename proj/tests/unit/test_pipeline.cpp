#include <gtest/gtest.h>

#include "bizlens/pipeline.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

QueryOutcome ask(const std::string& q, const StreamSink* sink = nullptr) {
  return run_query(bt::fixture_snapshot(), PipelineSettings{}, q, bt::ref_date(), sink);
}

}  // namespace

TEST(Pipeline, InputGateRunsBeforeParsing) {
  auto out = ask("My SSN is 123-45-6789, what was Apple's revenue?");
  EXPECT_EQ(out.http_status, 422);
  EXPECT_TRUE(out.trace.input_rejected);
  EXPECT_FALSE(out.trace.parsed);
  EXPECT_FALSE(out.trace.executed);
  EXPECT_FALSE(out.trace.retrieved);
  EXPECT_EQ(out.answer.rejection->reason, Rejection::Reason::safety_input);
  EXPECT_TRUE(out.answer.plan.empty());
  EXPECT_EQ(canonical_json(answer_to_json(out.answer)).find("123-45-6789"), std::string::npos);
}

TEST(Pipeline, MetricQuery) {
  auto out = ask("What was Walmart's revenue in 2024?");
  EXPECT_EQ(out.http_status, 200);
  EXPECT_TRUE(out.trace.parsed && out.trace.executed && out.trace.retrieved);
  EXPECT_EQ(out.answer.kind, AnswerKind::metric);
  EXPECT_EQ(out.answer.plan, "metric company=Walmart metric=revenue years=2024");
  EXPECT_EQ(out.answer.dataset_fingerprint, bt::fixture_dataset().fingerprint());
  EXPECT_EQ(out.answer.index_fingerprint, bt::fixture_snapshot().index->fingerprint());
}

TEST(Pipeline, BoundaryRejectionNeverExecutes) {
  auto out = ask("What was Walmart's revenue in 2031?");
  EXPECT_EQ(out.http_status, 200);
  EXPECT_FALSE(out.trace.executed);
  EXPECT_EQ(out.answer.kind, AnswerKind::rejection);
  ASSERT_TRUE(out.answer.latest_reference);
  EXPECT_TRUE(out.answer.citations.empty());
}

TEST(Pipeline, OutOfDomainIsRejected) {
  auto out = ask("What was the average stock price of Apple in 2025?");
  EXPECT_EQ(out.answer.kind, AnswerKind::rejection);
  EXPECT_EQ(out.answer.rejection->reason, Rejection::Reason::out_of_domain);
  EXPECT_FALSE(out.trace.executed);
}

TEST(Pipeline, PersonaHasNoCitations) {
  auto out = ask("Are there any philosophical principles embedded in your programming?");
  EXPECT_EQ(out.answer.kind, AnswerKind::persona);
  EXPECT_TRUE(out.answer.citations.empty());
  EXPECT_FALSE(out.trace.executed);
}

TEST(Pipeline, FalsePremiseIsCorrected) {
  auto out = ask("Why did Apple top the Global 500 in 2020?");
  EXPECT_EQ(out.answer.kind, AnswerKind::rejection);
  EXPECT_EQ(out.answer.rejection->reason, Rejection::Reason::false_premise);
}

TEST(Pipeline, TrendQuery) {
  auto out = ask("How has coverage of inflation evolved over the last five years?");
  EXPECT_EQ(out.answer.kind, AnswerKind::trend);
  ASSERT_TRUE(out.answer.trend);
  EXPECT_FALSE(out.answer.trend->buckets.empty());
}

TEST(Pipeline, StreamingOrderChunksChartReferences) {
  std::vector<std::string> events;
  std::string streamed;
  StreamSink sink;
  sink.on_chunk = [&](const std::string& c) {
    events.push_back("chunk");
    streamed += c;
  };
  sink.on_chart = [&](const Json&) { events.push_back("chart"); };
  sink.on_references = [&](const std::vector<ReferenceHit>&) { events.push_back("references"); };
  auto out = ask("Plot the revenue for Apple, Google and Nvidia in 2024", &sink);
  ASSERT_GE(events.size(), 3u);
  EXPECT_EQ(events.front(), "chunk");
  auto chart = std::find(events.begin(), events.end(), "chart");
  auto refs = std::find(events.begin(), events.end(), "references");
  ASSERT_NE(chart, events.end());
  ASSERT_NE(refs, events.end());
  EXPECT_LT(chart, refs);
  EXPECT_EQ(refs + 1, events.end());
  for (auto it = events.begin(); it != chart; ++it) EXPECT_EQ(*it, "chunk");
  EXPECT_EQ(streamed, out.answer.text);
}

TEST(Pipeline, StreamChunksReassemble) {
  const std::string t = "First sentence. Second one! Third? Tail";
  auto chunks = stream_chunks(t);
  EXPECT_EQ(chunks.size(), 4u);
  std::string joined;
  for (const auto& c : chunks) joined += c;
  EXPECT_EQ(joined, t);
}

TEST(Pipeline, AnswersAreDeterministic) {
  for (const char* q : {"What was Walmart's revenue in 2024?", "Top 5 companies by profits in 2023",
                        "Plot the revenue for Apple, Google and Nvidia since 2014"}) {
    EXPECT_EQ(canonical_json(answer_to_json(ask(q).answer)), canonical_json(answer_to_json(ask(q).answer))) << q;
  }
}

TEST(Pipeline, CitationsRespectThresholdAndCap) {
  for (const char* q : {"What was Nvidia's revenue in 2024?", "Top 10 companies by revenue in 2024"}) {
    auto a = ask(q).answer;
    EXPECT_LE(a.citations.size(), 3u);
    for (const auto& c : a.citations) EXPECT_GE(c.score, 0.2);
  }
}

TEST(Pipeline, CoverageJson) {
  auto j = coverage_json(bt::fixture_dataset());
  EXPECT_EQ(j["dataset_fingerprint"], bt::fixture_dataset().fingerprint());
  ASSERT_TRUE(j.contains("lists"));
}

TEST(Pipeline, ConfigFileAndEnv) {
  auto cfg = ServiceConfig::load(bt::data_dir() / "service.conf");
  EXPECT_EQ(cfg.port, 8080);
  EXPECT_EQ(cfg.settings.retrieve_n, 50u);
  EXPECT_NO_THROW(cfg.validate());
  ::setenv("FALM_PORT", "9191", 1);
  ::setenv("FALM_REF_DATE", "2024-02-03", 1);
  cfg.apply_env();
  EXPECT_EQ(cfg.port, 9191);
  EXPECT_EQ(cfg.ref_date, make_date(2024, 2, 3));
  ::setenv("FALM_PORT", "not-a-port", 1);
  EXPECT_THROW(cfg.apply_env(), std::invalid_argument);
  ::unsetenv("FALM_PORT");
  ::unsetenv("FALM_REF_DATE");
}
