// Hot paths of a request: parse, execute, retrieve, rerank, guard, and the
// full pipeline. Run with --benchmark_filter to pick one.
#include <benchmark/benchmark.h>

#include "bizlens/pipeline.hpp"
#include "bizlens/trends.hpp"

using namespace bizlens;

namespace {

const Date kRef = make_date(2025, 6, 1);

const Snapshot& snap() {
  static const Snapshot s = [] {
    auto cfg = ServiceConfig::defaults(BIZLENS_BENCH_DATA_DIR);
    cfg.ref_date = kRef;
    return load_snapshot(cfg);
  }();
  return s;
}

void BM_ParseMetricQuery(benchmark::State& state) {
  const auto& s = snap();
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_query("What was Walmart's revenue in 2024?", s.dataset->catalog(), kRef, *s.grammar));
  }
}
BENCHMARK(BM_ParseMetricQuery);

void BM_ExecuteLineChart(benchmark::State& state) {
  const auto& s = snap();
  auto plan = parse_canonical("chart line list=g500 metrics=revenue top=10 years=2015-2024", s.dataset->catalog());
  for (auto _ : state) benchmark::DoNotOptimize(execute(plan, *s.dataset));
}
BENCHMARK(BM_ExecuteLineChart);

void BM_OracleLineChart(benchmark::State& state) {
  const auto& s = snap();
  auto plan = parse_canonical("chart line list=g500 metrics=revenue top=10 years=2015-2024", s.dataset->catalog());
  for (auto _ : state) benchmark::DoNotOptimize(oracle_execute(plan, *s.dataset));
}
BENCHMARK(BM_OracleLineChart);

void BM_RetrieveAndRerank(benchmark::State& state) {
  const auto& s = snap();
  const std::string answer = "Nvidia said its accelerator backlog reached a record as cloud buyers reserved capacity.";
  for (auto _ : state) {
    auto hits = retrieve(*s.index, answer, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(rerank(std::move(hits), answer, kRef));
  }
}
BENCHMARK(BM_RetrieveAndRerank)->Arg(10)->Arg(50);

void BM_GateInput(benchmark::State& state) {
  const auto& s = snap();
  const std::string text = "Compare the revenue and the number of employees for the top 10 companies on the Fortune 1000 list";
  for (auto _ : state) benchmark::DoNotOptimize(s.guardrails->gate_input(text));
}
BENCHMARK(BM_GateInput);

void BM_TopicSeriesMonthly(benchmark::State& state) {
  const auto& s = snap();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        topic_series(*s.index, {"inflation"}, TrendScale::month, make_date(2015, 1, 1), make_date(2024, 12, 31)));
  }
}
BENCHMARK(BM_TopicSeriesMonthly);

void BM_PipelineMetricQuery(benchmark::State& state) {
  const auto& s = snap();
  PipelineSettings settings;
  for (auto _ : state) benchmark::DoNotOptimize(run_query(s, settings, "What was Walmart's revenue in 2024?", kRef));
}
BENCHMARK(BM_PipelineMetricQuery);

}  // namespace

BENCHMARK_MAIN();
