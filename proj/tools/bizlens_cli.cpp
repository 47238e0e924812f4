// bizlens command-line interface.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bizlens/eval.hpp"
#include "bizlens/pipeline.hpp"
#include "bizlens/server.hpp"
#include "bizlens/text.hpp"
#include "bizlens/trends.hpp"

#ifndef BIZLENS_DEFAULT_DATA_DIR
#define BIZLENS_DEFAULT_DATA_DIR "data"
#endif

namespace {

using namespace bizlens;

struct Common {
  std::string data_root = BIZLENS_DEFAULT_DATA_DIR;
  std::string config;
  std::string ref_date;
};

ServiceConfig make_config(const Common& c) {
  ServiceConfig cfg = c.config.empty() ? ServiceConfig::defaults(c.data_root) : ServiceConfig::load(c.config);
  cfg.apply_env();
  if (!c.ref_date.empty()) {
    cfg.ref_date = parse_iso_date(c.ref_date);
    if (!cfg.ref_date) throw std::invalid_argument("--ref-date must be YYYY-MM-DD");
  }
  cfg.validate();
  return cfg;
}

Date ref_of(const ServiceConfig& cfg) { return cfg.ref_date ? *cfg.ref_date : today_utc(); }

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content << "\n";
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content << "\n";
}

Server* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bizlens: question answering, charts and trends over ranking-list data"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--data-root", common.data_root, "Directory holding grammar.conf, lexicons.conf and fixtures/");
  app.add_option("--config", common.config, "Service config file (overrides --data-root)");
  app.add_option("--ref-date", common.ref_date, "Reference date YYYY-MM-DD for relative time expressions");

  // query
  auto* q = app.add_subcommand("query", "Answer one question");
  std::string query_text, emit = "answer";
  q->add_option("text", query_text, "Question")->required();
  q->add_option("--emit", emit, "answer | chart-spec | plan | table")
      ->check(CLI::IsMember({"answer", "chart-spec", "plan", "table"}));

  // trends
  auto* tr = app.add_subcommand("trends", "Topic coverage series over the corpus");
  std::string topic, scale = "year", from, to;
  int min_match = 1, window = 5;
  tr->add_option("--topic", topic, "Comma-separated topic terms")->required();
  tr->add_option("--scale", scale, "month | quarter | year | multi_year")
      ->check(CLI::IsMember({"month", "quarter", "year", "multi_year"}));
  tr->add_option("--from", from, "Start date YYYY-MM-DD");
  tr->add_option("--to", to, "End date YYYY-MM-DD");
  tr->add_option("--min-match", min_match, "Documents must contain this many distinct terms");
  tr->add_option("--window", window, "Window length in years for multi_year");

  // scan
  auto* sc = app.add_subcommand("scan", "Run the guardrail detectors");
  std::string scan_text, scan_corpus;
  auto* scan_text_opt = sc->add_option("--text", scan_text, "Text to scan");
  auto* scan_corpus_opt = sc->add_option("--corpus", scan_corpus, "Corpus directory to flag for review");
  scan_text_opt->excludes(scan_corpus_opt);

  // index
  auto* ix = app.add_subcommand("index", "Build and persist the corpus index");
  std::string index_corpus, index_out;
  ix->add_option("--corpus", index_corpus, "Corpus directory")->required();
  ix->add_option("--out", index_out, "Output file")->required();

  // coverage
  auto* cov = app.add_subcommand("coverage", "Print the catalog summary");

  // serve
  auto* sv = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  sv->add_option("--host", host, "Bind address");

  // eval
  auto* ev = app.add_subcommand("eval", "Run an evaluation suite");
  std::string suite, eval_data, templates, out;
  std::uint64_t seed = 42;
  std::size_t n_cases = 500;
  ev->add_option("suite", suite, "viz | qa | safety")->required()->check(CLI::IsMember({"viz", "qa", "safety"}));
  ev->add_option("--data", eval_data, "Data root (defaults to --data-root)");
  ev->add_option("--templates", templates, "Template file (viz, qa)");
  ev->add_option("--seed", seed, "Generator seed");
  ev->add_option("--n", n_cases, "Number of cases (viz, qa)");
  ev->add_option("--out", out, "Report path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*q) {
      auto cfg = make_config(common);
      auto snap = load_snapshot(cfg);
      auto outcome = run_query(snap, cfg.settings, query_text, ref_of(cfg));
      const auto& a = outcome.answer;
      if (emit == "answer") {
        std::cout << canonical_json(answer_to_json(a)) << "\n";
      } else if (emit == "plan") {
        std::cout << a.plan << "\n";
      } else if (emit == "table") {
        if (!a.table) throw std::runtime_error("the answer has no table");
        std::cout << canonical_json(table_to_json(*a.table)) << "\n";
      } else {
        if (!a.chart_spec) throw std::runtime_error("the answer has no chart");
        std::cout << canonical_json(*a.chart_spec) << "\n";
      }
      return outcome.http_status == 200 ? 0 : 3;
    }
    if (*tr) {
      auto cfg = make_config(common);
      auto snap = load_snapshot(cfg);
      std::vector<std::string> terms;
      for (const auto& t : text::split(topic, ',')) {
        if (!text::trim(t).empty()) terms.emplace_back(text::trim(t));
      }
      Date end = to.empty() ? ref_of(cfg) : parse_iso_date(to).value();
      Date start = from.empty() ? make_date(year_of(end) - 4, 1, 1) : parse_iso_date(from).value();
      auto series = topic_series(*snap.index, terms, *trend_scale_from_name(scale), start, end, min_match, window);
      Json j;
      j["series"] = trend_to_json(series);
      j["summary"] = series.buckets.size() >= 2 ? summary_to_json(summarize_trend(series)) : Json(nullptr);
      std::cout << canonical_json(j) << "\n";
      return 0;
    }
    if (*sc) {
      auto cfg = make_config(common);
      Guardrails g(Lexicons::load(cfg.lexicons));
      auto verdict_json = [](const GuardrailVerdict& v) {
        Json j;
        j["decision"] = std::string(decision_name(v.decision));
        j["categories"] = Json::array();
        for (auto c : v.categories) j["categories"].push_back(std::string(harm_category_name(c)));
        j["pii"] = Json::array();
        for (const auto& s : v.spans) {
          j["pii"].push_back({{"kind", std::string(pii_kind_name(s.kind))},
                              {"start", s.start},
                              {"end", s.end},
                              {"hash", s.matched_text_hash}});
        }
        return j;
      };
      if (!scan_corpus.empty()) {
        Json flagged = Json::array();
        auto docs = load_corpus_dir(scan_corpus);
        for (const auto& d : docs) {
          auto v = g.gate_input(d.title + "\n" + d.body);
          if (v.decision == GuardrailVerdict::Decision::pass) continue;
          auto j = verdict_json(v);
          j["doc_id"] = d.doc_id;
          flagged.push_back(j);
        }
        std::cout << canonical_json({{"documents", docs.size()}, {"flagged", flagged}}) << "\n";
        return 0;
      }
      std::cout << canonical_json(verdict_json(g.gate_input(scan_text))) << "\n";
      return 0;
    }
    if (*ix) {
      auto index = CorpusIndex::build(load_corpus_dir(index_corpus));
      write_output(index_out, canonical_json(index.to_json()));
      std::cerr << "indexed " << index.doc_count() << " documents, fingerprint " << index.fingerprint() << "\n";
      return 0;
    }
    if (*cov) {
      auto cfg = make_config(common);
      std::cout << canonical_json(coverage_json(*load_dataset_dir(cfg.data_dir))) << "\n";
      return 0;
    }
    if (*sv) {
      auto cfg = make_config(common);
      Server server(cfg);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.load_async();
      std::cerr << "bizlens: listening on " << host << ":" << cfg.port << "\n";
      if (!server.listen(host, cfg.port)) {
        std::cerr << "bizlens: cannot bind " << host << ":" << cfg.port << "\n";
        return 1;
      }
      return 0;
    }
    if (*ev) {
      if (!eval_data.empty()) common.data_root = eval_data;
      auto cfg = make_config(common);
      EvalOptions opt;
      opt.seed = seed;
      opt.n = n_cases;
      opt.ref_date = ref_of(cfg);
      opt.templates = templates.empty() ? std::filesystem::path(common.data_root) / "eval" / "templates.conf"
                                        : std::filesystem::path(templates);
      Json report;
      bool ok = false;
      if (suite == "safety") {
        auto safety_dir = std::filesystem::path(common.data_root) / "safety";
        Guardrails g(Lexicons::load(cfg.lexicons));
        auto r = run_safety_eval(safety_dir, g);
        report = r.json;
        ok = r.thresholds_met;
      } else {
        auto snap = load_snapshot(cfg);
        auto tpl = EvalTemplates::load(opt.templates);
        if (suite == "viz") {
          auto cases = gen_templated_prompts(tpl, *snap.dataset, "viz", opt.seed, opt.n, opt.ref_date);
          auto r = run_viz_eval(cases, snap, cfg.settings, opt.ref_date, tpl);
          report = r.json;
          ok = r.thresholds_met;
        } else {
          auto cases = gen_templated_prompts(tpl, *snap.dataset, "qa", opt.seed, opt.n, opt.ref_date);
          auto r = run_qa_eval(cases, snap, cfg.settings, opt.ref_date, tpl);
          report = r.json;
          ok = r.thresholds_met;
        }
      }
      write_output(out, report.dump(2));
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "bizlens: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
