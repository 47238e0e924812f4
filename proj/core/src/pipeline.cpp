#include "bizlens/pipeline.hpp"

#include <charconv>
#include <cstdlib>
#include <stdexcept>

#include "bizlens/config_file.hpp"
#include "bizlens/text.hpp"
#include "bizlens/trends.hpp"

namespace bizlens {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

double to_double(const std::string& s, const std::string& what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument(what + ": not a number: " + s);
  return v;
}

long long to_int(const std::string& s, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument(what + ": not an integer: " + s);
  return v;
}

bool to_bool(const std::string& s, const std::string& what) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument(what + ": expected true or false");
}

void set_meta(Answer& a, const Snapshot& snap) {
  a.dataset_fingerprint = snap.dataset->fingerprint();
  a.index_fingerprint = snap.index->fingerprint();
}

}  // namespace

ServiceConfig ServiceConfig::defaults(const std::filesystem::path& root) {
  ServiceConfig c;
  c.data_dir = root / "fixtures" / "lists";
  c.corpus_dir = root / "fixtures" / "corpus";
  c.grammar = root / "grammar.conf";
  c.lexicons = root / "lexicons.conf";
  c.responses = root / "responses.conf";
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  auto cfg = ConfigFile::load(path);
  auto base = path.parent_path();
  ServiceConfig c;
  const auto& svc = cfg.require("service");
  c.data_dir = resolve_path(base, svc.require("data_dir"));
  c.corpus_dir = resolve_path(base, svc.require("corpus_dir"));
  c.grammar = resolve_path(base, svc.require("grammar"));
  c.lexicons = resolve_path(base, svc.require("lexicons"));
  c.responses = resolve_path(base, svc.require("responses"));
  if (auto v = svc.get("index_file")) c.index_file = resolve_path(base, *v);
  if (auto v = svc.get("port")) c.port = static_cast<int>(to_int(*v, "port"));
  if (auto v = svc.get("ref_date")) {
    c.ref_date = parse_iso_date(*v);
    if (!c.ref_date) throw std::invalid_argument("ref_date: expected YYYY-MM-DD");
  }
  if (const auto* r = cfg.find("reference")) {
    auto& s = c.settings;
    if (auto v = r->get("w_bm25")) s.weights.bm25 = to_double(*v, "w_bm25");
    if (auto v = r->get("w_title")) s.weights.title = to_double(*v, "w_title");
    if (auto v = r->get("w_recency")) s.weights.recency = to_double(*v, "w_recency");
    if (auto v = r->get("half_life_days")) s.weights.half_life_days = to_double(*v, "half_life_days");
    if (auto v = r->get("threshold")) s.citation_threshold = to_double(*v, "threshold");
    if (auto v = r->get("max_citations")) s.max_citations = static_cast<std::size_t>(to_int(*v, "max_citations"));
    if (auto v = r->get("retrieve_n")) s.retrieve_n = static_cast<std::size_t>(to_int(*v, "retrieve_n"));
    if (auto v = r->get("boost_question")) s.boost_question = to_bool(*v, "boost_question");
  }
  if (const auto* sb = cfg.find("sandbox")) {
    auto& l = c.settings.limits;
    if (auto v = sb->get("max_rows_scanned")) l.max_rows_scanned = static_cast<std::size_t>(to_int(*v, "max_rows_scanned"));
    if (auto v = sb->get("max_output_rows")) l.max_output_rows = static_cast<std::size_t>(to_int(*v, "max_output_rows"));
    if (auto v = sb->get("wall_clock_ms")) l.wall_clock_budget = std::chrono::milliseconds(to_int(*v, "wall_clock_ms"));
  }
  return c;
}

void ServiceConfig::apply_env() {
  if (const char* v = std::getenv("FALM_DATA_DIR"); v && *v) data_dir = v;
  if (const char* v = std::getenv("FALM_CORPUS_DIR"); v && *v) corpus_dir = v;
  if (const char* v = std::getenv("FALM_PORT"); v && *v) port = static_cast<int>(to_int(v, "FALM_PORT"));
  if (const char* v = std::getenv("FALM_REF_DATE"); v && *v) {
    ref_date = parse_iso_date(v);
    if (!ref_date) throw std::invalid_argument("FALM_REF_DATE: expected YYYY-MM-DD");
  }
}

void ServiceConfig::validate() const {
  auto need = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) throw std::invalid_argument(std::string(what) + " does not exist: " + p.string());
  };
  need(data_dir, "data_dir");
  if (index_file.empty()) {
    need(corpus_dir, "corpus_dir");
  } else {
    need(index_file, "index_file");
  }
  need(grammar, "grammar");
  need(lexicons, "lexicons");
  need(responses, "responses");
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range: " + std::to_string(port));
  const auto& l = settings.limits;
  if (l.max_rows_scanned == 0 || l.max_output_rows == 0 || l.wall_clock_budget.count() <= 0) {
    throw std::invalid_argument("sandbox limits must be positive");
  }
  const auto& w = settings.weights;
  if (std::abs(w.bm25 + w.title + w.recency - 1.0) > 1e-9) throw BadWeights("rerank weights must sum to 1");
  if (settings.retrieve_n == 0) throw std::invalid_argument("retrieve_n must be at least 1");
}

Snapshot load_snapshot(const ServiceConfig& c) {
  Snapshot s;
  s.dataset = load_dataset_dir(c.data_dir);
  if (c.index_file.empty()) {
    s.index = std::make_shared<const CorpusIndex>(CorpusIndex::build(load_corpus_dir(c.corpus_dir)));
  } else {
    s.index = std::make_shared<const CorpusIndex>(CorpusIndex::from_json(Json::parse(read_file(c.index_file))));
  }
  s.grammar = std::make_shared<const Grammar>(Grammar::load(c.grammar));
  s.guardrails = std::make_shared<const Guardrails>(Lexicons::load(c.lexicons));
  s.responder = std::make_shared<const Responder>(ResponseTemplates::load(c.responses));
  return s;
}

std::vector<std::string> stream_chunks(const std::string& t) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    bool end = (t[i] == '.' || t[i] == '?' || t[i] == '!') && i + 1 < t.size() && t[i + 1] == ' ';
    if (end) {
      out.push_back(t.substr(start, i + 2 - start));
      start = i + 2;
    }
  }
  if (start < t.size()) out.push_back(t.substr(start));
  return out;
}

QueryOutcome run_query(const Snapshot& snap, const PipelineSettings& settings, std::string_view query, Date ref_date,
                       const StreamSink* sink) {
  QueryOutcome out;
  const auto& responder = *snap.responder;
  const auto& ds = *snap.dataset;

  auto finish = [&](bool with_references) {
    set_meta(out.answer, snap);
    auto gate = snap.guardrails->gate_output(out.answer.text);
    if (gate.decision == GuardrailVerdict::Decision::block_output) {
      auto plan = out.answer.plan;
      out.answer = responder.render_rejection(gate);
      out.answer.plan = plan;
      set_meta(out.answer, snap);
      with_references = false;
    } else if (gate.decision == GuardrailVerdict::Decision::redact_output) {
      out.answer.text = *gate.redacted_text;
    }
    if (sink) {
      if (sink->on_chunk) {
        for (const auto& c : stream_chunks(out.answer.text)) sink->on_chunk(c);
      }
      if (sink->on_chart && out.answer.chart_spec) sink->on_chart(*out.answer.chart_spec);
    }
    if (with_references && out.answer.kind != AnswerKind::rejection && out.answer.kind != AnswerKind::persona) {
      std::string q = out.answer.text;
      if (settings.boost_question) q += " " + std::string(query);
      auto hits = rerank(retrieve(*snap.index, q, settings.retrieve_n), out.answer.text, ref_date, settings.weights);
      attach_references(out.answer, hits, settings.citation_threshold, settings.max_citations);
      out.trace.retrieved = true;
      if (sink && sink->on_references && !out.answer.citations.empty()) sink->on_references(out.answer.citations);
    }
    return out;
  };

  auto verdict = snap.guardrails->gate_input(query);
  if (verdict.decision == GuardrailVerdict::Decision::reject_input) {
    out.http_status = 422;
    out.trace.input_rejected = true;
    out.answer = responder.render_rejection(verdict);
    return finish(false);
  }

  auto parsed = parse_query(query, ds.catalog(), ref_date, *snap.grammar);
  out.trace.parsed = true;
  if (auto* diag = std::get_if<ParseDiagnostics>(&parsed)) {
    out.answer = responder.render_rejection(*diag);
    return finish(false);
  }
  const auto& plan = std::get<QueryPlan>(parsed);

  switch (plan.intent) {
    case Intent::persona:
      out.answer = responder.render_persona(snap.grammar->persona_text(query));
      return finish(false);
    case Intent::trend: {
      try {
        const auto& tr = *plan.trend;
        auto series = topic_series(*snap.index, tr.topic_terms, tr.scale, tr.from, tr.to);
        out.answer = responder.render_trend(plan, series);
      } catch (const std::invalid_argument& e) {
        out.answer = responder.render_rejection(ParseDiagnostics{ParseDiagnostics::Kind::out_of_grammar, e.what(), {}});
        return finish(false);
      }
      return finish(true);
    }
    default: break;
  }

  if (auto premise = check_premise(query, plan, ds, *snap.grammar)) {
    out.answer = responder.render_rejection(*premise, true);
    out.answer.plan = canonical_form(plan);
    return finish(false);
  }
  if (plan.boundary.kind == BoundaryOutcome::Kind::reject) {
    out.answer = responder.render_rejection(plan, ds, settings.limits);
    return finish(false);
  }
  try {
    out.trace.executed = true;
    auto result = execute(plan, ds, settings.limits);
    out.answer = responder.render_answer(plan, result, ds);
  } catch (const ExecError& e) {
    out.answer = responder.render_exec_error(plan, e);
    return finish(false);
  }
  return finish(true);
}

Json coverage_json(const Dataset& ds) {
  const auto& cat = ds.catalog();
  Json j;
  j["version"] = 1;
  j["lists"] = Json::array();
  for (const auto& [id, info] : cat.lists) {
    j["lists"].push_back({{"list_id", id},
                          {"display_name", info.display_name},
                          {"years", std::vector<int>(info.years.begin(), info.years.end())},
                          {"cutoff_year", info.years.empty() ? Json(nullptr) : Json(*info.years.rbegin())}});
  }
  j["company_count"] = cat.companies.size();
  j["metrics"] = Json::array();
  for (auto m : kAllMetrics) {
    j["metrics"].push_back({{"id", std::string(metric_id(m))},
                            {"column", std::string(metric_column(m))},
                            {"label", std::string(metric_label(m))},
                            {"unit", std::string(metric_unit(m))}});
  }
  j["sectors"] = std::vector<std::string>(cat.sectors.begin(), cat.sectors.end());
  j["countries"] = std::vector<std::string>(cat.countries.begin(), cat.countries.end());
  j["dataset_fingerprint"] = ds.fingerprint();
  return j;
}

}  // namespace bizlens
