#include "bizlens/server.hpp"

#include <charconv>
#include <iostream>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "bizlens/text.hpp"
#include "bizlens/trends.hpp"

namespace bizlens {

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kNdjson = "application/x-ndjson";

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  Json j = {{"error", {{"status", status}, {"message", message}}}};
  res.set_content(canonical_json(j), kJson);
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string event_line(const Json& j) { return canonical_json(j) + "\n"; }

}  // namespace

struct Server::Impl {
  ServiceConfig config;
  httplib::Server http;
  mutable std::mutex mu;
  std::shared_ptr<const Snapshot> snapshot;  // guarded by mu
  std::thread loader;

  std::shared_ptr<const Snapshot> current() const {
    std::lock_guard lock(mu);
    return snapshot;
  }

  Date default_ref_date() const { return config.ref_date ? *config.ref_date : today_utc(); }

  void routes();
  void handle_query(const httplib::Request& req, httplib::Response& res);
  void handle_trends(const httplib::Request& req, httplib::Response& res);
};

void Server::Impl::routes() {
  // Responses are small; Nagle plus delayed ACK would add tens of ms each.
  http.set_tcp_nodelay(true);
  http.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    auto snap = current();
    if (!snap) {
      res.status = 503;
      res.set_content(canonical_json({{"status", "loading"}, {"dataset_fingerprint", nullptr}, {"index_fingerprint", nullptr}}),
                      kJson);
      return;
    }
    res.set_content(canonical_json({{"status", "ok"},
                                    {"dataset_fingerprint", snap->dataset->fingerprint()},
                                    {"index_fingerprint", snap->index->fingerprint()}}),
                    kJson);
  });
  http.Get("/v1/coverage", [this](const httplib::Request&, httplib::Response& res) {
    auto snap = current();
    if (!snap) return send_error(res, 503, "data is still loading");
    res.set_content(canonical_json(coverage_json(*snap->dataset)), kJson);
  });
  http.Get("/v1/trends", [this](const httplib::Request& req, httplib::Response& res) { handle_trends(req, res); });
  http.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) { handle_query(req, res); });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send_error(res, 500, what);
  });
}

void Server::Impl::handle_query(const httplib::Request& req, httplib::Response& res) {
  auto snap = current();
  if (!snap) return send_error(res, 503, "data is still loading");
  Json body;
  try {
    body = Json::parse(req.body);
  } catch (const Json::parse_error&) {
    return send_error(res, 400, "request body is not valid JSON");
  }
  if (!body.is_object()) return send_error(res, 400, "request body must be a JSON object");
  if (!body.contains("query") || !body["query"].is_string()) return send_error(res, 400, "'query' must be a string");
  std::string query = body["query"].get<std::string>();
  if (text::trim(query).empty()) return send_error(res, 400, "'query' must not be empty");
  Date ref = default_ref_date();
  if (body.contains("ref_date") && !body["ref_date"].is_null()) {
    auto d = body["ref_date"].is_string() ? parse_iso_date(body["ref_date"].get<std::string>()) : std::nullopt;
    if (!d) return send_error(res, 400, "'ref_date' must be YYYY-MM-DD");
    ref = *d;
  }
  bool stream = false;
  if (body.contains("stream") && !body["stream"].is_null()) {
    if (!body["stream"].is_boolean()) return send_error(res, 400, "'stream' must be a boolean");
    stream = body["stream"].get<bool>();
  }
  const auto settings = config.settings;

  if (!stream) {
    auto out = run_query(*snap, settings, query, ref);
    res.status = out.http_status;
    res.set_content(canonical_json(answer_to_json(out.answer)), kJson);
    return;
  }

  // The status line goes out before the body, so the input gate runs here.
  res.status = snap->guardrails->gate_input(query).decision == GuardrailVerdict::Decision::reject_input ? 422 : 200;
  res.set_chunked_content_provider(kNdjson, [snap, settings, query, ref](std::size_t, httplib::DataSink& sink) {
    StreamSink events;
    events.on_chunk = [&](const std::string& c) {
      auto line = event_line({{"type", "chunk"}, {"text", c}});
      sink.write(line.data(), line.size());
    };
    events.on_chart = [&](const Json& spec) {
      auto line = event_line({{"type", "chart"}, {"spec", spec}});
      sink.write(line.data(), line.size());
    };
    events.on_references = [&](const std::vector<ReferenceHit>& hits) {
      Json arr = Json::array();
      for (const auto& h : hits) arr.push_back(hit_to_json(h));
      auto line = event_line({{"type", "references"}, {"hits", arr}});
      sink.write(line.data(), line.size());
    };
    run_query(*snap, settings, query, ref, &events);
    auto done = event_line({{"type", "done"}});
    sink.write(done.data(), done.size());
    sink.done();
    return true;
  });
}

void Server::Impl::handle_trends(const httplib::Request& req, httplib::Response& res) {
  auto snap = current();
  if (!snap) return send_error(res, 503, "data is still loading");
  if (!req.has_param("topic")) return send_error(res, 400, "missing 'topic'");
  std::vector<std::string> terms;
  for (const auto& t : text::split(req.get_param_value("topic"), ',')) {
    auto trimmed = std::string(text::trim(t));
    if (!trimmed.empty()) terms.push_back(trimmed);
  }
  if (terms.empty()) return send_error(res, 400, "'topic' is empty");
  TrendScale scale = TrendScale::year;
  if (req.has_param("scale")) {
    auto s = trend_scale_from_name(req.get_param_value("scale"));
    if (!s) return send_error(res, 400, "'scale' must be month, quarter, year or multi_year");
    scale = *s;
  }
  Date to = default_ref_date();
  if (req.has_param("to")) {
    auto d = parse_iso_date(req.get_param_value("to"));
    if (!d) return send_error(res, 400, "'to' must be YYYY-MM-DD");
    to = *d;
  }
  Date from = make_date(year_of(to) - 4, 1, 1);
  if (req.has_param("from")) {
    auto d = parse_iso_date(req.get_param_value("from"));
    if (!d) return send_error(res, 400, "'from' must be YYYY-MM-DD");
    from = *d;
  }
  if (from > to) return send_error(res, 400, "'from' is after 'to'");
  int min_match = 1, window = 5;
  if (req.has_param("min_match")) {
    auto v = parse_int(req.get_param_value("min_match"));
    if (!v || *v < 1) return send_error(res, 400, "'min_match' must be a positive integer");
    min_match = *v;
  }
  if (req.has_param("window")) {
    auto v = parse_int(req.get_param_value("window"));
    if (!v || *v < 1) return send_error(res, 400, "'window' must be a positive integer");
    window = *v;
  }
  try {
    auto series = topic_series(*snap->index, terms, scale, from, to, min_match, window);
    Json j;
    j["series"] = trend_to_json(series);
    j["summary"] = series.buckets.size() >= 2 ? summary_to_json(summarize_trend(series)) : Json(nullptr);
    j["index_fingerprint"] = snap->index->fingerprint();
    res.set_content(canonical_json(j), kJson);
  } catch (const std::invalid_argument& e) {
    send_error(res, 400, e.what());
  }
}

Server::Server(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->routes();
}

Server::~Server() {
  stop();
  if (impl_->loader.joinable()) impl_->loader.join();
}

void Server::load() { install(load_snapshot(impl_->config)); }

void Server::load_async() {
  impl_->loader = std::thread([this] {
    try {
      load();
    } catch (const std::exception& e) {
      std::cerr << "bizlens: load failed: " << e.what() << "\n";
    }
  });
}

void Server::install(Snapshot snapshot) {
  auto p = std::make_shared<const Snapshot>(std::move(snapshot));
  std::lock_guard lock(impl_->mu);
  impl_->snapshot = std::move(p);
}

bool Server::ready() const { return impl_->current() != nullptr; }

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Server::bind_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

void Server::wait_until_ready_to_accept() const { impl_->http.wait_until_ready(); }

}  // namespace bizlens
