#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "bizlens/executor.hpp"
#include "bizlens/guardrails.hpp"
#include "bizlens/metrics_store.hpp"
#include "bizlens/query.hpp"
#include "bizlens/reference.hpp"
#include "bizlens/responder.hpp"

namespace bizlens {

/// Everything a request reads. Immutable once built; the service swaps whole
/// snapshots.
struct Snapshot {
  DatasetPtr dataset;
  std::shared_ptr<const CorpusIndex> index;
  std::shared_ptr<const Grammar> grammar;
  std::shared_ptr<const Guardrails> guardrails;
  std::shared_ptr<const Responder> responder;
};

struct PipelineSettings {
  RerankWeights weights;
  double citation_threshold = 0.2;
  std::size_t max_citations = 3;
  std::size_t retrieve_n = 50;
  bool boost_question = false;  // append the question to the retrieval query
  SandboxLimits limits;
};

/// Service configuration. Relative paths are resolved against the config
/// file's directory.
struct ServiceConfig {
  std::filesystem::path data_dir;
  std::filesystem::path corpus_dir;
  std::filesystem::path grammar;
  std::filesystem::path lexicons;
  std::filesystem::path responses;
  std::filesystem::path index_file;  // optional prebuilt index
  int port = 8080;
  std::optional<Date> ref_date;
  PipelineSettings settings;

  /// Defaults rooted at `data_root` (the repository's data/ directory).
  static ServiceConfig defaults(const std::filesystem::path& data_root);
  /// [service], [reference] and [sandbox] sections; see data/service.conf.
  static ServiceConfig load(const std::filesystem::path& path);
  /// FALM_DATA_DIR, FALM_CORPUS_DIR, FALM_PORT and FALM_REF_DATE override
  /// the corresponding fields. Throws std::invalid_argument on bad values.
  void apply_env();
  /// Throws std::invalid_argument when a path is missing or the port is invalid.
  void validate() const;
};

/// Loads dataset, corpus (or prebuilt index), grammar, lexicons and templates.
Snapshot load_snapshot(const ServiceConfig& config);

/// Callbacks invoked in NDJSON event order. The text callback runs before
/// reference retrieval starts.
struct StreamSink {
  std::function<void(const std::string&)> on_chunk;
  std::function<void(const Json&)> on_chart;
  std::function<void(const std::vector<ReferenceHit>&)> on_references;
};

/// Which stages ran; gate-rejected input never reaches parsing.
struct PipelineTrace {
  bool input_rejected = false;
  bool parsed = false;
  bool executed = false;
  bool retrieved = false;
};

struct QueryOutcome {
  int http_status = 200;  // 422 for input-gate rejections
  Answer answer;
  PipelineTrace trace;
};

QueryOutcome run_query(const Snapshot& snap, const PipelineSettings& settings, std::string_view query, Date ref_date,
                       const StreamSink* sink = nullptr);

/// Text split into stream chunks at sentence ends.
std::vector<std::string> stream_chunks(const std::string& text);

/// Catalog summary served at /v1/coverage.
Json coverage_json(const Dataset& dataset);

}  // namespace bizlens
