#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bizlens/util.hpp"

namespace bizlens {

struct ArticleDoc {
  std::string doc_id;
  std::string title;
  std::string body;
  Date published{};
  std::string section;
  std::string url;

  bool operator==(const ArticleDoc&) const = default;
};

class DuplicateDocId : public std::invalid_argument {
 public:
  explicit DuplicateDocId(const std::string& id) : std::invalid_argument("duplicate doc_id: " + id) {}
};

class CorpusFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSON object per line with exactly the fields doc_id, title, body,
/// published ("YYYY-MM-DD"), section and url. Blank lines are skipped.
std::vector<ArticleDoc> parse_corpus_jsonl(std::string_view content, std::string_view source_name);
/// Every *.jsonl file in `dir` (filename order) except planted_pairs.jsonl.
std::vector<ArticleDoc> load_corpus_dir(const std::filesystem::path& dir);

struct Posting {
  std::uint32_t doc = 0;  // index into docs()
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

/// Immutable inverted index over title + body. Tokenization is
/// text::tokenize: lowercase, split on non-alphanumerics, drop tokens
/// shorter than two bytes, no stemming.
class CorpusIndex {
 public:
  /// Throws DuplicateDocId. Documents are stored sorted by doc_id.
  static CorpusIndex build(std::vector<ArticleDoc> docs);

  const std::vector<ArticleDoc>& docs() const { return docs_; }
  const std::map<std::string, std::vector<Posting>, std::less<>>& postings() const { return postings_; }
  const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
  double avg_doc_length() const { return avg_doc_length_; }
  std::size_t doc_count() const { return docs_.size(); }
  const std::set<std::string>& title_terms(std::size_t doc) const { return title_terms_[doc]; }
  /// Token stream (title then body) used for phrase matching.
  const std::vector<std::string>& tokens(std::size_t doc) const { return tokens_[doc]; }
  /// sha256 over the canonical JSON of the documents.
  const std::string& fingerprint() const { return fingerprint_; }

  /// Persisted form: {"format":"bizlens-index","version":1,"fingerprint",
  /// "doc_count","avg_doc_length","docs":[...],"postings":{term:[[doc,tf],...]}}.
  Json to_json() const;
  /// Rebuilds from the stored documents and checks that postings, statistics
  /// and fingerprint agree with the file. Throws CorpusFormatError.
  static CorpusIndex from_json(const Json& j);

  bool operator==(const CorpusIndex& o) const {
    return docs_ == o.docs_ && postings_ == o.postings_ && doc_lengths_ == o.doc_lengths_;
  }

 private:
  std::vector<ArticleDoc> docs_;
  std::map<std::string, std::vector<Posting>, std::less<>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0;
  std::vector<std::set<std::string>> title_terms_;
  std::vector<std::vector<std::string>> tokens_;
  std::string fingerprint_;
};

Json doc_to_json(const ArticleDoc& d);

struct StageScores {
  double bm25 = 0;
  double title_overlap = 0;
  double recency = 0;
  bool operator==(const StageScores&) const = default;
};

struct ReferenceHit {
  std::string doc_id;
  std::string title;
  std::string url;
  Date published{};
  double score = 0;  // in [0, 1]
  StageScores stage_scores;
  int rank = 0;  // 1-based
  bool operator==(const ReferenceHit&) const = default;
};

Json hit_to_json(const ReferenceHit& h);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Each distinct query term
/// counts once.
double bm25_idf(std::size_t doc_count, std::size_t df);

/// Top-n documents by BM25 over the distinct tokens of `answer_text`.
/// score = bm25 / max bm25 of the returned hits. Ties by doc_id ascending.
/// Documents with no matching term are never returned.
std::vector<ReferenceHit> retrieve(const CorpusIndex& index, std::string_view answer_text, std::size_t n = 50,
                                   const Bm25Params& params = {});

class BadWeights : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RerankWeights {
  double bm25 = 0.6;
  double title = 0.3;
  double recency = 0.1;
  double half_life_days = 365;
};

/// score = w_bm25 * bm25/max_bm25 + w_title * Jaccard(answer terms, title
/// terms) + w_recency * exp(-ln2 * age_days / half_life). Documents dated
/// after ref_date count as age 0. Ties by bm25 descending, then doc_id.
/// Throws BadWeights unless the three weights sum to 1 within 1e-9.
std::vector<ReferenceHit> rerank(std::vector<ReferenceHit> hits, std::string_view answer_text, Date ref_date,
                                 const RerankWeights& weights = {});

}  // namespace bizlens
