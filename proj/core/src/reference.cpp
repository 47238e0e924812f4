#include "bizlens/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bizlens/config_file.hpp"
#include "bizlens/text.hpp"

namespace bizlens {

namespace {

const std::set<std::string>& required_fields() {
  static const std::set<std::string> f = {"doc_id", "title", "body", "published", "section", "url"};
  return f;
}

ArticleDoc doc_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) throw CorpusFormatError(where + ": expected a JSON object");
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  if (keys != required_fields()) throw CorpusFormatError(where + ": fields must be exactly doc_id, title, body, published, section, url");
  for (const auto& k : keys) {
    if (!j.at(k).is_string()) throw CorpusFormatError(where + ": field '" + k + "' must be a string");
  }
  ArticleDoc d;
  d.doc_id = j["doc_id"].get<std::string>();
  d.title = j["title"].get<std::string>();
  d.body = j["body"].get<std::string>();
  d.section = j["section"].get<std::string>();
  d.url = j["url"].get<std::string>();
  auto date = parse_iso_date(j["published"].get<std::string>());
  if (!date) throw CorpusFormatError(where + ": invalid published date");
  if (d.doc_id.empty()) throw CorpusFormatError(where + ": empty doc_id");
  d.published = *date;
  return d;
}

}  // namespace

Json doc_to_json(const ArticleDoc& d) {
  Json j;
  j["doc_id"] = d.doc_id;
  j["title"] = d.title;
  j["body"] = d.body;
  j["published"] = format_iso_date(d.published);
  j["section"] = d.section;
  j["url"] = d.url;
  return j;
}

std::vector<ArticleDoc> parse_corpus_jsonl(std::string_view content, std::string_view source_name) {
  std::vector<ArticleDoc> docs;
  std::size_t line_no = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw CorpusFormatError(where + ": " + e.what());
    }
    docs.push_back(doc_from_json(j, where));
  }
  return docs;
}

std::vector<ArticleDoc> load_corpus_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl" && e.path().filename() != "planted_pairs.jsonl") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ArticleDoc> docs;
  for (const auto& f : files) {
    auto part = parse_corpus_jsonl(read_file(f), f.filename().string());
    docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return docs;
}

CorpusIndex CorpusIndex::build(std::vector<ArticleDoc> docs) {
  std::sort(docs.begin(), docs.end(), [](const ArticleDoc& a, const ArticleDoc& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].doc_id == docs[i - 1].doc_id) throw DuplicateDocId(docs[i].doc_id);
  }
  CorpusIndex idx;
  idx.docs_ = std::move(docs);
  Json all = Json::array();
  std::uint64_t total = 0;
  for (std::size_t d = 0; d < idx.docs_.size(); ++d) {
    const auto& doc = idx.docs_[d];
    auto toks = text::tokenize(doc.title);
    auto title = toks;
    auto body = text::tokenize(doc.body);
    toks.insert(toks.end(), body.begin(), body.end());
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : toks) ++tf[t];
    for (const auto& [term, n] : tf) idx.postings_[term].push_back({static_cast<std::uint32_t>(d), n});
    idx.doc_lengths_.push_back(static_cast<std::uint32_t>(toks.size()));
    total += toks.size();
    idx.title_terms_.emplace_back(title.begin(), title.end());
    idx.tokens_.push_back(std::move(toks));
    all.push_back(doc_to_json(doc));
  }
  idx.avg_doc_length_ = idx.docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(idx.docs_.size());
  idx.fingerprint_ = sha256_hex(canonical_json(all));
  return idx;
}

Json CorpusIndex::to_json() const {
  Json j;
  j["format"] = "bizlens-index";
  j["version"] = 1;
  j["fingerprint"] = fingerprint_;
  j["doc_count"] = docs_.size();
  j["avg_doc_length"] = avg_doc_length_;
  j["docs"] = Json::array();
  for (const auto& d : docs_) j["docs"].push_back(doc_to_json(d));
  Json post = Json::object();
  for (const auto& [term, list] : postings_) {
    Json arr = Json::array();
    for (const auto& p : list) arr.push_back(Json::array({p.doc, p.tf}));
    post[term] = std::move(arr);
  }
  j["postings"] = std::move(post);
  return j;
}

CorpusIndex CorpusIndex::from_json(const Json& j) {
  try {
    if (j.at("format") != "bizlens-index" || j.at("version") != 1) throw CorpusFormatError("not a bizlens index file");
    std::vector<ArticleDoc> docs;
    std::size_t i = 0;
    for (const auto& d : j.at("docs")) docs.push_back(doc_from_json(d, "docs[" + std::to_string(i++) + "]"));
    auto idx = build(std::move(docs));
    if (idx.fingerprint_ != j.at("fingerprint").get<std::string>()) {
      throw CorpusFormatError("index fingerprint does not match its documents");
    }
    if (j.at("doc_count").get<std::size_t>() != idx.doc_count()) throw CorpusFormatError("doc_count mismatch");
    if (j.at("avg_doc_length").get<double>() != idx.avg_doc_length_) throw CorpusFormatError("avg_doc_length mismatch");
    std::map<std::string, std::vector<Posting>, std::less<>> stored;
    for (auto it = j.at("postings").begin(); it != j.at("postings").end(); ++it) {
      auto& list = stored[it.key()];
      for (const auto& p : it.value()) list.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
    }
    if (stored != idx.postings_) throw CorpusFormatError("postings are inconsistent with the stored documents");
    return idx;
  } catch (const Json::exception& e) {
    throw CorpusFormatError(std::string("malformed index file: ") + e.what());
  }
}

Json hit_to_json(const ReferenceHit& h) {
  Json j;
  j["doc_id"] = h.doc_id;
  j["title"] = h.title;
  j["url"] = h.url;
  j["published"] = format_iso_date(h.published);
  j["score"] = h.score;
  j["stage_scores"] = {{"bm25", h.stage_scores.bm25},
                       {"title_overlap", h.stage_scores.title_overlap},
                       {"recency", h.stage_scores.recency}};
  j["rank"] = h.rank;
  return j;
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
  double n = static_cast<double>(doc_count), d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::vector<ReferenceHit> retrieve(const CorpusIndex& index, std::string_view answer_text, std::size_t n,
                                   const Bm25Params& params) {
  if (n == 0) throw std::invalid_argument("retrieve needs n >= 1");
  auto toks = text::tokenize(answer_text);
  std::set<std::string> terms(toks.begin(), toks.end());
  std::vector<double> score(index.doc_count(), 0.0);
  std::vector<bool> touched(index.doc_count(), false);
  const double avg = index.avg_doc_length();
  for (const auto& t : terms) {
    auto it = index.postings().find(t);
    if (it == index.postings().end()) continue;
    double idf = bm25_idf(index.doc_count(), it->second.size());
    for (const auto& p : it->second) {
      double tf = p.tf;
      double dl = index.doc_lengths()[p.doc];
      double norm = params.k1 * (1.0 - params.b + params.b * dl / avg);
      score[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + norm);
      touched[p.doc] = true;
    }
  }
  std::vector<std::size_t> ids;
  for (std::size_t d = 0; d < score.size(); ++d) {
    if (touched[d]) ids.push_back(d);
  }
  // docs are stored by doc_id, so index order breaks ties
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (ids.size() > n) ids.resize(n);
  double top = ids.empty() ? 0.0 : score[ids.front()];
  std::vector<ReferenceHit> hits;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& doc = index.docs()[ids[i]];
    ReferenceHit h;
    h.doc_id = doc.doc_id;
    h.title = doc.title;
    h.url = doc.url;
    h.published = doc.published;
    h.stage_scores.bm25 = score[ids[i]];
    h.score = top > 0 ? score[ids[i]] / top : 0.0;
    h.rank = static_cast<int>(i + 1);
    hits.push_back(std::move(h));
  }
  return hits;
}

std::vector<ReferenceHit> rerank(std::vector<ReferenceHit> hits, std::string_view answer_text, Date ref_date,
                                 const RerankWeights& w) {
  double sum = w.bm25 + w.title + w.recency;
  if (std::abs(sum - 1.0) > 1e-9 || w.bm25 < 0 || w.title < 0 || w.recency < 0) {
    throw BadWeights("rerank weights must be non-negative and sum to 1");
  }
  if (!(w.half_life_days > 0)) throw BadWeights("half-life must be positive");
  auto toks = text::tokenize(answer_text);
  std::set<std::string> answer_terms(toks.begin(), toks.end());
  double max_bm25 = 0;
  for (const auto& h : hits) max_bm25 = std::max(max_bm25, h.stage_scores.bm25);
  for (auto& h : hits) {
    auto title = text::tokenize(h.title);
    std::set<std::string> title_terms(title.begin(), title.end());
    std::size_t inter = 0;
    for (const auto& t : title_terms) inter += answer_terms.count(t);
    std::size_t uni = answer_terms.size() + title_terms.size() - inter;
    h.stage_scores.title_overlap = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    double age = std::max(0L, days_between(h.published, ref_date));
    h.stage_scores.recency = std::exp(-std::numbers::ln2 * age / w.half_life_days);
    double norm = max_bm25 > 0 ? h.stage_scores.bm25 / max_bm25 : 0.0;
    h.score = w.bm25 * norm + w.title * h.stage_scores.title_overlap + w.recency * h.stage_scores.recency;
  }
  std::sort(hits.begin(), hits.end(), [](const ReferenceHit& a, const ReferenceHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.stage_scores.bm25 != b.stage_scores.bm25) return a.stage_scores.bm25 > b.stage_scores.bm25;
    return a.doc_id < b.doc_id;
  });
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = static_cast<int>(i + 1);
  return hits;
}

}  // namespace bizlens
