#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "bizlens/reference.hpp"
#include "support.hpp"

using namespace bizlens;
namespace bt = bizlens::testing;

namespace {

// Tokenizer written apart from the library's: lowercase ASCII, split on
// anything outside [a-z0-9], drop tokens shorter than two bytes.
std::vector<std::string> toks(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2) out.push_back(cur);
    cur.clear();
  };
  for (char c : s) {
    char l = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    if ((l >= 'a' && l <= 'z') || (l >= '0' && l <= '9')) cur += l;
    else flush();
  }
  flush();
  return out;
}

std::vector<std::string> doc_tokens(const ArticleDoc& d) {
  auto t = toks(d.title);
  auto b = toks(d.body);
  t.insert(t.end(), b.begin(), b.end());
  return t;
}

// Naive BM25: a double loop over documents and query terms.
std::map<std::string, double> naive_bm25(const std::vector<ArticleDoc>& docs, const std::string& query) {
  std::vector<std::vector<std::string>> dt;
  double total = 0;
  for (const auto& d : docs) {
    dt.push_back(doc_tokens(d));
    total += static_cast<double>(dt.back().size());
  }
  double avg = total / static_cast<double>(docs.size());
  auto q = toks(query);
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double s = 0;
    bool any = false;
    for (const auto& term : q) {
      double tf = static_cast<double>(std::count(dt[i].begin(), dt[i].end(), term));
      if (tf == 0) continue;
      any = true;
      double df = 0;
      for (const auto& other : dt) df += std::find(other.begin(), other.end(), term) != other.end();
      double n = static_cast<double>(docs.size());
      double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      double len = static_cast<double>(dt[i].size());
      s += idf * tf * 2.2 / (tf + 1.2 * (1 - 0.75 + 0.75 * len / avg));
    }
    if (any) scores[docs[i].doc_id] = s;
  }
  return scores;
}

struct Pair {
  std::string answer;
  std::string source;
};

std::vector<Pair> planted_pairs() {
  std::ifstream in(bt::corpus_dir() / "planted_pairs.jsonl");
  std::vector<Pair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = Json::parse(line);
    out.push_back({j["answer"], j["source_doc_id"]});
  }
  return out;
}

ArticleDoc doc(std::string id, std::string title, std::string body, Date published = make_date(2024, 1, 1)) {
  return {std::move(id), std::move(title), std::move(body), published, "News", "https://example.com"};
}

}  // namespace

TEST(Reference, Bm25MatchesNaiveReferenceOnMicroCorpus) {
  auto docs = load_corpus_dir(bt::micro_corpus_dir());
  ASSERT_EQ(docs.size(), 20u);
  auto index = CorpusIndex::build(docs);
  const std::vector<std::string> queries = {
      "chip demand climbs", "memory prices fall as phone makers cut orders", "data center accelerators",
      "the bank raised rates", "oil output and refinery margins", "retail sales holiday season"};
  for (const auto& q : queries) {
    auto hits = retrieve(index, q, 50);
    auto naive = naive_bm25(docs, q);
    ASSERT_EQ(hits.size(), naive.size()) << q;
    for (const auto& h : hits) {
      double want = naive.at(h.doc_id);
      EXPECT_NEAR(h.stage_scores.bm25, want, 1e-9 * std::max(1.0, std::abs(want))) << q << " " << h.doc_id;
    }
  }
}

TEST(Reference, IndexStatisticsAreExact) {
  auto docs = load_corpus_dir(bt::corpus_dir());
  auto index = CorpusIndex::build(docs);
  EXPECT_EQ(index.doc_count(), 200u);
  double total = 0;
  for (const auto& d : docs) total += static_cast<double>(doc_tokens(d).size());
  EXPECT_NEAR(index.avg_doc_length(), total / 200.0, 1e-12);
}

TEST(Reference, TwoDocsShareAPosting) {
  auto index = CorpusIndex::build({doc("a", "Alpha", "shared term"), doc("b", "Beta", "shared too")});
  EXPECT_EQ(index.postings().at("shared").size(), 2u);
  EXPECT_THROW(CorpusIndex::build({doc("a", "x", "y"), doc("a", "x", "z")}), DuplicateDocId);
}

TEST(Reference, EmptyCorpusAndEmptyQuery) {
  auto empty = CorpusIndex::build({});
  EXPECT_TRUE(retrieve(empty, "anything at all").empty());
  auto index = CorpusIndex::build({doc("a", "Alpha", "body text")});
  EXPECT_TRUE(retrieve(index, "a b c ! ?").empty());
  EXPECT_TRUE(retrieve(index, "").empty());
}

TEST(Reference, UniqueTermRanksFirst) {
  auto index = CorpusIndex::build({doc("a", "Alpha", "common words here"), doc("b", "Beta", "common zeppelin"),
                                   doc("c", "Gamma", "common words")});
  auto hits = retrieve(index, "zeppelin common");
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].doc_id, "b");
  EXPECT_DOUBLE_EQ(hits[0].score, 1.0);
}

TEST(Reference, PlantedPairsRecallAndRerank) {
  auto index = CorpusIndex::build(load_corpus_dir(bt::corpus_dir()));
  auto pairs = planted_pairs();
  ASSERT_EQ(pairs.size(), 20u);
  int recalled = 0, first = 0;
  for (const auto& p : pairs) {
    auto hits = retrieve(index, p.answer, 50);
    bool found = std::any_of(hits.begin(), hits.end(), [&](const ReferenceHit& h) { return h.doc_id == p.source; });
    recalled += found;
    auto ranked = rerank(hits, p.answer, bt::ref_date());
    first += !ranked.empty() && ranked[0].doc_id == p.source;
  }
  EXPECT_EQ(recalled, 20);
  EXPECT_GE(first, 18);
}

TEST(Reference, AddingUnrelatedDocKeepsOrder) {
  auto docs = load_corpus_dir(bt::micro_corpus_dir());
  auto base = CorpusIndex::build(docs);
  docs.push_back(doc("zz-unrelated", "Qwxv", "qwxv plmk zzyzx"));
  auto more = CorpusIndex::build(docs);
  for (const std::string q : {"chip demand climbs", "memory prices fall"}) {
    auto a = retrieve(base, q), b = retrieve(more, q);
    std::vector<std::string> ia, ib;
    for (const auto& h : a) ia.push_back(h.doc_id);
    for (const auto& h : b) ib.push_back(h.doc_id);
    EXPECT_EQ(ia, ib) << q;
  }
}

TEST(Reference, RerankIsAPermutation) {
  auto index = CorpusIndex::build(load_corpus_dir(bt::corpus_dir()));
  for (const auto& p : planted_pairs()) {
    auto hits = retrieve(index, p.answer, 50);
    auto ranked = rerank(hits, p.answer, bt::ref_date());
    std::vector<std::string> a, b;
    for (const auto& h : hits) a.push_back(h.doc_id);
    for (const auto& h : ranked) b.push_back(h.doc_id);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_EQ(a, b);
    ASSERT_EQ(std::adjacent_find(b.begin(), b.end()), b.end());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      ASSERT_EQ(ranked[i].rank, static_cast<int>(i) + 1);
      ASSERT_GE(ranked[i].score, 0.0);
      ASSERT_LE(ranked[i].score, 1.0);
      if (i) {
        ASSERT_GE(ranked[i - 1].score, ranked[i].score);
      }
    }
  }
}

TEST(Reference, RecencyBreaksOtherwiseEqualHits) {
  auto ref = make_date(2025, 6, 1);
  auto index = CorpusIndex::build({doc("old", "Steel", "steel output rose", make_date(2015, 6, 1)),
                                   doc("new", "Steel", "steel output rose", make_date(2025, 5, 31))});
  auto ranked = rerank(retrieve(index, "steel output"), "steel output", ref);
  ASSERT_EQ(ranked.size(), 2u);
  EXPECT_EQ(ranked[0].doc_id, "new");
  double expect_new = 0.6 + 0.3 * 0.5 + 0.1 * std::exp(-std::log(2.0) * 1.0 / 365.0);
  EXPECT_NEAR(ranked[0].score, expect_new, 1e-12);
}

TEST(Reference, SingleHitKeepsRankOne) {
  auto index = CorpusIndex::build({doc("a", "Alpha", "unique marker")});
  auto ranked = rerank(retrieve(index, "marker"), "marker", make_date(2024, 1, 1));
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].rank, 1);
}

TEST(Reference, BadWeights) {
  RerankWeights w;
  w.bm25 = 0.7;
  EXPECT_THROW(rerank({}, "x", make_date(2024, 1, 1), w), BadWeights);
  w.bm25 = 0.6 + 1e-12;
  EXPECT_NO_THROW(rerank({}, "x", make_date(2024, 1, 1), w));
}

TEST(Reference, IndexJsonRoundTrip) {
  auto index = CorpusIndex::build(load_corpus_dir(bt::micro_corpus_dir()));
  auto j = index.to_json();
  auto back = CorpusIndex::from_json(Json::parse(j.dump()));
  EXPECT_TRUE(back == index);
  EXPECT_EQ(back.fingerprint(), index.fingerprint());
  j["avg_doc_length"] = 1.0;
  EXPECT_THROW(CorpusIndex::from_json(j), CorpusFormatError);
}

TEST(Reference, CorpusFormatErrors) {
  EXPECT_THROW(parse_corpus_jsonl("{\"doc_id\":\"a\"}\n", "x.jsonl"), CorpusFormatError);
  EXPECT_THROW(parse_corpus_jsonl("not json\n", "x.jsonl"), CorpusFormatError);
}
