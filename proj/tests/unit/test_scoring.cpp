#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/oracles.hpp"
#include "ccr/error.hpp"
#include "ccr/scoring.hpp"
#include "ccr/wordvec.hpp"

using namespace ccr;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ccr_test_scoring";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Vector randn(Rng& rng, std::size_t dim) {
  Vector v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

WordVectorModel random_model(std::size_t words, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  WordVectorModel m(static_cast<int>(dim), Framework::loaded);
  for (std::size_t k = 0; k < words; ++k) m.add("w" + std::to_string(k), randn(rng, dim));
  return m;
}

Questionnaire make_questionnaire(const std::vector<std::string>& texts) {
  Questionnaire q{"collectivism", "lzh", {}};
  for (std::size_t k = 0; k < texts.size(); ++k) q.items.push_back({"q" + std::to_string(k), texts[k], std::nullopt});
  return q;
}

}  // namespace

TEST_CASE("ccr_score examples") {
  const Vector p{1, 2, 3};
  CHECK(ccr_score(p, {p}) == doctest::Approx(1.0).epsilon(1e-15));
  // items at cosines 0.2 and 0.4 from e1
  const Vector e1{1, 0};
  const Vector a{0.2, std::sqrt(1 - 0.04)}, b{0.4, std::sqrt(1 - 0.16)};
  CHECK(ccr_score(e1, {a, b}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(ccr_score(e1, {}), DataError);
  CHECK_THROWS_AS(ccr_score(Vector{0, 0}, {a}), DataError);
}

TEST_CASE("ccr_score matches the mean-of-cosines oracle and is scale invariant") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = randn(rng, 16);
    std::vector<Vector> items;
    long double expect = 0;
    for (int k = 0; k < 7; ++k) {
      items.push_back(randn(rng, 16));
      expect += oracle::ld_cosine(p, items.back());
    }
    const double s = ccr_score(p, items);
    CHECK(std::abs(s - static_cast<double>(expect / 7)) < 1e-9);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    auto scaled_p = p;
    for (auto& x : scaled_p) x *= 3.5;
    auto scaled_items = items;
    for (auto& x : scaled_items[2]) x *= 0.01;
    CHECK(std::abs(ccr_score(scaled_p, scaled_items) - s) < 1e-12);
  }
}

TEST_CASE("ddr_score examples") {
  const auto m = random_model(30, 10, 2);
  const auto d = Dictionary::make("c", {"w1", "w2", "w3"});
  CHECK(ddr_score({"w1", "w2", "w3"}, d, m) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(ddr_score({"oov1", "oov2"}, d, m), doctest::Contains("no known tokens"), DataError);
  CHECK_THROWS_AS(ddr_score({"w1"}, Dictionary::make("c", {"x", "y"}), m), DataError);
  DdrCounts counts;
  ddr_score({"w1", "oov", "w2", "oov"}, Dictionary::make("c", {"w4", "zz"}), m, &counts);
  CHECK(counts.paragraph_oov == 2);
  CHECK(counts.dictionary_oov == 1);
}

TEST_CASE("ddr_score matches the centroid-cosine oracle and ignores order") {
  const auto m = random_model(40, 12, 3);
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> tokens;
    std::vector<Vector> para_vecs;
    for (int k = 0; k < 10; ++k) {
      const auto w = "w" + std::to_string(rng.below(45));  // some out of vocabulary
      tokens.push_back(w);
      if (auto v = m.lookup(w)) para_vecs.push_back(*v);
    }
    std::vector<std::string> words;
    std::vector<Vector> dict_vecs;
    for (int k = 0; k < 6; ++k) {
      const auto w = "w" + std::to_string(rng.below(40));
      if (std::find(words.begin(), words.end(), w) != words.end()) continue;
      words.push_back(w);
      dict_vecs.push_back(*m.lookup(w));
    }
    if (para_vecs.empty()) continue;
    const auto d = Dictionary::make("c", words);
    const double s = ddr_score(tokens, d, m);
    CHECK(std::abs(s - oracle::cosine(oracle::mean(para_vecs), oracle::mean(dict_vecs))) < 1e-9);
    auto shuffled = tokens;
    std::reverse(shuffled.begin(), shuffled.end());
    auto rwords = words;
    std::reverse(rwords.begin(), rwords.end());
    CHECK(std::abs(ddr_score(shuffled, Dictionary::make("c", rwords), m) - s) < 1e-12);
    // duplicates in the raw list vanish on dedup
    auto doubled = words;
    doubled.insert(doubled.end(), words.begin(), words.end());
    CHECK(ddr_score(tokens, Dictionary::make("c", doubled), m) == s);
  }
}

TEST_CASE("pm pseudo ground truth") {
  WordVectorModel m(2, Framework::loaded);
  m.add("t", Vector{1, 0});
  m.add("a", Vector{0, 5});
  m.add("b", Vector{3, 0});
  CHECK(pm_pseudo_ground_truth("t", Dictionary::make("c", {"t"}), m) == doctest::Approx(1.0));
  CHECK(pm_pseudo_ground_truth("t", Dictionary::make("c", {"a", "b"}), m) == doctest::Approx(0.5));
  CHECK(pm_pseudo_ground_truth("t", Dictionary::make("c", {"a", "b", "zz"}), m) == doctest::Approx(0.5));
  CHECK_THROWS_AS(pm_pseudo_ground_truth("zz", Dictionary::make("c", {"a"}), m), DataError);
  CHECK_THROWS_AS(pm_pseudo_ground_truth("t", Dictionary::make("c", {"zz"}), m), DataError);

  const auto big = random_model(30, 8, 5);
  std::vector<std::string> words;
  long double expect = 0;
  const auto title = *big.lookup("w0");
  for (int k = 1; k <= 20; ++k) {
    words.push_back("w" + std::to_string(k));
    expect += oracle::ld_cosine(title, *big.lookup(words.back()));
  }
  CHECK(std::abs(pm_pseudo_ground_truth("w0", Dictionary::make("c", words), big) -
                 static_cast<double>(expect / 20)) < 1e-9);
}

TEST_CASE("questionnaire and dictionary files") {
  auto q = make_questionnaire({"甲", "乙"});
  q.items[0].source_item = "I value my group.";
  save_questionnaire(q, scratch("q.json"));
  const auto back = load_questionnaire(scratch("q.json"));
  CHECK(back.construct == "collectivism");
  REQUIRE(back.items.size() == 2);
  CHECK(back.items[0].source_item == "I value my group.");
  CHECK_FALSE(back.items[1].source_item.has_value());

  write_file(scratch("dup_items.json"),
             R"({"construct":"c","language":"lzh","items":[{"id":"a","text":"x"},{"id":"a","text":"y"}]})");
  CHECK_THROWS_AS(load_questionnaire(scratch("dup_items.json")), DataError);
  write_file(scratch("empty_items.json"), R"({"construct":"c","language":"lzh","items":[]})");
  CHECK_THROWS_AS(load_questionnaire(scratch("empty_items.json")), DataError);

  const auto d = Dictionary::make("c", {"a", "b", "a"});
  CHECK(d.words == std::vector<std::string>{"a", "b"});
  save_dictionary(d, scratch("d.json"));
  CHECK(load_dictionary(scratch("d.json")).words == d.words);
  write_file(scratch("dup_dict.json"), R"({"construct":"c","words":["a","a"]})");
  CHECK_THROWS_AS(load_dictionary(scratch("dup_dict.json")), DataError);
}

TEST_CASE("score records round trip") {
  const std::vector<ScoreRecord> s{{"p1", "c", ScoreMethod::ccr, 0.25}, {"p2", "c", ScoreMethod::ddr, -0.5}};
  write_scores(scratch("s.jsonl"), s);
  const auto back = read_scores(scratch("s.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[1].method == ScoreMethod::ddr);
  CHECK(back[1].score == -0.5);
  write_file(scratch("bad_s.jsonl"), R"({"paragraph_id":"p","construct":"c","method":"ccr","score":1.5})" "\n");
  CHECK_THROWS_AS(read_scores(scratch("bad_s.jsonl")), DataError);
}

TEST_CASE("quote recommendation") {
  MockBackend b(32, 1);
  std::vector<Quote> corpus;
  for (int k = 0; k < 4; ++k) corpus.push_back({"q" + std::to_string(k), "quote " + std::to_string(k) + " words"});
  corpus.push_back({"q9", "the item text"});
  const auto top = recommend_quotes("the item text", corpus, b, nullptr, 10);
  REQUIRE(top.size() == 5);
  CHECK(top[0].id == "q9");
  CHECK(top[0].similarity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(recommend_quotes("the item text", corpus, b, nullptr, 2).size() == 2);
  CHECK_THROWS_AS(recommend_quotes("x", {}, b, nullptr, 3), DataError);
  CHECK_THROWS_AS(recommend_quotes("x", corpus, b, nullptr, 0), ConfigError);

  // planted near-duplicate among random quotes, against an exhaustive scan
  Rng rng(2);
  std::vector<Quote> many;
  for (int k = 0; k < 60; ++k) {
    std::string text;
    for (int w = 0; w < 6; ++w) text += "tok" + std::to_string(rng.below(40)) + " ";
    many.push_back({"m" + std::to_string(100 + k), text});
  }
  many.push_back({"m999", "tok1 tok2 tok3 tok4 tok5"});
  many.push_back({"m000", many[3].text});  // exact tie with m103
  const std::string item = "tok1 tok2 tok3 tok4 tok5 tok6";
  const auto item_emb = b.embed_one(item);
  std::vector<QuoteMatch> expect;
  for (const auto& q : many) expect.push_back({q.id, oracle::cosine(item_emb, b.embed_one(q.text))});
  std::sort(expect.begin(), expect.end(), [](const auto& x, const auto& y) {
    if (std::abs(x.similarity - y.similarity) > 1e-12) return x.similarity > y.similarity;
    return x.id < y.id;
  });
  const auto got = recommend_quotes(item, many, b, nullptr, 20);
  REQUIRE(got.size() == 20);
  CHECK(got[0].id == "m999");
  for (std::size_t k = 0; k < got.size(); ++k) {
    CHECK(got[k].id == expect[k].id);
    CHECK(std::abs(got[k].similarity - expect[k].similarity) < 1e-12);
    if (k > 0) CHECK(got[k - 1].similarity >= got[k].similarity);
  }
}

TEST_CASE("corpus scoring equals per-paragraph ccr_score") {
  MockBackend b(16, 4);
  Rng rng(3);
  auto adapter = AdapterParams::identity(16);
  for (auto& w : adapter.W.data) w += 0.1 * rng.normal();
  const auto q = make_questionnaire({"alpha beta", "gamma", "delta alpha"});
  std::vector<ParagraphRecord> records;
  for (int k = 0; k < 150; ++k) {
    records.push_back(make_record("p" + std::to_string(k), "w", "t", "alpha x" + std::to_string(k) + " gamma"));
  }
  for (const AdapterParams* a : std::vector<const AdapterParams*>{nullptr, &adapter}) {
    const auto scores = score_corpus(records, q, b, a);
    REQUIRE(scores.size() == records.size());
    std::vector<Vector> items;
    for (const auto& it : q.items) {
      const auto e = b.embed_one(it.text);
      items.push_back(a ? apply_adapter(*a, e) : e);
    }
    for (std::size_t k = 0; k < records.size(); ++k) {
      CHECK(scores[k].paragraph_id == records[k].id);
      CHECK(scores[k].construct == "collectivism");
      CHECK(scores[k].method == ScoreMethod::ccr);
      const auto e = b.embed_one(records[k].text);
      CHECK(scores[k].score == ccr_score(a ? apply_adapter(*a, e) : e, items));
    }
  }
  const auto one = score_corpus({make_record("p", "w", "t", "same text")}, make_questionnaire({"same text"}), b, nullptr);
  CHECK(one[0].score == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(score_corpus({}, q, b, nullptr), DataError);
}

TEST_CASE("corpus scoring reports the failing paragraph") {
  CacheBackend cache(std::map<std::string, Vector>{{"q0", {1, 0}}, {"p1", {1, 1}}});
  const auto q = make_questionnaire({"item"});
  CHECK_THROWS_WITH_AS(score_corpus({make_record("p1", "w", "t", "x"), make_record("p2", "w", "t", "y")}, q, cache,
                                    nullptr),
                       doctest::Contains("p2"), DataError);
}

TEST_CASE("ddr corpus scoring") {
  const auto m = random_model(10, 6, 7);
  const auto d = Dictionary::make("c", {"w1", "w2"});
  const auto s = ddr_score_corpus({make_record("p", "w", "t", "w3 w4 zz")}, d, m);
  REQUIRE(s.size() == 1);
  CHECK(s[0].method == ScoreMethod::ddr);
  CHECK(s[0].score == ddr_score({"w3", "w4", "zz"}, d, m));
}

TEST_CASE("bundled example questionnaires have four constructs of 15 items") {
  const std::filesystem::path dir = CCR_DATA_DIR;
  for (auto c : {"collectivism", "individualism", "norm_tightness", "norm_looseness"}) {
    const auto q = load_questionnaire(dir / ("questionnaire_" + std::string(c) + ".json"));
    CHECK(q.construct == c);
    CHECK(q.items.size() == 15);
    CHECK(load_dictionary(dir / ("dictionary_" + std::string(c) + ".json")).construct == c);
  }
}
