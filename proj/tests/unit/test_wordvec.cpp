#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/oracles.hpp"
#include "ccr/error.hpp"
#include "ccr/synthetic.hpp"
#include "ccr/wordvec.hpp"

using namespace ccr;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ccr_test_wordvec";
  std::filesystem::create_directories(dir);
  return dir / name;
}

WordVecTrainConfig small_config() {
  WordVecTrainConfig c;
  c.dim = 24;
  c.epochs = 3;
  c.min_count = 10;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("training defaults") {
  const WordVecTrainConfig c;
  CHECK(c.dim == 300);
  CHECK(c.epochs == 5);
  CHECK(c.window == 5);
  CHECK(c.negative == 5);
  CHECK(c.min_count == 10);
  CHECK(c.initial_learning_rate() == 0.025);
  WordVecTrainConfig cbow;
  cbow.architecture = Architecture::cbow;
  CHECK(cbow.initial_learning_rate() == 0.05);
  const SubwordConfig s;
  CHECK(s.min_n == 1);
  CHECK(s.max_n == 4);
}

TEST_CASE("config validation") {
  auto bad = [](auto edit) {
    WordVecTrainConfig c;
    edit(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](auto& c) { c.dim = 0; });
  bad([](auto& c) { c.epochs = 0; });
  bad([](auto& c) { c.window = 0; });
  bad([](auto& c) { c.negative = -1; });
  bad([](auto& c) { c.min_count = 0; });
  bad([](auto& c) { c.subword = SubwordConfig{3, 2, 100}; });
  bad([](auto& c) { c.subword = SubwordConfig{0, 2, 100}; });
}

TEST_CASE("min_count truncation matches corpus counts") {
  const auto g = generate_grammar_corpus(3, 6, 400, 8, 1);
  std::map<std::string, int> counts;
  for (const auto& s : g.sentences) {
    for (const auto& t : s) ++counts[t];
  }
  REQUIRE(counts.at("rare9") == 9);
  const auto model = train_word_vectors(g.sentences, small_config());
  CHECK_FALSE(model.contains("rare9"));
  for (const auto& [tok, n] : counts) CHECK(model.contains(tok) == (n >= 10));
  // rows ordered by descending frequency
  for (std::size_t k = 1; k < model.size(); ++k) {
    CHECK(counts.at(model.tokens()[k - 1]) >= counts.at(model.tokens()[k]));
  }
  CHECK(model.framework() == Framework::skipgram);
}

TEST_CASE("training errors") {
  CHECK_THROWS_AS(train_word_vectors({}, small_config()), DataError);
  CHECK_THROWS_AS(train_word_vectors({{"a", "b"}}, small_config()), DataError);
}

TEST_CASE("training is deterministic with one worker") {
  const auto g = generate_grammar_corpus(2, 4, 200, 6, 2);
  const auto a = train_word_vectors(g.sentences, small_config());
  const auto b = train_word_vectors(g.sentences, small_config());
  CHECK(a.tokens() == b.tokens());
  CHECK(a.vectors().data == b.vectors().data);
}

TEST_CASE("words sharing contexts end up closer than words that never do") {
  const auto g = generate_grammar_corpus(4, 5, 10000, 8, 3);
  for (auto arch : {Architecture::skipgram, Architecture::cbow}) {
    auto c = small_config();
    c.architecture = arch;
    c.dim = 32;
    const auto model = train_word_vectors(g.sentences, c);
    double in_sum = 0, cross_sum = 0;
    int in_n = 0, cross_n = 0, violations = 0, checks = 0;
    for (const auto& [a, ca] : g.token_class) {
      double worst_in = 2, best_cross = -2;
      for (const auto& [b, cb] : g.token_class) {
        if (a == b) continue;
        const double s = oracle::cosine(*model.lookup(a), *model.lookup(b));
        if (ca == cb) {
          in_sum += s;
          ++in_n;
          worst_in = std::min(worst_in, s);
        } else {
          cross_sum += s;
          ++cross_n;
          best_cross = std::max(best_cross, s);
        }
      }
      ++checks;
      violations += worst_in <= best_cross;
    }
    CHECK(in_sum / in_n > cross_sum / cross_n);
    CHECK(violations == 0);
    CHECK(checks == 20);
  }
}

TEST_CASE("subword mode composes out-of-vocabulary tokens") {
  const auto g = generate_grammar_corpus(2, 4, 300, 6, 4);
  auto c = small_config();
  c.subword = SubwordConfig{1, 3, 5000};
  const auto model = train_word_vectors(g.sentences, c);
  REQUIRE(model.subword().has_value());
  const auto oov = model.lookup("never-seen");
  REQUIRE(oov.has_value());
  CHECK(oov->size() == 24);
  CHECK(*model.lookup("never-seen") == *oov);
  CHECK_NOTHROW(embed_title("never-seen", model));
  const auto plain = train_word_vectors(g.sentences, small_config());
  CHECK_FALSE(plain.lookup("never-seen").has_value());

  const auto buckets = subword_buckets("ab", SubwordConfig{1, 2, 1000});
  // "<ab>": unigrams a, b (bare markers skipped) and bigrams <a, ab, b>
  CHECK(buckets.size() == 5);
  for (auto b : buckets) CHECK(b < 1000);
}

TEST_CASE("load_vectors format and errors") {
  write_file(scratch("ok.txt"), "2 3\nfoo 1 2 3\nbar 0.5 -1 0\n");
  const auto m = load_vectors(scratch("ok.txt"));
  CHECK(m.dim() == 3);
  CHECK(m.size() == 2);
  CHECK(m.framework() == Framework::loaded);
  CHECK(*m.lookup("bar") == Vector{0.5, -1, 0});

  write_file(scratch("short.txt"), "2 3\nfoo 1 2 3\nbar 1 2\n");
  try {
    load_vectors(scratch("short.txt"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("short.txt:3:") != std::string::npos);
  }
  write_file(scratch("dup.txt"), "2 1\nfoo 1\nfoo 2\n");
  CHECK_THROWS_AS(load_vectors(scratch("dup.txt")), DataError);
  write_file(scratch("nan.txt"), "1 2\nfoo 1 x\n");
  CHECK_THROWS_AS(load_vectors(scratch("nan.txt")), DataError);
  write_file(scratch("count.txt"), "3 1\nfoo 1\n");
  CHECK_THROWS_AS(load_vectors(scratch("count.txt")), DataError);
  CHECK_THROWS_AS(load_vectors(scratch("missing.txt")), DataError);
}

TEST_CASE("save then load round trips") {
  Rng rng(6);
  WordVectorModel m(7, Framework::loaded);
  for (int k = 0; k < 50; ++k) {
    Vector v(7);
    for (auto& x : v) x = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
    m.add("w" + std::to_string(k), v);
  }
  save_vectors(m, scratch("rt.txt"));
  const auto back = load_vectors(scratch("rt.txt"));
  REQUIRE(back.tokens() == m.tokens());
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t c = 0; c < 7; ++c) {
      const double a = m.row(r)[c], b = back.row(r)[c];
      CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("embed_title") {
  WordVectorModel m(2, Framework::loaded);
  m.add("天", Vector{1, 0});
  m.add("下", Vector{0, 3});
  m.add("天下", Vector{5, 5});
  CHECK(embed_title("天下", m) == Vector{5, 5});
  CHECK(embed_title("天", m) == Vector{1, 0});
  CHECK(embed_title("天 下", m) == Vector{0.5, 1.5});
  CHECK(embed_title("天 zz", m) == Vector{1, 0});
  CHECK_THROWS_WITH_AS(embed_title("zz", m), doctest::Contains("unrepresentable title"), DataError);
  CHECK_THROWS_AS(m.add("天", Vector{1, 1}), DataError);
  CHECK_THROWS_AS(m.add("x", Vector{1}), DataError);
}

TEST_CASE("cosine examples and properties") {
  CHECK(cosine(Vector{1, 0}, Vector{1, 0}) == 1.0);
  CHECK(cosine(Vector{1, 0}, Vector{0, 1}) == 0.0);
  CHECK(cosine(Vector{1, 2, 3}, Vector{4, 5, 6}) == doctest::Approx(32.0 / std::sqrt(1078.0)).epsilon(1e-12));
  CHECK(std::abs(cosine(Vector{1, 2, 3}, Vector{4, 5, 6}) - 0.9746) < 1e-4);
  CHECK_THROWS_AS(cosine(Vector{1, 0}, Vector{1}), DataError);
  CHECK_THROWS_AS(cosine(Vector{0, 0}, Vector{1, 1}), DataError);
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    Vector a(9), b(9), ca(9);
    const double c = rng.uniform(0.01, 100);
    for (std::size_t i = 0; i < 9; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      ca[i] = c * a[i];
    }
    CHECK(std::abs(cosine(a, a) - 1.0) < 1e-12);
    CHECK(cosine(a, b) == cosine(b, a));
    CHECK(std::abs(cosine(a, ca) - 1.0) < 1e-12);
    CHECK(std::abs(cosine(a, b) - oracle::cosine(a, b)) < 1e-12);
  }
}

TEST_CASE("centroid examples and properties") {
  CHECK(centroid(std::vector<Vector>{{3, 4}}) == Vector{3, 4});
  CHECK(centroid(std::vector<Vector>{{0, 0}, {2, 2}}) == Vector{1, 1});
  CHECK_THROWS_AS(centroid(std::vector<Vector>{}), DataError);
  CHECK_THROWS_AS(centroid(std::vector<Vector>{{1, 2}, {1}}), DataError);
  Rng rng(8);
  std::vector<Vector> rows(5, Vector(300));
  for (auto& r : rows) {
    for (auto& x : r) x = rng.normal();
  }
  const auto c = centroid(rows);
  const auto expect = oracle::mean(rows);
  for (std::size_t i = 0; i < 300; ++i) CHECK(std::abs(c[i] - expect[i]) < 1e-9);
  std::reverse(rows.begin(), rows.end());
  const auto r = centroid(rows);
  for (std::size_t i = 0; i < 300; ++i) CHECK(std::abs(c[i] - r[i]) < 1e-12);
}
