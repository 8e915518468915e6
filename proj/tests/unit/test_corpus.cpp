#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "ccr/corpus.hpp"
#include "ccr/error.hpp"
#include "ccr/io.hpp"
#include "ccr/rng.hpp"
#include "ccr/text.hpp"

using namespace ccr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ccr_test_corpus";
  fs::create_directories(dir);
  return dir / name;
}

// n copies of a CJK character ending with "。" every `sentence` characters.
std::string cjk_text(std::size_t n, std::size_t sentence = 0) {
  std::string out;
  for (std::size_t i = 1; i <= n; ++i) out += (sentence && i % sentence == 0) ? "。" : "文";
  return out;
}

std::map<std::string, std::string> concat_by_work(const std::vector<ParagraphRecord>& rs) {
  std::map<std::string, std::string> out;
  for (const auto& r : rs) out[r.work_id] += r.text;
  return out;
}

}  // namespace

TEST_CASE("ingest_corpus returns records in file order") {
  auto path = temp_file("three.jsonl");
  write_file(path,
             R"({"id":"a","work_id":"w1","title":"節義","text":"一二三"})" "\n"
             R"({"id":"b","work_id":"w1","title":"節義","text":"四五","split":"test"})" "\n"
             R"({"id":"c","work_id":"w2","title":"孝弟","text":"六"})" "\n");
  auto rs = ingest_corpus(path);
  REQUIRE(rs.size() == 3);
  CHECK(rs[0].id == "a");
  CHECK(rs[0].char_len == 3);
  CHECK_FALSE(rs[0].split.has_value());
  CHECK(rs[1].split == Split::test);
  CHECK(rs[2].title == "孝弟");
}

TEST_CASE("ingest_corpus errors name the line") {
  auto path = temp_file("bad.jsonl");
  SUBCASE("empty text") {
    write_file(path, R"({"id":"a","work_id":"w","title":"t","text":"x"})" "\n"
                     R"({"id":"b","work_id":"w","title":"t","text":""})" "\n");
    CHECK_THROWS_WITH_AS(ingest_corpus(path), doctest::Contains("line 2"), DataError);
  }
  SUBCASE("duplicate id") {
    write_file(path, R"({"id":"a","work_id":"w","title":"t","text":"x"})" "\n"
                     R"({"id":"a","work_id":"w","title":"t","text":"y"})" "\n");
    CHECK_THROWS_WITH_AS(ingest_corpus(path), doctest::Contains("duplicate id"), DataError);
  }
  SUBCASE("malformed json") {
    write_file(path, "{\"id\":\n");
    CHECK_THROWS_WITH_AS(ingest_corpus(path), doctest::Contains(":1"), DataError);
  }
}

TEST_CASE("write_corpus then ingest_corpus round-trips") {
  std::vector<ParagraphRecord> rs = {make_record("p1", "w", "忠", "臣事君以忠。", Split::train),
                                     make_record("p2", "w", "忠", "text \"quoted\"", std::nullopt)};
  auto path = temp_file("rt.jsonl");
  write_corpus(path, rs);
  CHECK(ingest_corpus(path) == rs);
}

TEST_CASE("normalize merges a short paragraph into its predecessor") {
  std::vector<ParagraphRecord> rs = {make_record("a", "w", "t", cjk_text(100)),
                                     make_record("b", "w", "t", cjk_text(30))};
  auto out = normalize_paragraphs(rs).records;
  REQUIRE(out.size() == 1);
  CHECK(out[0].char_len == 130);
  CHECK(out[0].id == "a");
}

TEST_CASE("normalize threshold is strict: 50 characters stay") {
  std::vector<ParagraphRecord> rs = {make_record("a", "w", "t", cjk_text(100)),
                                     make_record("b", "w", "t", cjk_text(50))};
  auto out = normalize_paragraphs(rs).records;
  REQUIRE(out.size() == 2);
  CHECK(out[1].char_len == 50);
}

TEST_CASE("normalize merges a leading short paragraph forward and keeps a lone short one") {
  std::vector<ParagraphRecord> rs = {make_record("a", "w", "t", cjk_text(20)),
                                     make_record("b", "w", "t", cjk_text(80)),
                                     make_record("c", "v", "t", cjk_text(10))};
  auto out = normalize_paragraphs(rs).records;
  REQUIRE(out.size() == 2);
  CHECK(out[0].char_len == 100);
  CHECK(out[0].work_id == "w");
  CHECK(out[1].char_len == 10);
  CHECK(out[1].work_id == "v");
}

TEST_CASE("normalize never merges across works") {
  std::vector<ParagraphRecord> rs = {make_record("a", "w1", "t", cjk_text(100)),
                                     make_record("b", "w2", "t", cjk_text(20)),
                                     make_record("c", "w2", "t", cjk_text(100))};
  auto out = normalize_paragraphs(rs).records;
  REQUIRE(out.size() == 2);
  CHECK(out[0].char_len == 100);
  CHECK(out[1].char_len == 120);
}

TEST_CASE("normalize splits a 1200-character paragraph into three 400-character segments") {
  std::vector<ParagraphRecord> rs = {make_record("a", "w", "t", cjk_text(1200, 100))};
  auto out = normalize_paragraphs(rs);
  REQUIRE(out.records.size() == 3);
  for (const auto& r : out.records) {
    CHECK(r.char_len == 400);
    CHECK(r.char_len < 500);
  }
  CHECK(out.records[0].text + out.records[1].text + out.records[2].text == rs[0].text);
  CHECK(out.oversized.empty());
  std::set<std::string> ids;
  for (const auto& r : out.records) ids.insert(r.id);
  CHECK(ids.size() == 3);
}

TEST_CASE("normalize emits an unsplittable sentence whole and flags it") {
  std::vector<ParagraphRecord> rs = {make_record("a", "w", "t", cjk_text(700))};
  auto out = normalize_paragraphs(rs);
  REQUIRE(out.records.size() == 1);
  CHECK(out.records[0].char_len == 700);
  CHECK(out.oversized == std::vector<std::string>{"a"});
}

TEST_CASE("normalize rebalances a short tail segment") {
  // Sentences of 400, 60, 45 characters: greedy packing leaves a 45 tail.
  std::string text = cjk_text(400, 400) + cjk_text(60, 60) + cjk_text(45, 45);
  auto out = normalize_paragraphs({make_record("a", "w", "t", text)}).records;
  REQUIRE(out.size() == 2);
  CHECK(out[0].char_len == 400);
  CHECK(out[1].char_len == 105);
}

TEST_CASE("normalize properties on random corpora: content preserved, idempotent, bounded") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ParagraphRecord> rs;
    const auto n_works = 1 + rng.below(4);
    int id = 0;
    for (std::size_t w = 0; w < n_works; ++w) {
      const auto n_paras = 1 + rng.below(6);
      for (std::size_t p = 0; p < n_paras; ++p) {
        std::string text;
        const auto n_sent = 1 + rng.below(12);
        for (std::size_t s = 0; s < n_sent; ++s) text += cjk_text(1 + rng.below(120)) + "。";
        rs.push_back(make_record("p" + std::to_string(id++), "w" + std::to_string(w), "t", text));
      }
    }
    auto once = normalize_paragraphs(rs);
    CHECK(concat_by_work(once.records) == concat_by_work(rs));
    auto twice = normalize_paragraphs(once.records);
    CHECK(twice.records == once.records);
    std::set<std::string> flagged(once.oversized.begin(), once.oversized.end());
    for (const auto& r : once.records) {
      CHECK(r.char_len >= 1);
      if (!flagged.count(r.id)) CHECK(r.char_len < 500);
    }
  }
}

TEST_CASE("assign_splits gives exact proportions and is deterministic") {
  std::vector<ParagraphRecord> rs;
  for (int i = 0; i < 10; ++i) rs.push_back(make_record("p" + std::to_string(i), "w", "t", "x"));
  auto a = assign_splits(rs, {}, 42);
  auto b = assign_splits(rs, {}, 42);
  CHECK(a == b);
  auto stats = compute_stats(a);
  CHECK(stats.split_fractions[0] == doctest::Approx(0.6));
  CHECK(stats.split_fractions[1] == doctest::Approx(0.2));
  CHECK(stats.split_fractions[2] == doctest::Approx(0.2));
  CHECK(stats.split_fractions[0] + stats.split_fractions[1] + stats.split_fractions[2] ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(assign_splits(rs, {}, 43) != a);
}

TEST_CASE("stratified splits contain every title") {
  std::vector<ParagraphRecord> rs;
  for (int i = 0; i < 20; ++i) rs.push_back(make_record("p" + std::to_string(i), "w", i < 10 ? "A" : "B", "x"));
  auto out = assign_splits(rs, {}, 7, true);
  std::map<Split, std::map<std::string, int>> counts;
  for (const auto& r : out) ++counts[*r.split][r.title];
  for (Split s : {Split::train, Split::valid, Split::test}) {
    CHECK(counts[s].size() == 2);
  }
  CHECK(counts[Split::train]["A"] == 6);
  CHECK(counts[Split::valid]["B"] == 2);
}

TEST_CASE("assign_splits rejects fractions that do not sum to 1") {
  CHECK_THROWS_AS(assign_splits({}, {0.5, 0.2, 0.2}, 1), ConfigError);
  CHECK_THROWS_AS(assign_splits({}, {0.8, 0.2, 0.0}, 1), ConfigError);
}
