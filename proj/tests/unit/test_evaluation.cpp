#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "../support/oracles.hpp"
#include "ccr/error.hpp"
#include "ccr/evaluation.hpp"
#include "ccr/stats.hpp"
#include "ccr/synthetic.hpp"

using namespace ccr;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ccr_test_evaluation";
  std::filesystem::create_directories(dir);
  return dir / name;
}

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

struct StsFixture {
  SyntheticCorpus syn;
  TitleSimilarities sims;
  std::map<std::string, Vector> emb;
};

StsFixture sts_fixture() {
  auto syn = generate_synthetic_corpus(8, 6, 32, 0.3, 3);
  auto sims = title_similarity_matrix(syn.records, syn.model);
  auto emb = embed_records(MockBackend(32, 1), nullptr, syn.records);
  return {std::move(syn), std::move(sims), std::move(emb)};
}

}  // namespace

TEST_CASE("sts defaults") {
  const StsConfig c;
  CHECK(c.rounds == 20);
  CHECK(c.pairs_per_round == 4308);
}

TEST_CASE("sts with title-vector embeddings correlates perfectly") {
  const auto f = sts_fixture();
  std::map<std::string, Vector> perfect;
  for (const auto& r : f.syn.records) perfect[r.id] = f.syn.title_vectors.at(r.title);
  const auto values = f.sims.values();
  const auto th = compute_thresholds(values, {});
  for (auto source : {PairSource::random, PairSource::threshold}) {
    StsConfig c{source, 5, 300, 1};
    const auto r = eval_sts(f.syn.records, c, f.sims, perfect, &th);
    CHECK(r.row("pearson").mean == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.row("spearman").mean == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.row("pearson").n == 5);
  }
}

TEST_CASE("sts hard task matches an independent recomputation") {
  const auto f = sts_fixture();
  const StsConfig c{PairSource::random, 7, 500, 11};
  const auto report = eval_sts(f.syn.records, c, f.sims, f.emb);
  std::vector<double> ps;
  for (std::size_t round = 0; round < c.rounds; ++round) {
    Rng rng(derive_seed(c.seed, round));
    std::vector<double> pred, truth;
    const auto& recs = f.syn.records;
    for (std::size_t k = 0; k < c.pairs_per_round; ++k) {
      const auto a = rng.below(recs.size());
      auto b = rng.below(recs.size() - 1);
      if (b >= a) ++b;
      pred.push_back(oracle::cosine(f.emb.at(recs[a].id), f.emb.at(recs[b].id)));
      const auto& ta = recs[a].title;
      const auto& tb = recs[b].title;
      truth.push_back(ta == tb ? 1.0 : oracle::cosine(f.syn.title_vectors.at(ta), f.syn.title_vectors.at(tb)));
    }
    ps.push_back(pearson_oracle(pred, truth));
  }
  const auto by_round = report.details.at("pearson_by_round").get<std::vector<double>>();
  REQUIRE(by_round.size() == c.rounds);
  for (std::size_t k = 0; k < c.rounds; ++k) CHECK(std::abs(by_round[k] - ps[k]) < 1e-9);
  long double m = 0;
  for (double p : ps) m += p;
  m /= ps.size();
  long double ss = 0;
  for (double p : ps) ss += (p - m) * (p - m);
  const double se = static_cast<double>(std::sqrt(ss / (ps.size() - 1)) / std::sqrt(static_cast<long double>(ps.size())));
  CHECK(std::abs(report.row("pearson").mean - static_cast<double>(m)) < 1e-9);
  CHECK(std::abs(report.row("pearson").std_err - se) < 1e-9);

  const auto again = eval_sts(f.syn.records, c, f.sims, f.emb);
  CHECK(again.to_json() == report.to_json());
}

TEST_CASE("sts easy task samples only threshold-labeled pairs") {
  const auto f = sts_fixture();
  const auto values = f.sims.values();
  const auto th = compute_thresholds(values, {});
  const StsConfig c{PairSource::threshold, 4, 400, 2};
  const auto r = eval_sts(f.syn.records, c, f.sims, f.emb, &th);
  const auto labeled = label_pairs(f.syn.records, f.sims, th);
  CHECK(r.details.at("labeled_pairs").get<std::size_t>() == labeled.pairs.size());
  const double frac = r.details.at("sampled_positive_fraction").get<double>();
  CHECK(frac > 0.0);
  CHECK(frac < 1.0);
  CHECK_THROWS_AS(eval_sts(f.syn.records, c, f.sims, f.emb, nullptr), ConfigError);
  CHECK_THROWS_AS(eval_sts(f.syn.records, StsConfig{PairSource::random, 0, 10, 1}, f.sims, f.emb), ConfigError);
  auto missing = f.emb;
  missing.erase(missing.begin());
  CHECK_THROWS_AS(eval_sts(f.syn.records, StsConfig{PairSource::random, 2, 2000, 1}, f.sims, missing), DataError);
}

TEST_CASE("stratified folds form a balanced partition") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto classes = 2 + rng.below(4);
    std::vector<int> labels;
    const auto n = 10 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(classes)));
    const auto k = 2 + rng.below(std::min<std::size_t>(n - 1, 12));
    const auto folds = stratified_folds(labels, k, trial);
    REQUIRE(folds.size() == n);
    std::vector<std::size_t> size(k, 0);
    std::map<int, std::vector<std::size_t>> per_class;
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(folds[i] < k);
      ++size[folds[i]];
      per_class[labels[i]].resize(k, 0);
      ++per_class[labels[i]][folds[i]];
    }
    CHECK(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()) <= 1);
    for (const auto& [label, counts] : per_class) {
      CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
    }
  }
  std::vector<int> sixty;
  for (int c = 0; c < 4; ++c) sixty.insert(sixty.end(), 15, c);
  const auto folds = stratified_folds(sixty, 10, 1);
  for (std::size_t f = 0; f < 10; ++f) CHECK(std::count(folds.begin(), folds.end(), f) == 6);
  const auto loo = stratified_folds(sixty, 60, 1);
  CHECK(std::set<std::size_t>(loo.begin(), loo.end()).size() == 60);
  CHECK_THROWS_AS(stratified_folds(sixty, 61, 1), ConfigError);
  CHECK_THROWS_AS(stratified_folds(sixty, 1, 1), ConfigError);
}

TEST_CASE("qic on separable points") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto pts = generate_separable_points(2, 20, 8, 1.0, seed);
    const auto r = eval_qic(pts.points, pts.labels, 10, seed);
    CHECK(r.row("accuracy").mean >= 0.95);
    CHECK(r.row("accuracy").n == 10);
    CHECK(r.row("accuracy").std_err >= 0.0);
  }
  const auto four = generate_separable_points(4, 15, 16, 1.0, 5);
  CHECK(eval_qic(four.points, four.labels, 10, 5).row("accuracy").mean >= 0.95);
  CHECK_THROWS_AS(eval_qic(four.points, std::vector<int>(60, 1)), DataError);
  CHECK_THROWS_AS(eval_qic({{1.0}, {2.0}}, {0, 1}, 10), ConfigError);
}

TEST_CASE("linear svm predicts training classes") {
  const auto pts = generate_separable_points(3, 10, 4, 1.0, 9);
  const auto svm = LinearSvm::train(pts.points, pts.labels, {});
  CHECK(svm.classes() == std::vector<int>{0, 1, 2});
  int right = 0;
  for (std::size_t i = 0; i < pts.points.size(); ++i) right += svm.predict(pts.points[i]) == pts.labels[i];
  CHECK(right == 30);
  CHECK_THROWS_AS(LinearSvm::train(pts.points, pts.labels, {0.0, 10, 1}), ConfigError);
}

TEST_CASE("pm scores equal to the pseudo ground truth correlate perfectly") {
  const auto syn = generate_synthetic_corpus(6, 4, 16, 0.2, 2);
  std::map<std::string, std::map<std::string, double>> scores;
  for (const auto& d : syn.dictionaries) {
    for (const auto& r : syn.records) scores[d.construct][r.id] = pm_pseudo_ground_truth(r.title, d, syn.model);
  }
  const auto r = eval_pm_scores(syn.records, scores, syn.dictionaries, syn.model);
  for (const auto& row : r.rows) CHECK(row.mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pm report shape and brute-force agreement") {
  const auto syn = generate_synthetic_corpus(8, 5, 32, 0.2, 4, 4);
  REQUIRE(syn.questionnaires.size() == 4);
  MockBackend b(32, 2);
  const auto r = eval_pm(syn.records, syn.questionnaires, syn.dictionaries, b, nullptr, syn.model);
  std::vector<std::string> names;
  for (const auto& row : r.rows) names.push_back(row.name);
  std::vector<std::string> expect;
  for (const auto& q : syn.questionnaires) expect.push_back("pearson:" + q.construct);
  for (const auto& q : syn.questionnaires) expect.push_back("spearman:" + q.construct);
  for (auto s : {"pearson:mean", "spearman:mean", "pearson:pooled", "spearman:pooled"}) expect.push_back(s);
  CHECK(names == expect);
  CHECK(r.row("pearson:mean").n == 4);

  std::vector<double> per;
  for (std::size_t c = 0; c < 4; ++c) {
    const auto& q = syn.questionnaires[c];
    std::vector<Vector> items;
    for (const auto& it : q.items) items.push_back(b.embed_one(it.text));
    std::vector<double> x, y;
    for (const auto& rec : syn.records) {
      const auto e = b.embed_one(rec.text);
      long double s = 0;
      for (const auto& it : items) s += oracle::ld_cosine(e, it);
      x.push_back(static_cast<double>(s / items.size()));
      const auto tv = *syn.model.lookup(rec.title);
      long double g = 0;
      for (const auto& w : syn.dictionaries[c].words) g += oracle::ld_cosine(tv, *syn.model.lookup(w));
      y.push_back(static_cast<double>(g / syn.dictionaries[c].words.size()));
    }
    per.push_back(pearson_oracle(x, y));
    CHECK(std::abs(r.row("pearson:" + q.construct).mean - per.back()) < 1e-9);
  }
  CHECK(std::abs(r.row("pearson:mean").mean - (per[0] + per[1] + per[2] + per[3]) / 4) < 1e-9);
  CHECK(r.row("pearson:mean").mean > 0.0);

  auto fewer = syn.dictionaries;
  fewer.pop_back();
  CHECK_THROWS_AS(eval_pm(syn.records, syn.questionnaires, fewer, b, nullptr, syn.model), DataError);
}

TEST_CASE("officials benchmark recovers a planted negative relation") {
  const auto so = generate_synthetic_officials(60, 5, 3);
  const auto r = benchmark_officials(so.officials, so.scores);
  CHECK(r.row("spearman:support_continuous").mean <= -0.9);
  CHECK(r.row("spearman:attitude_ordinal").mean < 0.0);
  CHECK(r.row("spearman:support_continuous").p_value.value() < 1e-6);
  CHECK(r.row("spearman:support_continuous").n == 60);

  auto reordered = so.officials;
  for (auto& o : reordered) std::reverse(o.writings.begin(), o.writings.end());
  std::reverse(reordered.begin(), reordered.end());
  for (std::size_t k = 0; k < so.officials.size(); ++k) {
    CHECK(official_mean(so.officials[k], so.scores) == official_mean(reordered[so.officials.size() - 1 - k], so.scores));
  }
  CHECK(benchmark_officials(reordered, so.scores).row("spearman:support_continuous").mean ==
        doctest::Approx(r.row("spearman:support_continuous").mean).epsilon(1e-12));
}

TEST_CASE("officials benchmark errors and file round trip") {
  const auto so = generate_synthetic_officials(10, 2, 1);
  CHECK_THROWS_AS(benchmark_officials({so.officials.front()}, so.scores), DataError);
  auto missing = so.scores;
  missing.erase(so.officials.front().writings.front());
  CHECK_THROWS_AS(benchmark_officials(so.officials, missing), DataError);
  OfficialRecord none{"x", {"p"}, std::nullopt, std::nullopt};
  CHECK_THROWS_AS(none.validate(), DataError);
  OfficialRecord bad{"x", {"p"}, 2, std::nullopt};
  CHECK_THROWS_AS(bad.validate(), DataError);

  write_officials(scratch("o.jsonl"), so.officials);
  const auto back = read_officials(scratch("o.jsonl"));
  REQUIRE(back.size() == so.officials.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].author_id == so.officials[k].author_id);
    CHECK(back[k].writings == so.officials[k].writings);
    CHECK(back[k].attitude_ordinal == so.officials[k].attitude_ordinal);
    CHECK(back[k].support_continuous == so.officials[k].support_continuous);
  }
}

TEST_CASE("synthetic corpus shape and determinism") {
  const auto a = generate_synthetic_corpus(2, 10, 64, 0.1, 7);
  CHECK(a.records.size() == 20);
  std::set<std::string> titles;
  for (const auto& r : a.records) titles.insert(r.title);
  CHECK(titles.size() == 2);
  const auto b = generate_synthetic_corpus(2, 10, 64, 0.1, 7);
  for (std::size_t k = 0; k < a.records.size(); ++k) CHECK(a.records[k].text == b.records[k].text);
  CHECK(a.title_vectors == b.title_vectors);
}

TEST_CASE("without noise intra-title similarity exceeds inter-title similarity") {
  const auto syn = generate_synthetic_corpus(6, 5, 64, 0.0, 5);
  const auto emb = embed_records(MockBackend(64, 0), nullptr, syn.records);
  double min_intra = 2, max_inter = -2;
  for (const auto& a : syn.records) {
    for (const auto& b : syn.records) {
      if (a.id == b.id) continue;
      const double s = oracle::cosine(emb.at(a.id), emb.at(b.id));
      if (a.title == b.title) {
        min_intra = std::min(min_intra, s);
      } else {
        max_inter = std::max(max_inter, s);
      }
    }
  }
  CHECK(min_intra > max_inter);
}

TEST_CASE("report rendering") {
  EvalReport r;
  r.task = EvalTask::benchmark;
  r.rows.push_back({"spearman:x", -0.5, 0.0, 12, 0.09785461425781246});
  const auto j = r.to_json();
  CHECK(j.at("task") == "benchmark");
  CHECK(j.at("rows").at(0).at("p_value").get<double>() == doctest::Approx(0.0978546));
  CHECK(r.to_table().find("spearman:x") != std::string::npos);
  CHECK_THROWS_AS(r.row("missing"), DataError);
}
