#include "ccr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "ccr/error.hpp"
#include "ccr/rng.hpp"
#include "ccr/stats.hpp"

namespace ccr {

std::string_view to_string(EvalTask task) {
  switch (task) {
    case EvalTask::sts_easy: return "sts_easy";
    case EvalTask::sts_hard: return "sts_hard";
    case EvalTask::qic: return "qic";
    case EvalTask::pm: return "pm";
    case EvalTask::benchmark: return "benchmark";
  }
  return "unknown";
}

const MetricRow& EvalReport::row(std::string_view name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw DataError("report has no row \"" + std::string(name) + "\"");
}

Json EvalReport::to_json() const {
  Json rows_json = Json::array();
  for (const auto& r : rows) {
    Json j{{"name", r.name}, {"mean", r.mean}, {"std_err", r.std_err}, {"n", r.n}};
    if (r.p_value) j["p_value"] = std::isnan(*r.p_value) ? Json(nullptr) : Json(*r.p_value);
    rows_json.push_back(std::move(j));
  }
  Json out{{"task", std::string(to_string(task))}, {"rows", rows_json}};
  if (!details.empty()) out["details"] = details;
  return out;
}

std::string EvalReport::to_table() const {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char buf[128];
  out << "task: " << to_string(task) << '\n';
  std::snprintf(buf, sizeof buf, "%-*s %10s %10s %8s %10s\n", static_cast<int>(width), "metric", "mean", "std_err", "n", "p");
  out << buf;
  for (const auto& r : rows) {
    std::string p = "-";
    if (r.p_value && !std::isnan(*r.p_value)) {
      char pb[32];
      std::snprintf(pb, sizeof pb, "%.3g", *r.p_value);
      p = pb;
    }
    std::snprintf(buf, sizeof buf, "%-*s %10.4f %10.4f %8zu %10s\n", static_cast<int>(width), r.name.c_str(), r.mean,
                  r.std_err, r.n, p.c_str());
    out << buf;
  }
  return out.str();
}

namespace {

MetricRow summary_row(std::string name, const std::vector<double>& values) {
  const auto ms = mean_and_stderr(values);
  return {std::move(name), ms.mean, ms.std_err, values.size(), std::nullopt};
}

}  // namespace

// ---------------------------------------------------------------------------
// STS

EvalReport eval_sts(const std::vector<ParagraphRecord>& records, const StsConfig& config,
                    const TitleSimilarities& sims, const std::map<std::string, Vector>& embeddings,
                    const Thresholds* thresholds) {
  if (config.rounds == 0) throw ConfigError("eval_sts: rounds must be at least 1");
  if (config.pairs_per_round < 2) throw ConfigError("eval_sts: pairs_per_round must be at least 2");

  std::vector<ScoredPair> pool;
  std::vector<const ParagraphRecord*> usable;
  std::size_t positives = 0;
  if (config.source == PairSource::threshold) {
    if (!thresholds) throw ConfigError("eval_sts: the threshold pair source needs thresholds");
    for_each_labeled_pair(records, sims, *thresholds, [&](const LabeledPair& p) {
      pool.push_back({p.i, p.j, p.title_sim});
      if (p.label == PairLabel::positive) ++positives;
    });
    if (pool.size() < 2) throw DataError("eval_sts: fewer than 2 threshold-labeled pairs");
  } else {
    for (const auto& r : records) {
      if (sims.representable(r.title)) usable.push_back(&r);
    }
    if (usable.size() < 2) throw DataError("eval_sts: fewer than 2 paragraphs with representable titles");
  }

  auto emb = [&](const std::string& id) -> const Vector& {
    auto it = embeddings.find(id);
    if (it == embeddings.end()) throw DataError("eval_sts: no embedding for \"" + id + "\"");
    return it->second;
  };

  std::vector<double> pearsons, spearmans;
  std::size_t drawn_positive = 0;
  for (std::size_t round = 0; round < config.rounds; ++round) {
    Rng rng(derive_seed(config.seed, round));
    std::vector<double> predicted, truth;
    predicted.reserve(config.pairs_per_round);
    truth.reserve(config.pairs_per_round);
    for (std::size_t k = 0; k < config.pairs_per_round; ++k) {
      ScoredPair p;
      if (config.source == PairSource::threshold) {
        p = pool[rng.below(pool.size())];
      } else {
        const auto a = rng.below(usable.size());
        auto b = rng.below(usable.size() - 1);
        if (b >= a) ++b;
        p = {usable[a]->id, usable[b]->id, *sims.get(usable[a]->title, usable[b]->title)};
      }
      predicted.push_back(cosine(emb(p.i), emb(p.j)));
      truth.push_back(p.title_sim);
    }
    if (config.source == PairSource::threshold) {
      // threshold-labeled positives are exactly the pairs above the upper cut
      for (double t : truth) drawn_positive += t > thresholds->upper ? 1 : 0;
    }
    try {
      pearsons.push_back(pearson(predicted, truth));
      spearmans.push_back(spearman(predicted, truth));
    } catch (const DataError& e) {
      throw DataError("eval_sts round " + std::to_string(round) + ": " + e.what());
    }
  }

  EvalReport report;
  report.task = config.source == PairSource::threshold ? EvalTask::sts_easy : EvalTask::sts_hard;
  report.rows.push_back(summary_row("pearson", pearsons));
  report.rows.push_back(summary_row("spearman", spearmans));
  report.details["pearson_by_round"] = pearsons;
  report.details["spearman_by_round"] = spearmans;
  report.details["pairs_per_round"] = config.pairs_per_round;
  if (config.source == PairSource::threshold) {
    report.details["labeled_pairs"] = pool.size();
    report.details["labeled_positive_fraction"] = static_cast<double>(positives) / static_cast<double>(pool.size());
    report.details["sampled_positive_fraction"] =
        static_cast<double>(drawn_positive) / static_cast<double>(config.rounds * config.pairs_per_round);
  }
  return report;
}

EvalReport eval_sts(const std::vector<ParagraphRecord>& records, const StsConfig& config,
                    const TitleSimilarities& sims, const EmbeddingBackend& backend, const AdapterParams* adapter,
                    const Thresholds* thresholds) {
  return eval_sts(records, config, sims, embed_records(backend, adapter, records), thresholds);
}

// ---------------------------------------------------------------------------
// QIC

std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_folds: k must be at least 2");
  if (k > labels.size()) {
    throw ConfigError("stratified_folds: k = " + std::to_string(k) + " exceeds the " + std::to_string(labels.size()) +
                      " items");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size());
  std::size_t dealer = 0;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(std::span(idx));
    for (auto i : idx) {
      fold[i] = dealer;
      dealer = (dealer + 1) % k;
    }
  }
  return fold;
}

LinearSvm LinearSvm::train(const std::vector<Vector>& x, const std::vector<int>& y, const SvmConfig& config) {
  if (x.empty() || x.size() != y.size()) throw DataError("LinearSvm: need equally many points and labels");
  if (!(config.c > 0.0) || config.epochs < 1) throw ConfigError("LinearSvm: C and epochs must be positive");
  const std::size_t dim = x.front().size();
  for (const auto& row : x) {
    if (row.size() != dim) throw DataError("LinearSvm: dimension mismatch");
  }

  LinearSvm svm;
  const std::set<int> distinct(y.begin(), y.end());
  svm.classes_.assign(distinct.begin(), distinct.end());
  const std::size_t n = x.size();
  const double lambda = 1.0 / (config.c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);

  for (std::size_t ci = 0; ci < svm.classes_.size(); ++ci) {
    const int cls = svm.classes_[ci];
    Vector w(dim + 1, 0.0);
    Rng rng(derive_seed(config.seed, ci));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(std::span(order));
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double label = y[i] == cls ? 1.0 : -1.0;
        double margin = w[dim];
        for (std::size_t d = 0; d < dim; ++d) margin += w[d] * x[i][d];
        margin *= label;
        const double shrink = 1.0 - eta * lambda;
        for (auto& v : w) v *= shrink;
        if (margin < 1.0) {
          for (std::size_t d = 0; d < dim; ++d) w[d] += eta * label * x[i][d];
          w[dim] += eta * label;
        }
        const double len = norm(w);
        if (len > radius) {
          for (auto& v : w) v *= radius / len;
        }
      }
    }
    svm.weights_.push_back(std::move(w));
  }
  return svm;
}

int LinearSvm::predict(std::span<const double> x) const {
  if (classes_.size() == 1) return classes_.front();
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < classes_.size(); ++ci) {
    const auto& w = weights_[ci];
    if (x.size() + 1 != w.size()) throw DataError("LinearSvm: dimension mismatch at prediction");
    double s = w.back();
    for (std::size_t d = 0; d < x.size(); ++d) s += w[d] * x[d];
    if (s > best_score) {
      best_score = s;
      best = ci;
    }
  }
  return classes_[best];
}

EvalReport eval_qic(const std::vector<Vector>& item_embs, const std::vector<int>& labels, std::size_t k,
                    std::uint64_t seed, const SvmConfig& svm) {
  if (item_embs.size() != labels.size()) throw DataError("eval_qic: embeddings and labels differ in length");
  if (std::set<int>(labels.begin(), labels.end()).size() < 2) throw DataError("eval_qic: need at least 2 classes");
  const auto folds = stratified_folds(labels, k, seed);

  std::vector<double> accuracies;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Vector> train_x;
    std::vector<int> train_y;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (folds[i] == f) {
        test.push_back(i);
      } else {
        train_x.push_back(item_embs[i]);
        train_y.push_back(labels[i]);
      }
    }
    SvmConfig cfg = svm;
    cfg.seed = derive_seed(svm.seed ^ seed, f);
    const auto model = LinearSvm::train(train_x, train_y, cfg);
    std::size_t correct = 0;
    for (auto i : test) correct += model.predict(item_embs[i]) == labels[i] ? 1 : 0;
    accuracies.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
  }

  EvalReport report;
  report.task = EvalTask::qic;
  report.rows.push_back(summary_row("accuracy", accuracies));
  report.details["fold_accuracy"] = accuracies;
  report.details["folds"] = k;
  return report;
}

// ---------------------------------------------------------------------------
// PM

EvalReport eval_pm_scores(const std::vector<ParagraphRecord>& records,
                          const std::map<std::string, std::map<std::string, double>>& ccr_scores,
                          const std::vector<Dictionary>& dictionaries, const WordVectorModel& model) {
  if (ccr_scores.empty()) throw DataError("eval_pm: no constructs to evaluate");
  if (records.size() < 2) throw DataError("eval_pm: need at least 2 paragraphs");
  std::map<std::string, const Dictionary*> dict_by_construct;
  for (const auto& d : dictionaries) dict_by_construct[d.construct] = &d;

  EvalReport report;
  report.task = EvalTask::pm;
  std::vector<double> pearsons, spearmans, pooled_pred, pooled_truth;
  std::vector<MetricRow> spearman_rows;
  for (const auto& [construct, scores] : ccr_scores) {
    auto d = dict_by_construct.find(construct);
    if (d == dict_by_construct.end()) throw DataError("eval_pm: no dictionary for construct \"" + construct + "\"");
    std::map<std::string, double> gt_by_title;
    std::vector<double> pred, truth;
    for (const auto& r : records) {
      auto s = scores.find(r.id);
      if (s == scores.end()) throw DataError("eval_pm: no " + construct + " score for \"" + r.id + "\"");
      auto g = gt_by_title.find(r.title);
      if (g == gt_by_title.end()) {
        g = gt_by_title.emplace(r.title, pm_pseudo_ground_truth(r.title, *d->second, model)).first;
      }
      pred.push_back(s->second);
      truth.push_back(g->second);
    }
    const double p = pearson(pred, truth);
    const double rho = spearman(pred, truth);
    pearsons.push_back(p);
    spearmans.push_back(rho);
    report.rows.push_back({"pearson:" + construct, p, 0.0, pred.size(), std::nullopt});
    spearman_rows.push_back({"spearman:" + construct, rho, 0.0, pred.size(), spearman_p_value(rho, pred.size())});
    pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
    pooled_truth.insert(pooled_truth.end(), truth.begin(), truth.end());
  }
  report.rows.insert(report.rows.end(), spearman_rows.begin(), spearman_rows.end());
  report.rows.push_back(summary_row("pearson:mean", pearsons));
  report.rows.push_back(summary_row("spearman:mean", spearmans));
  const double pooled_rho = spearman(pooled_pred, pooled_truth);
  report.rows.push_back({"pearson:pooled", pearson(pooled_pred, pooled_truth), 0.0, pooled_pred.size(), std::nullopt});
  report.rows.push_back(
      {"spearman:pooled", pooled_rho, 0.0, pooled_pred.size(), spearman_p_value(pooled_rho, pooled_pred.size())});
  return report;
}

EvalReport eval_pm(const std::vector<ParagraphRecord>& records, const std::vector<Questionnaire>& questionnaires,
                   const std::vector<Dictionary>& dictionaries, const EmbeddingBackend& backend,
                   const AdapterParams* adapter, const WordVectorModel& model) {
  std::set<std::string> have;
  for (const auto& d : dictionaries) have.insert(d.construct);
  for (const auto& q : questionnaires) {
    if (!have.count(q.construct)) throw DataError("eval_pm: no dictionary for construct \"" + q.construct + "\"");
  }
  std::map<std::string, std::map<std::string, double>> scores;
  for (const auto& q : questionnaires) {
    for (const auto& s : score_corpus(records, q, backend, adapter)) scores[q.construct][s.paragraph_id] = s.score;
  }
  return eval_pm_scores(records, scores, dictionaries, model);
}

// ---------------------------------------------------------------------------
// Officials benchmark

void OfficialRecord::validate() const {
  if (writings.empty()) throw DataError("official \"" + author_id + "\" lists no writings");
  if (!attitude_ordinal && !support_continuous) {
    throw DataError("official \"" + author_id + "\" has neither attitude_ordinal nor support_continuous");
  }
  if (attitude_ordinal && (*attitude_ordinal < -1 || *attitude_ordinal > 1)) {
    throw DataError("official \"" + author_id + "\": attitude_ordinal must be -1, 0 or 1");
  }
  if (support_continuous && !(*support_continuous >= 0.0 && *support_continuous <= 1.0)) {
    throw DataError("official \"" + author_id + "\": support_continuous must lie in [0, 1]");
  }
}

std::vector<OfficialRecord> read_officials(const std::filesystem::path& path) {
  std::vector<OfficialRecord> out;
  for_each_jsonl(path, [&](const Json& obj, std::size_t line) {
    OfficialRecord o;
    o.author_id = require_string(obj, "author_id", line);
    if (!obj.contains("writings") || !obj["writings"].is_array()) {
      throw DataError("line " + std::to_string(line) + ": missing \"writings\" array");
    }
    for (const auto& w : obj["writings"]) {
      if (!w.is_string()) throw DataError("line " + std::to_string(line) + ": writings must be strings");
      o.writings.push_back(w.get<std::string>());
    }
    if (obj.contains("attitude_ordinal") && !obj["attitude_ordinal"].is_null()) {
      if (!obj["attitude_ordinal"].is_number_integer()) {
        throw DataError("line " + std::to_string(line) + ": attitude_ordinal must be an integer");
      }
      o.attitude_ordinal = obj["attitude_ordinal"].get<int>();
    }
    if (obj.contains("support_continuous") && !obj["support_continuous"].is_null()) {
      o.support_continuous = require_number(obj, "support_continuous", line);
    }
    try {
      o.validate();
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line) + ": " + e.what());
    }
    out.push_back(std::move(o));
  });
  return out;
}

void write_officials(const std::filesystem::path& path, const std::vector<OfficialRecord>& officials) {
  std::vector<Json> rows;
  for (const auto& o : officials) {
    Json j{{"author_id", o.author_id}, {"writings", o.writings}};
    if (o.attitude_ordinal) j["attitude_ordinal"] = *o.attitude_ordinal;
    if (o.support_continuous) j["support_continuous"] = *o.support_continuous;
    rows.push_back(std::move(j));
  }
  write_jsonl(path, rows);
}

double official_mean(const OfficialRecord& official, const std::map<std::string, double>& scores) {
  if (official.writings.empty()) throw DataError("official \"" + official.author_id + "\" has no scored writings");
  std::vector<double> values;
  for (const auto& w : official.writings) {
    auto it = scores.find(w);
    if (it == scores.end()) {
      throw DataError("official \"" + official.author_id + "\": writing \"" + w + "\" has no score");
    }
    values.push_back(it->second);
  }
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

EvalReport benchmark_officials(const std::vector<OfficialRecord>& officials,
                               const std::map<std::string, double>& scores) {
  if (officials.empty()) throw DataError("benchmark: no officials");
  EvalReport report;
  report.task = EvalTask::benchmark;
  std::vector<double> ord_mean, ord_value, sup_mean, sup_value;
  Json means = Json::object();
  for (const auto& o : officials) {
    o.validate();
    const double m = official_mean(o, scores);
    means[o.author_id] = m;
    if (o.attitude_ordinal) {
      ord_mean.push_back(m);
      ord_value.push_back(*o.attitude_ordinal);
    }
    if (o.support_continuous) {
      sup_mean.push_back(m);
      sup_value.push_back(*o.support_continuous);
    }
  }
  auto add = [&](const std::string& name, const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty()) return;
    double rho;
    try {
      rho = spearman(x, y);
    } catch (const DataError& e) {
      throw DataError("benchmark " + name + " over " + std::to_string(x.size()) + " officials: " + e.what());
    }
    report.rows.push_back({name, rho, 0.0, x.size(), spearman_p_value(rho, x.size())});
  };
  add("spearman:attitude_ordinal", ord_mean, ord_value);
  add("spearman:support_continuous", sup_mean, sup_value);
  report.details["official_means"] = means;
  return report;
}

}  // namespace ccr
