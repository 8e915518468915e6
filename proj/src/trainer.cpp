#include "ccr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ccr/error.hpp"
#include "ccr/io.hpp"
#include "ccr/rng.hpp"
#include "ccr/stats.hpp"

namespace ccr {

void TripletLossConfig::validate() const {
  if (!(margin_alpha >= 0.0)) throw ConfigError("triplet loss margin must be nonnegative");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (warmup_epochs < 0 || warmup_epochs > epochs) throw ConfigError("warmup epochs must lie in [0, epochs]");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, const TripletLossConfig& config) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw DataError("triplet_loss: dimension mismatch");
  }
  const double d_pos = squared_distance(anchor, positive);
  const double d_neg = squared_distance(anchor, negative);
  return std::max(d_pos - d_neg + config.margin_alpha, 0.0);
}

AdapterGrad AdapterGrad::zeros(std::size_t dim_out, std::size_t dim_in) {
  return AdapterGrad{Matrix(dim_out, dim_in), Vector(dim_out, 0.0)};
}

void AdapterGrad::add(const AdapterGrad& other, double scale) {
  for (std::size_t k = 0; k < dW.data.size(); ++k) dW.data[k] += scale * other.dW.data[k];
  for (std::size_t k = 0; k < db.size(); ++k) db[k] += scale * other.db[k];
}

AdapterGrad triplet_loss_grad(std::span<const double> anchor_raw, std::span<const double> pos_raw,
                              std::span<const double> neg_raw, const AdapterParams& params,
                              const TripletLossConfig& config) {
  if (anchor_raw.size() != params.dim_in || pos_raw.size() != params.dim_in || neg_raw.size() != params.dim_in) {
    throw DataError("triplet_loss_grad: input dims do not match the adapter");
  }
  auto grad = AdapterGrad::zeros(params.dim_out, params.dim_in);
  const Vector fa = apply_adapter(params, anchor_raw);
  const Vector fp = apply_adapter(params, pos_raw);
  const Vector fn = apply_adapter(params, neg_raw);
  if (triplet_loss(fa, fp, fn, config) <= 0.0) return grad;

  // dL/dfa = 2(fn - fp), dL/dfp = -2(fa - fp), dL/dfn = 2(fa - fn)
  for (std::size_t r = 0; r < params.dim_out; ++r) {
    const double ga = 2.0 * (fn[r] - fp[r]);
    const double gp = -2.0 * (fa[r] - fp[r]);
    const double gn = 2.0 * (fa[r] - fn[r]);
    auto row = grad.dW.row(r);
    for (std::size_t c = 0; c < params.dim_in; ++c) {
      row[c] = ga * anchor_raw[c] + gp * pos_raw[c] + gn * neg_raw[c];
    }
    grad.db[r] = ga + gp + gn;
  }
  return grad;
}

AdamOptimizer::AdamOptimizer(std::size_t dim_out, std::size_t dim_in, double beta1, double beta2, double epsilon)
    : beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      m_(AdapterGrad::zeros(dim_out, dim_in)),
      v_(AdapterGrad::zeros(dim_out, dim_in)) {}

void AdamOptimizer::step(AdapterParams& params, const AdapterGrad& grad, double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](double& theta, double g, double& m, double& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g * g;
    theta -= learning_rate * (m / c1) / (std::sqrt(v / c2) + epsilon_);
  };
  for (std::size_t k = 0; k < params.W.data.size(); ++k) {
    update(params.W.data[k], grad.dW.data[k], m_.dW.data[k], v_.dW.data[k]);
  }
  for (std::size_t k = 0; k < params.b.size(); ++k) update(params.b[k], grad.db[k], m_.db[k], v_.db[k]);
}

double lr_multiplier(std::size_t step, std::size_t warmup_steps, std::size_t total_steps) {
  if (step < warmup_steps) return static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (step >= total_steps) return 0.0;
  return static_cast<double>(total_steps - step) / static_cast<double>(std::max<std::size_t>(1, total_steps - warmup_steps));
}

ValidationReport validate_adapter(const AdapterParams& params, const std::map<std::string, Vector>& raw,
                                  const std::vector<ScoredPair>& valid_pairs, int epoch) {
  if (valid_pairs.empty()) throw DataError("validation needs at least one pair");
  std::map<std::string, Vector> mapped;
  auto f = [&](const std::string& id) -> const Vector& {
    auto it = mapped.find(id);
    if (it != mapped.end()) return it->second;
    auto src = raw.find(id);
    if (src == raw.end()) throw DataError("no embedding for validation paragraph \"" + id + "\"");
    return mapped.emplace(id, apply_adapter(params, src->second)).first->second;
  };
  std::vector<double> predicted, truth;
  predicted.reserve(valid_pairs.size());
  truth.reserve(valid_pairs.size());
  for (const auto& p : valid_pairs) {
    predicted.push_back(cosine(f(p.i), f(p.j)));
    truth.push_back(p.title_sim);
  }
  return {pearson(predicted, truth), spearman(predicted, truth), valid_pairs.size(), epoch};
}

namespace {

bool better(const ValidationReport& a, const ValidationReport& b) {
  if (a.pearson != b.pearson) return a.pearson > b.pearson;
  return a.spearman > b.spearman;
}

}  // namespace

TrainResult train_adapter(const std::vector<Triplet>& triplets, const std::map<std::string, Vector>& raw,
                          const TrainConfig& train_cfg, const TripletLossConfig& loss_cfg,
                          const std::vector<ScoredPair>& valid_pairs) {
  train_cfg.validate();
  loss_cfg.validate();
  if (triplets.empty()) throw DataError("train_adapter: no triplets");
  if (valid_pairs.empty()) throw DataError("train_adapter: no validation pairs");
  if (raw.empty()) throw DataError("train_adapter: no embeddings");

  auto emb = [&](const std::string& id) -> const Vector& {
    auto it = raw.find(id);
    if (it == raw.end()) throw DataError("train_adapter: no embedding for \"" + id + "\"");
    return it->second;
  };
  const std::size_t dim = emb(triplets.front().anchor).size();

  TrainResult result;
  AdapterParams params = AdapterParams::identity(dim);
  result.adapter = params;
  result.reports.push_back(validate_adapter(params, raw, valid_pairs, 0));
  ValidationReport best = result.reports.front();

  const std::size_t n = triplets.size();
  const std::size_t steps_per_epoch = (n + train_cfg.batch_size - 1) / train_cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(train_cfg.epochs);
  const std::size_t warmup_steps = steps_per_epoch * static_cast<std::size_t>(train_cfg.warmup_epochs);

  AdamOptimizer adam(dim, dim, train_cfg.beta1, train_cfg.beta2, train_cfg.epsilon);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    Rng rng(derive_seed(train_cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += train_cfg.batch_size) {
      const std::size_t stop = std::min(n, start + train_cfg.batch_size);
      auto grad = AdapterGrad::zeros(dim, dim);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& t = triplets[order[k]];
        const auto& a = emb(t.anchor);
        const auto& p = emb(t.positive);
        const auto& q = emb(t.negative);
        const double loss =
            triplet_loss(apply_adapter(params, a), apply_adapter(params, p), apply_adapter(params, q), loss_cfg);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite triplet loss at epoch " << epoch << ", step " << step << ", anchor \"" << t.anchor
              << "\"; lower the learning rate";
          throw NumericalError(msg.str());
        }
        loss_sum += loss;
        grad.add(triplet_loss_grad(a, p, q, params, loss_cfg));
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& x : grad.dW.data) x *= scale;
      for (auto& x : grad.db) x *= scale;
      adam.step(params, grad, train_cfg.learning_rate * lr_multiplier(step, warmup_steps, total_steps));
      ++step;
    }
    for (double x : params.W.data) {
      if (!std::isfinite(x)) throw NumericalError("adapter weights diverged at epoch " + std::to_string(epoch));
    }

    auto report = validate_adapter(params, raw, valid_pairs, epoch);
    result.reports.push_back(report);
    result.log.push_back({epoch, loss_sum / static_cast<double>(n), report.pearson, report.spearman});
    if (better(report, best)) {
      best = report;
      result.adapter = params;
      result.best_epoch = epoch;
    }
  }
  return result;
}

TrainResult train_adapter(const std::vector<Triplet>& triplets, const EmbeddingBackend& backend,
                          const std::vector<ParagraphRecord>& records, const TrainConfig& train_cfg,
                          const TripletLossConfig& loss_cfg, const std::vector<ScoredPair>& valid_pairs) {
  std::set<std::string> needed;
  for (const auto& t : triplets) needed.insert({t.anchor, t.positive, t.negative});
  for (const auto& p : valid_pairs) needed.insert({p.i, p.j});
  std::vector<ParagraphRecord> subset;
  for (const auto& r : records) {
    if (needed.count(r.id)) subset.push_back(r);
  }
  return train_adapter(triplets, embed_records(backend, nullptr, subset), train_cfg, loss_cfg, valid_pairs);
}

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::vector<Json> rows;
  for (const auto& e : log) {
    rows.push_back(Json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"pearson", e.pearson}, {"spearman", e.spearman}});
  }
  write_jsonl(path, rows);
}

std::vector<SweepRow> sweep(const std::function<ValidationReport(const TrainConfig&)>& train_fn,
                            const SweepGrid& grid, const TrainConfig& base) {
  std::vector<SweepRow> rows;
  for (auto batch : grid.batch_sizes) {
    for (auto epochs : grid.epochs) {
      for (auto warmup : grid.warmup_epochs) {
        for (auto lr : grid.learning_rates) {
          TrainConfig cfg = base;
          cfg.batch_size = batch;
          cfg.epochs = epochs;
          cfg.warmup_epochs = warmup;
          cfg.learning_rate = lr;
          rows.push_back({cfg, train_fn(cfg)});
        }
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return better(a.report, b.report); });
  return rows;
}

}  // namespace ccr
