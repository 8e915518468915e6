#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ccr/embedding.hpp"
#include "ccr/pairing.hpp"
#include "ccr/vec.hpp"

namespace ccr {

/// max(D+ - D- + margin, 0) with squared Euclidean distances.
struct TripletLossConfig {
  double margin_alpha = 5.0;

  void validate() const;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  int epochs = 3;
  int warmup_epochs = 1;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;

  void validate() const;
};

struct ValidationReport {
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n_pairs = 0;
  int epoch = 0;
};

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, const TripletLossConfig& config);

struct AdapterGrad {
  Matrix dW;
  Vector db;

  static AdapterGrad zeros(std::size_t dim_out, std::size_t dim_in);
  void add(const AdapterGrad& other, double scale = 1.0);
};

/// Gradient of triplet_loss(f(a), f(p), f(n)) with respect to the adapter,
/// where f is the affine adapter and a, p, n are raw backend vectors.
/// Zero for inactive triplets (loss == 0).
AdapterGrad triplet_loss_grad(std::span<const double> anchor_raw, std::span<const double> pos_raw,
                              std::span<const double> neg_raw, const AdapterParams& params,
                              const TripletLossConfig& config);

/// Adam with bias correction over W and b.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t dim_out, std::size_t dim_in, double beta1, double beta2, double epsilon);

  void step(AdapterParams& params, const AdapterGrad& grad, double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  AdapterGrad m_, v_;
};

/// Linear warmup from 0 over warmup_steps, then linear decay to 0 at total_steps.
double lr_multiplier(std::size_t step, std::size_t warmup_steps, std::size_t total_steps);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double pearson = 0.0;
  double spearman = 0.0;
};

struct TrainResult {
  AdapterParams adapter;  // best checkpoint by validation Pearson, ties by Spearman
  int best_epoch = 0;
  std::vector<ValidationReport> reports;  // epoch 0 is the identity baseline
  std::vector<EpochLog> log;
};

/// Validation: correlation of cosine(f(s_i), f(s_j)) with title similarity.
ValidationReport validate_adapter(const AdapterParams& params, const std::map<std::string, Vector>& raw,
                                  const std::vector<ScoredPair>& valid_pairs, int epoch);

/// Trains from the identity adapter. `raw` maps every id used by the
/// triplets and validation pairs to its backend embedding.
TrainResult train_adapter(const std::vector<Triplet>& triplets, const std::map<std::string, Vector>& raw,
                          const TrainConfig& train_cfg, const TripletLossConfig& loss_cfg,
                          const std::vector<ScoredPair>& valid_pairs);

/// Embeds the needed records with the backend, then trains.
TrainResult train_adapter(const std::vector<Triplet>& triplets, const EmbeddingBackend& backend,
                          const std::vector<ParagraphRecord>& records, const TrainConfig& train_cfg,
                          const TripletLossConfig& loss_cfg, const std::vector<ScoredPair>& valid_pairs);

void write_train_log(const std::filesystem::path& path, const std::vector<EpochLog>& log);

struct SweepGrid {
  std::vector<std::size_t> batch_sizes = {16, 32};
  std::vector<int> epochs = {3};
  std::vector<int> warmup_epochs = {1, 2, 3};
  std::vector<double> learning_rates = {1e-6, 1e-5, 2e-5};
};

struct SweepRow {
  TrainConfig config;
  ValidationReport report;
};

/// Every grid point trained with `base` for the remaining fields; rows sorted
/// by validation Pearson descending (Spearman breaks ties, then grid order).
std::vector<SweepRow> sweep(const std::function<ValidationReport(const TrainConfig&)>& train_fn,
                            const SweepGrid& grid, const TrainConfig& base = {});

}  // namespace ccr
