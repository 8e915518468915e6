#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/embedding.hpp"
#include "ccr/io.hpp"
#include "ccr/pairing.hpp"
#include "ccr/scoring.hpp"
#include "ccr/wordvec.hpp"

namespace ccr {

enum class EvalTask { sts_easy, sts_hard, qic, pm, benchmark };
std::string_view to_string(EvalTask task);

struct MetricRow {
  std::string name;
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  std::optional<double> p_value;
};

struct EvalReport {
  EvalTask task = EvalTask::sts_hard;
  std::vector<MetricRow> rows;
  Json details = Json::object();

  const MetricRow& row(std::string_view name) const;
  Json to_json() const;
  /// Aligned columns: name, mean, std_err, n, p.
  std::string to_table() const;
};

// ---------------------------------------------------------------------------
// STS

enum class PairSource { random, threshold };

struct StsConfig {
  PairSource source = PairSource::random;
  std::size_t rounds = 20;
  std::size_t pairs_per_round = 4308;
  std::uint64_t seed = 42;
};

/// Per round (seeded with derive_seed(seed, round)) draws pairs_per_round
/// pairs with replacement, either uniformly among paragraphs with
/// representable titles (hard task) or uniformly among threshold-labeled
/// pairs (easy task), and correlates cosine(f(s_i), f(s_j)) with title
/// similarity. `embeddings` holds adapted paragraph vectors.
EvalReport eval_sts(const std::vector<ParagraphRecord>& records, const StsConfig& config,
                    const TitleSimilarities& sims, const std::map<std::string, Vector>& embeddings,
                    const Thresholds* thresholds = nullptr);

EvalReport eval_sts(const std::vector<ParagraphRecord>& records, const StsConfig& config,
                    const TitleSimilarities& sims, const EmbeddingBackend& backend, const AdapterParams* adapter,
                    const Thresholds* thresholds = nullptr);

// ---------------------------------------------------------------------------
// QIC

/// Fold index per item. Each class is shuffled and dealt round-robin, the
/// dealer position carrying over between classes, so fold sizes and per-fold
/// class counts differ by at most one.
std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);

struct SvmConfig {
  double c = 1.0;
  int epochs = 200;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM, hinge loss, trained by seeded Pegasos-style
/// sub-gradient descent with a constant bias feature.
class LinearSvm {
 public:
  static LinearSvm train(const std::vector<Vector>& x, const std::vector<int>& y, const SvmConfig& config);

  int predict(std::span<const double> x) const;
  const std::vector<int>& classes() const { return classes_; }

 private:
  std::vector<int> classes_;
  std::vector<Vector> weights_;  // one per class, bias last
};

EvalReport eval_qic(const std::vector<Vector>& item_embs, const std::vector<int>& labels, std::size_t k = 10,
                    std::uint64_t seed = 42, const SvmConfig& svm = {});

// ---------------------------------------------------------------------------
// PM

/// Per construct, correlates the CCR score of each paragraph with the
/// dictionary pseudo ground truth of its title. Rows "pearson:<construct>"
/// and "spearman:<construct>", then the across-construct "…:mean" rows and
/// "…:pooled" rows over all (paragraph, construct) points.
EvalReport eval_pm(const std::vector<ParagraphRecord>& records, const std::vector<Questionnaire>& questionnaires,
                   const std::vector<Dictionary>& dictionaries, const EmbeddingBackend& backend,
                   const AdapterParams* adapter, const WordVectorModel& model);

/// Same, from precomputed CCR scores keyed by construct then paragraph id.
EvalReport eval_pm_scores(const std::vector<ParagraphRecord>& records,
                          const std::map<std::string, std::map<std::string, double>>& ccr_scores,
                          const std::vector<Dictionary>& dictionaries, const WordVectorModel& model);

// ---------------------------------------------------------------------------
// Officials benchmark

struct OfficialRecord {
  std::string author_id;
  std::vector<std::string> writings;
  std::optional<int> attitude_ordinal;     // -1 opposes, 0 neutral, 1 supports
  std::optional<double> support_continuous;  // in [0, 1]

  void validate() const;
};

std::vector<OfficialRecord> read_officials(const std::filesystem::path& path);
void write_officials(const std::filesystem::path& path, const std::vector<OfficialRecord>& officials);

/// Mean of the writings' scores, summed in ascending score order.
double official_mean(const OfficialRecord& official, const std::map<std::string, double>& scores);

/// Spearman (with t-approximation p-value) between per-official mean scores
/// and each attitude field present on at least one official.
EvalReport benchmark_officials(const std::vector<OfficialRecord>& officials,
                               const std::map<std::string, double>& scores);

}  // namespace ccr
