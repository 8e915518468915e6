#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/vec.hpp"

namespace ccr {

enum class Architecture { cbow, skipgram };
enum class Framework { cbow, skipgram, loaded };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);
std::string_view to_string(Framework framework);

/// Character n-gram settings for fastText-style subword vectors.
struct SubwordConfig {
  int min_n = 1;
  int max_n = 4;
  std::uint64_t bucket_count = 2'000'000;
};

struct WordVecTrainConfig {
  Architecture architecture = Architecture::skipgram;
  int dim = 300;
  int epochs = 5;
  int window = 5;
  int negative = 5;
  int min_count = 10;
  std::optional<SubwordConfig> subword;
  /// 0 selects the architecture default (0.025 skip-gram, 0.05 CBOW).
  double learning_rate = 0.0;
  double min_learning_rate = 1e-4;
  std::uint64_t seed = 42;
  /// 1 is bit-reproducible; more workers train lock-free and nondeterministically.
  int workers = 1;

  void validate() const;
  double initial_learning_rate() const;
};

/// Token -> vector table. Rows are ordered by descending training frequency
/// (file order for loaded models).
class WordVectorModel {
 public:
  WordVectorModel() = default;
  WordVectorModel(int dim, Framework framework);

  int dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  Framework framework() const { return framework_; }
  int min_count() const { return min_count_; }
  const std::optional<SubwordConfig>& subword() const { return subword_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const Matrix& vectors() const { return vectors_; }

  bool contains(std::string_view token) const;
  std::optional<std::size_t> index_of(std::string_view token) const;
  std::span<const double> row(std::size_t index) const { return vectors_.row(index); }

  /// In-vocabulary vector, else an n-gram composition in subword mode, else nullopt.
  std::optional<Vector> lookup(std::string_view token) const;

  /// Appends a token. Throws DataError on duplicates or dim mismatch.
  void add(std::string token, std::span<const double> vector);

 private:
  friend class Word2VecTrainer;

  int dim_ = 0;
  Framework framework_ = Framework::loaded;
  int min_count_ = 1;
  std::optional<SubwordConfig> subword_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  Matrix vectors_;
  // Trained n-gram rows keyed by bucket; absent buckets fall back to their
  // deterministic initial value.
  std::unordered_map<std::uint64_t, Vector> ngram_rows_;
  std::uint64_t ngram_seed_ = 0;

  Vector ngram_row(std::uint64_t bucket) const;
};

/// Bucket ids of the character n-grams of "<token>", fastText style.
std::vector<std::uint64_t> subword_buckets(std::string_view token, const SubwordConfig& cfg);

/// Whitespace/per-character segmentation of every paragraph text.
std::vector<std::vector<std::string>> tokenize_records(const std::vector<ParagraphRecord>& records);

/// Word2vec with negative sampling (unigram^0.75 noise), optional subwords.
WordVectorModel train_word_vectors(const std::vector<std::vector<std::string>>& sentences,
                                   const WordVecTrainConfig& config);

/// Standard text format: "vocab_size dim" header, then "token v1 ... v_dim".
WordVectorModel load_vectors(const std::filesystem::path& path);
void save_vectors(const WordVectorModel& model, const std::filesystem::path& path);

/// Mean of the title's token vectors. A title that is itself a vocabulary
/// entry maps to that row. Throws DataError("unrepresentable title") when no
/// token can be represented.
Vector embed_title(std::string_view title, const WordVectorModel& model);

}  // namespace ccr
