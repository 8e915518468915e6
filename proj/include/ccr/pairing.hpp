#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/vec.hpp"
#include "ccr/wordvec.hpp"

namespace ccr {

/// Percentile thresholds (in percent) for negative/positive labeling.
struct ThresholdConfig {
  double lower_pct = 10.0;
  double upper_pct = 90.0;

  void validate() const;
  static std::array<ThresholdConfig, 4> presets();
};

struct Thresholds {
  double lower = 0.0;  // pairs strictly below are negative
  double upper = 0.0;  // pairs strictly above are positive
};

enum class PairLabel { positive, negative };

std::string_view to_string(PairLabel label);

struct LabeledPair {
  std::string i;
  std::string j;
  double title_sim = 0.0;
  PairLabel label = PairLabel::positive;

  bool operator==(const LabeledPair&) const = default;
};

struct LabeledPairSet {
  std::vector<LabeledPair> pairs;
  Thresholds thresholds;
};

struct Triplet {
  std::string anchor;
  std::string positive;
  std::string negative;

  bool operator==(const Triplet&) const = default;
};

struct TripletSample {
  std::vector<Triplet> triplets;
  std::size_t skipped_anchors = 0;  // anchors lacking a positive or negative partner
};

/// Cosine similarity for every unordered pair of distinct unique titles.
class TitleSimilarities {
 public:
  /// Key order is (smaller, larger) by byte comparison.
  const std::map<std::pair<std::string, std::string>, double>& entries() const { return sims_; }
  /// Titles dropped because no token could be embedded.
  const std::vector<std::string>& excluded() const { return excluded_; }

  std::size_t size() const { return sims_.size(); }
  bool representable(const std::string& title) const;

  /// 1.0 for identical representable titles; nullopt if either title is excluded.
  std::optional<double> get(const std::string& a, const std::string& b) const;

  /// Values in key order.
  std::vector<double> values() const;

  void set(const std::string& a, const std::string& b, double sim);
  void exclude(const std::string& title) { excluded_.push_back(title); }
  void add_title(const std::string& title) { titles_.insert(title); }

 private:
  std::map<std::pair<std::string, std::string>, double> sims_;
  std::set<std::string> titles_;
  std::vector<std::string> excluded_;
};

TitleSimilarities title_similarity_matrix(const std::vector<ParagraphRecord>& records, const WordVectorModel& model);

/// Nearest-rank percentiles: value at 1-based index ceil(p/100 * N) of the sorted list.
Thresholds compute_thresholds(std::span<const double> sims, const ThresholdConfig& config);

/// Streams every labeled unordered paragraph pair (record order, i < j).
void for_each_labeled_pair(const std::vector<ParagraphRecord>& records, const TitleSimilarities& sims,
                           const Thresholds& thresholds, const std::function<void(const LabeledPair&)>& fn);

LabeledPairSet label_pairs(const std::vector<ParagraphRecord>& records, const TitleSimilarities& sims,
                           const Thresholds& thresholds);

/// One triplet per eligible anchor (records order), partners drawn uniformly.
/// Partners are restricted to `records`.
TripletSample sample_triplets_random(const LabeledPairSet& pairs, const std::vector<ParagraphRecord>& records,
                                     std::uint64_t seed);

/// Least similar positive and most similar negative under the given
/// embeddings; ties go to the smallest id.
TripletSample sample_triplets_hard(const LabeledPairSet& pairs, const std::vector<ParagraphRecord>& records,
                                   const std::map<std::string, Vector>& embeddings);

/// Paragraph pair with its title-similarity pseudo label.
struct ScoredPair {
  std::string i;
  std::string j;
  double title_sim = 0.0;

  bool operator==(const ScoredPair&) const = default;
};

/// One random partner per paragraph (records with excluded titles skipped).
std::vector<ScoredPair> sample_validation_pairs(const std::vector<ParagraphRecord>& records,
                                                const TitleSimilarities& sims, std::uint64_t seed);

void write_pairs(const std::filesystem::path& path, const LabeledPairSet& pairs);
LabeledPairSet read_pairs(const std::filesystem::path& path);
void write_triplets(const std::filesystem::path& path, const std::vector<Triplet>& triplets);
std::vector<Triplet> read_triplets(const std::filesystem::path& path);
void write_scored_pairs(const std::filesystem::path& path, const std::vector<ScoredPair>& pairs);
std::vector<ScoredPair> read_scored_pairs(const std::filesystem::path& path);

}  // namespace ccr
