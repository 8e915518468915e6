#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccr {

enum class Split { train, valid, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// One corpus paragraph. `split` is empty until assign_splits runs.
struct ParagraphRecord {
  std::string id;
  std::string work_id;
  std::string title;
  std::string text;
  std::optional<Split> split;
  std::size_t char_len = 0;

  bool operator==(const ParagraphRecord&) const = default;
};

ParagraphRecord make_record(std::string id, std::string work_id, std::string title, std::string text,
                            std::optional<Split> split = std::nullopt);

struct CorpusStats {
  std::size_t n_paragraphs = 0;
  std::size_t n_works = 0;
  double mean_char_len = 0.0;
  std::array<double, 3> split_fractions{};  // train, valid, test
};

/// Requires every record to carry a split.
CorpusStats compute_stats(const std::vector<ParagraphRecord>& records);

/// Reads the canonical JSONL corpus ({id, work_id, title, text, split?}).
/// Throws DataError naming the line for malformed rows, empty text/title or
/// a duplicate id.
std::vector<ParagraphRecord> ingest_corpus(const std::filesystem::path& path);

void write_corpus(const std::filesystem::path& path, const std::vector<ParagraphRecord>& records);

struct NormalizeResult {
  std::vector<ParagraphRecord> records;
  /// Ids of paragraphs left at or above max_len because a single sentence is that long.
  std::vector<std::string> oversized;
};

/// Merges paragraphs shorter than min_len into their predecessor within the
/// same work (forward into the successor for a leading short paragraph) and
/// splits paragraphs of max_len or more at sentence ends. Texts are never
/// rewritten, only regrouped; works are never merged with each other.
NormalizeResult normalize_paragraphs(const std::vector<ParagraphRecord>& records, std::size_t min_len = 50,
                                     std::size_t max_len = 500);

struct SplitFractions {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

/// Deterministic paragraph-level split. With stratify_by_title each title's
/// paragraphs are apportioned separately so every split sees a similar mix.
std::vector<ParagraphRecord> assign_splits(std::vector<ParagraphRecord> records, SplitFractions fractions,
                                           std::uint64_t seed, bool stratify_by_title = false);

std::vector<ParagraphRecord> filter_split(const std::vector<ParagraphRecord>& records, Split split);

}  // namespace ccr
