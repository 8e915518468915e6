#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccr/corpus.hpp"
#include "ccr/embedding.hpp"
#include "ccr/wordvec.hpp"

namespace ccr {

struct QuestionnaireItem {
  std::string id;
  std::string text;
  std::optional<std::string> source_item;  // original English item
};

struct Questionnaire {
  std::string construct;
  std::string language;
  std::vector<QuestionnaireItem> items;

  /// Nonempty items, unique ids, nonempty texts.
  void validate() const;
};

struct Dictionary {
  std::string construct;
  std::vector<std::string> words;

  /// Drops repeated words, keeping first occurrences.
  static Dictionary make(std::string construct, const std::vector<std::string>& words);
  void validate() const;
};

Questionnaire load_questionnaire(const std::filesystem::path& path);
void save_questionnaire(const Questionnaire& q, const std::filesystem::path& path);
/// Rejects duplicate words; use Dictionary::make to dedupe raw lists.
Dictionary load_dictionary(const std::filesystem::path& path);
void save_dictionary(const Dictionary& d, const std::filesystem::path& path);

enum class ScoreMethod { ccr, ddr };
std::string_view to_string(ScoreMethod method);

struct ScoreRecord {
  std::string paragraph_id;
  std::string construct;
  ScoreMethod method = ScoreMethod::ccr;
  double score = 0.0;
};

void write_scores(const std::filesystem::path& path, const std::vector<ScoreRecord>& scores);
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);

/// Mean cosine between the paragraph and each item.
double ccr_score(std::span<const double> paragraph_emb, const std::vector<Vector>& item_embs);

struct DdrCounts {
  std::size_t paragraph_oov = 0;
  std::size_t dictionary_oov = 0;
};

/// Cosine between the centroid of in-vocab paragraph tokens and the centroid
/// of in-vocab dictionary words.
double ddr_score(const std::vector<std::string>& paragraph_tokens, const Dictionary& dictionary,
                 const WordVectorModel& model, DdrCounts* counts = nullptr);

/// Mean cosine between the title vector and each in-vocab dictionary word.
double pm_pseudo_ground_truth(std::string_view title, const Dictionary& dictionary, const WordVectorModel& model);

struct Quote {
  std::string id;
  std::string text;
};

struct QuoteMatch {
  std::string id;
  double similarity = 0.0;
};

std::vector<Quote> read_quotes(const std::filesystem::path& path);

/// Top min(k, |corpus|) quotes by adapted cosine to the item, descending, ties by id.
std::vector<QuoteMatch> recommend_quotes(const std::string& item_text, const std::vector<Quote>& quote_corpus,
                                         const EmbeddingBackend& backend, const AdapterParams* adapter,
                                         std::size_t k);

/// Embeds questionnaire items through backend and adapter. Cache backends
/// look items up by item id.
std::vector<Vector> embed_items(const Questionnaire& q, const EmbeddingBackend& backend, const AdapterParams* adapter);

/// One CCR ScoreRecord per record, in input order.
std::vector<ScoreRecord> score_corpus(const std::vector<ParagraphRecord>& records, const Questionnaire& questionnaire,
                                      const EmbeddingBackend& backend, const AdapterParams* adapter);

/// One DDR ScoreRecord per record, in input order.
std::vector<ScoreRecord> ddr_score_corpus(const std::vector<ParagraphRecord>& records, const Dictionary& dictionary,
                                          const WordVectorModel& model);

}  // namespace ccr
